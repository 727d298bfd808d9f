"""Trial scoring and verification metrics: EER and McNemar's test.

Utterances are summarized by a small statistics-pooling embedding (mean and
standard deviation of the feature rows, length-normalized) and trials are
scored by cosine similarity. That keeps the evaluation machinery
self-contained; the metrics below do not care where scores come from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2

from .frontend import FeatureMatrix

TARGET = "target"
NONTARGET = "nontarget"

SIGNIFICANCE_LEVELS = (0.05, 0.01, 0.005)
EXACT_DISCORDANT_LIMIT = 100


@dataclass(frozen=True)
class EmbeddingVector:
    """Unit-norm mean++std summary of an utterance's feature rows."""

    values: np.ndarray
    utterance_id: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        norm = float(np.linalg.norm(values))
        if not math.isclose(norm, 1.0, abs_tol=1e-9):
            raise ValueError(f"embedding norm {norm} is not 1")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class TrialScore:
    enroll_id: str
    test_id: str
    label: str
    score: float


@dataclass(frozen=True)
class ScoreSet:
    records: tuple[TrialScore, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for rec in self.records:
            if rec.label not in (TARGET, NONTARGET):
                raise ValueError(f"unknown trial label {rec.label!r}")

    def __len__(self) -> int:
        return len(self.records)

    def target_scores(self) -> np.ndarray:
        return np.array([r.score for r in self.records if r.label == TARGET])

    def nontarget_scores(self) -> np.ndarray:
        return np.array([r.score for r in self.records if r.label == NONTARGET])


@dataclass(frozen=True)
class EerReport:
    eer_percent: float
    threshold: float
    far_frr_curve: tuple[tuple[float, float, float], ...]  # (threshold, far, frr)


@dataclass(frozen=True)
class McNemarReport:
    b: int  # system A wrong, system B right
    c: int  # system A right, system B wrong
    p_value: float
    significant_at: tuple[float, ...] = field(default_factory=tuple)
    method: str = "exact"


def embed_utterance(feats: FeatureMatrix, utterance_id: str | None = None) -> EmbeddingVector:
    """Concatenate per-dimension mean and population std, unit-normalized."""
    if len(feats) < 2:
        raise ValueError("embedding needs at least 2 feature rows")
    mean = feats.rows.mean(axis=0)
    std = feats.rows.std(axis=0, ddof=0)
    vec = np.concatenate([mean, std])
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise ValueError("all-zero feature matrix has no direction to embed")
    if utterance_id is None:
        utterance_id = feats.meta.source_id
    return EmbeddingVector(values=vec / norm, utterance_id=utterance_id)


def score_trials(trials, embeddings: dict[str, EmbeddingVector]) -> ScoreSet:
    """Cosine-score (enroll_id, test_id, label) trials against embeddings."""
    records = []
    for enroll_id, test_id, label in trials:
        try:
            e = embeddings[enroll_id]
            t = embeddings[test_id]
        except KeyError as exc:
            raise KeyError(f"no embedding for utterance {exc.args[0]!r}") from None
        records.append(TrialScore(enroll_id=enroll_id, test_id=test_id,
                                  label=label, score=float(e.values @ t.values)))
    return ScoreSet(records=tuple(records))


def _operating_points(target: np.ndarray, nontarget: np.ndarray):
    """FAR/FRR staircase evaluated below, between, and above all scores.

    Decision rule: accept iff score >= threshold, so FAR(t) is the fraction
    of nontarget scores >= t and FRR(t) the fraction of target scores < t.
    """
    all_scores = np.unique(np.concatenate([target, nontarget]))
    midpoints = (all_scores[:-1] + all_scores[1:]) / 2.0
    thresholds = np.concatenate([[all_scores[0] - 1.0], midpoints,
                                 [all_scores[-1] + 1.0]])
    target_sorted = np.sort(target)
    nontarget_sorted = np.sort(nontarget)
    far = 1.0 - np.searchsorted(nontarget_sorted, thresholds, side="left") / len(nontarget)
    frr = np.searchsorted(target_sorted, thresholds, side="left") / len(target)
    return thresholds, far, frr


def compute_eer(scores: ScoreSet) -> EerReport:
    """Equal error rate with linear interpolation at the FAR/FRR crossing.

    Operating points are the FAR/FRR step values of the threshold sweep;
    the reported threshold is interpolated along with the rates, so FAR and
    FRR agree at it by construction.
    """
    target = scores.target_scores()
    nontarget = scores.nontarget_scores()
    if len(target) == 0 or len(nontarget) == 0:
        raise ValueError("EER needs at least one target and one nontarget trial")

    thresholds, far, frr = _operating_points(target, nontarget)
    diff = far - frr  # starts at +1, ends at -1
    j = int(np.argmax(diff <= 0.0))
    if diff[j] == 0.0:
        eer, thr = far[j], thresholds[j]
    else:
        d_prev, d_next = diff[j - 1], diff[j]
        frac = d_prev / (d_prev - d_next)
        eer = far[j - 1] + frac * (far[j] - far[j - 1])
        thr = thresholds[j - 1] + frac * (thresholds[j] - thresholds[j - 1])
    curve = tuple(zip(thresholds.tolist(), far.tolist(), frr.tolist()))
    return EerReport(eer_percent=float(eer) * 100.0, threshold=float(thr),
                     far_frr_curve=curve)


def decisions_at_eer(scores: ScoreSet) -> list[bool]:
    """Per-trial correctness with accept iff score >= the EER threshold."""
    thr = compute_eer(scores).threshold
    return [(rec.score >= thr) == (rec.label == TARGET) for rec in scores.records]


def mcnemar_test(decisions_a, decisions_b) -> McNemarReport:
    """Paired significance test on discordant correctness counts.

    Uses the exact two-sided binomial p-value while b + c <= 100 and the
    chi-squared statistic with continuity correction above that. b + c = 0
    reports p = 1.0 by convention.
    """
    if len(decisions_a) != len(decisions_b):
        raise ValueError(
            f"decision lists differ in length: {len(decisions_a)} vs {len(decisions_b)}"
        )
    b = sum(1 for x, y in zip(decisions_a, decisions_b) if not x and y)
    c = sum(1 for x, y in zip(decisions_a, decisions_b) if x and not y)
    n = b + c

    if n == 0:
        p, method = 1.0, "exact"
    elif n <= EXACT_DISCORDANT_LIMIT:
        tail = sum(math.comb(n, k) for k in range(max(b, c), n + 1))
        p, method = min(1.0, 2.0 * tail / 2.0**n), "exact"
    else:
        stat = (abs(b - c) - 1.0) ** 2 / n
        p, method = float(chi2.sf(stat, df=1)), "chi2-cc"

    levels = tuple(lvl for lvl in SIGNIFICANCE_LEVELS if p < lvl)
    return McNemarReport(b=b, c=c, p_value=p, significant_at=levels, method=method)
