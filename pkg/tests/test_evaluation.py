import numpy as np
import pytest
from scipy.stats import binom, chi2

from vfrkit.evaluation import (
    NONTARGET,
    TARGET,
    EmbeddingVector,
    ScoreSet,
    TrialScore,
    compute_eer,
    decisions_at_eer,
    embed_utterance,
    mcnemar_test,
    score_trials,
)
from vfrkit.frontend import FeatureMatrix, FeatureMeta


def feats_of(rows):
    rows = np.asarray(rows, dtype=np.float64)
    ts = 10.0 * np.arange(len(rows)) + 12.5
    return FeatureMatrix(rows=rows, timestamps_ms=ts, meta=FeatureMeta(source_id="u"))


def score_set(targets, nontargets):
    records = [TrialScore("e", f"t{i}", TARGET, s) for i, s in enumerate(targets)]
    records += [TrialScore("e", f"n{i}", NONTARGET, s)
                for i, s in enumerate(nontargets)]
    return ScoreSet(records=tuple(records))


class TestEmbedUtterance:
    def test_dimension(self):
        emb = embed_utterance(feats_of(np.random.default_rng(0).normal(size=(5, 23))))
        assert emb.values.shape == (46,)
        assert np.linalg.norm(emb.values) == pytest.approx(1.0, abs=1e-12)

    def test_equal_rows_zero_std_block(self):
        emb = embed_utterance(feats_of([[3.0, -4.0], [3.0, -4.0]]))
        assert np.array_equal(emb.values[2:], [0.0, 0.0])
        # norm taken over the mean block only
        assert emb.values[:2] == pytest.approx([0.6, -0.8])

    def test_row_order_invariant(self):
        rng = np.random.default_rng(1)
        rows = rng.normal(size=(10, 4))
        a = embed_utterance(feats_of(rows))
        b = embed_utterance(feats_of(rows[::-1]))
        assert np.allclose(a.values, b.values, atol=1e-15)

    def test_needs_two_rows(self):
        with pytest.raises(ValueError):
            embed_utterance(feats_of([[1.0, 2.0]]))

    def test_zero_norm_rejected(self):
        with pytest.raises(ValueError):
            embed_utterance(feats_of([[0.0, 0.0], [0.0, 0.0]]))


class TestScoreTrials:
    def embeddings(self):
        v = np.zeros(4)
        e1 = v.copy(); e1[0] = 1.0
        e2 = v.copy(); e2[1] = 1.0
        return {
            "a": EmbeddingVector(values=e1, utterance_id="a"),
            "b": EmbeddingVector(values=e2, utterance_id="b"),
            "neg": EmbeddingVector(values=-e1, utterance_id="neg"),
        }

    def test_cosine_identities(self):
        emb = self.embeddings()
        scores = score_trials([("a", "a", TARGET), ("a", "b", NONTARGET),
                               ("a", "neg", NONTARGET)], emb)
        assert [r.score for r in scores.records] == [1.0, 0.0, -1.0]

    def test_unknown_id(self):
        with pytest.raises(KeyError):
            score_trials([("a", "missing", TARGET)], self.embeddings())

    def test_preserves_trial_order(self):
        emb = self.embeddings()
        trials = [("b", "a", NONTARGET), ("a", "a", TARGET)]
        scores = score_trials(trials, emb)
        assert [(r.enroll_id, r.test_id) for r in scores.records] == \
            [("b", "a"), ("a", "a")]


def eer_bruteforce(targets, nontargets):
    """Midpoint-threshold sweep with plain counting loops."""
    scores = sorted(set(list(targets) + list(nontargets)))
    thresholds = [scores[0] - 1.0]
    for lo, hi in zip(scores, scores[1:]):
        thresholds.append((lo + hi) / 2.0)
    thresholds.append(scores[-1] + 1.0)

    points = []
    for t in thresholds:
        far = sum(1 for s in nontargets if s >= t) / len(nontargets)
        frr = sum(1 for s in targets if s < t) / len(targets)
        points.append((far, frr))
    for (far1, frr1), (far2, frr2) in zip(points, points[1:]):
        d1, d2 = far1 - frr1, far2 - frr2
        if d1 > 0 >= d2:
            frac = d1 / (d1 - d2)
            return (far1 + frac * (far2 - far1)) * 100.0
        if d1 <= 0:
            return far1 * 100.0
    raise AssertionError("no crossing found")


class TestComputeEer:
    def test_perfect_separation(self):
        report = compute_eer(score_set([2.0, 1.5], [0.5, 1.0]))
        assert report.eer_percent == 0.0

    def test_chance(self):
        report = compute_eer(score_set([1.0, 0.0], [1.0, 0.0]))
        assert report.eer_percent == pytest.approx(50.0, abs=1e-9)

    def test_hand_case(self):
        report = compute_eer(score_set([0.9, 0.7, 0.4], [0.8, 0.3, 0.1]))
        assert report.eer_percent == pytest.approx(100 / 3, abs=1e-9)
        assert report.threshold == pytest.approx(0.5, abs=0.21)  # inside (0.4, 0.7)
        # FAR and FRR agree at the reported threshold
        far = np.mean([s >= report.threshold for s in [0.8, 0.3, 0.1]])
        frr = np.mean([s < report.threshold for s in [0.9, 0.7, 0.4]])
        assert far == frr == pytest.approx(1 / 3)

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(2024)
        for _ in range(500):
            n_t = int(rng.integers(2, 200))
            n_n = int(rng.integers(2, 200))
            targets = rng.normal(1.0, 1.0, size=n_t)
            nontargets = rng.normal(0.0, 1.0, size=n_n)
            got = compute_eer(score_set(targets, nontargets)).eer_percent
            want = eer_bruteforce(targets, nontargets)
            assert got == pytest.approx(want, abs=1e-9)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(7)
        targets = rng.normal(1.0, 1.0, size=40)
        nontargets = rng.normal(0.0, 1.0, size=60)
        base = compute_eer(score_set(targets, nontargets)).eer_percent
        for transform in (lambda s: 3.0 * s + 2.0, np.tanh,
                          lambda s: np.exp(0.5 * s)):
            moved = compute_eer(score_set(transform(targets),
                                          transform(nontargets))).eer_percent
            assert moved == pytest.approx(base, abs=1e-12)

    def test_missing_class(self):
        with pytest.raises(ValueError):
            compute_eer(score_set([1.0], []))

    def test_eer_in_range_and_curve_shape(self):
        report = compute_eer(score_set([0.9, 0.2], [0.5, 0.1]))
        assert 0.0 <= report.eer_percent <= 100.0
        fars = [far for _, far, _ in report.far_frr_curve]
        frrs = [frr for _, _, frr in report.far_frr_curve]
        assert fars[0] == 1.0 and fars[-1] == 0.0
        assert frrs[0] == 0.0 and frrs[-1] == 1.0


def mcnemar_oracle_p(b, c):
    n = b + c
    if n == 0:
        return 1.0
    return min(1.0, 2.0 * float(binom.sf(max(b, c) - 1, n, 0.5)))


def decisions_with(b, c, both_right=20, both_wrong=3):
    a = [True] * both_right + [False] * both_wrong + [False] * b + [True] * c
    bb = [True] * both_right + [False] * both_wrong + [True] * b + [False] * c
    return a, bb


class TestMcnemar:
    def test_symmetric_discordance(self):
        report = mcnemar_test(*decisions_with(5, 5))
        assert report.b == 5 and report.c == 5
        assert report.p_value == 1.0

    def test_hand_case_10_2(self):
        report = mcnemar_test(*decisions_with(10, 2))
        assert report.p_value == pytest.approx(158 / 4096, abs=1e-15)
        assert report.significant_at == (0.05,)

    def test_no_discordance(self):
        report = mcnemar_test(*decisions_with(0, 0))
        assert report.p_value == 1.0 and report.b == report.c == 0

    def test_exact_matches_binomial_oracle(self):
        for b in range(0, 31):
            for c in range(0, 31 - b):
                got = mcnemar_test(*decisions_with(b, c)).p_value
                assert got == pytest.approx(mcnemar_oracle_p(b, c), abs=1e-12), (b, c)

    def test_swap_symmetry(self):
        a, b = decisions_with(7, 3)
        r1, r2 = mcnemar_test(a, b), mcnemar_test(b, a)
        assert (r1.b, r1.c) == (r2.c, r2.b)
        assert r1.p_value == r2.p_value

    def test_chisquare_branch(self):
        report = mcnemar_test(*decisions_with(80, 40))
        assert report.method == "chi2-cc"
        stat = (abs(80 - 40) - 1) ** 2 / 120
        assert report.p_value == pytest.approx(float(chi2.sf(stat, 1)), abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mcnemar_test([True], [True, False])

    def test_significance_levels(self):
        report = mcnemar_test(*decisions_with(18, 0))
        assert report.p_value < 0.005
        assert report.significant_at == (0.05, 0.01, 0.005)


class TestDecisionsAtEer:
    def test_correctness_convention(self):
        scores = score_set([0.9, 0.7, 0.4], [0.8, 0.3, 0.1])
        decisions = decisions_at_eer(scores)
        thr = compute_eer(scores).threshold
        expected = [(r.score >= thr) == (r.label == TARGET) for r in scores.records]
        assert decisions == expected
        assert sum(not d for d in decisions) == 2  # one miss + one false accept


class TestEmbeddingVector:
    def test_norm_enforced(self):
        with pytest.raises(ValueError):
            EmbeddingVector(values=np.array([1.0, 1.0]))
