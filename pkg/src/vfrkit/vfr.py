"""Entropy-based variable frame rate feature extraction.

Frame selection is driven by inter-frame entropy: short buffers of mel
spectra are treated as Gaussian samples and their differential entropy is
approximated from the trace of the covariance,

    H = K * ln(sqrt(2*pi)) + ln(Tr(Sigma)),

which is high where the spectrum changes quickly and low in steady or
silent stretches. The entropy curve is compared against three thresholds
derived from its own max/median/min, and a 2.5 ms oversampled frame grid
is decimated with a stride of 2, 3, 4, or 5 hops (effective shifts of 5,
7.5, 10, or 12.5 ms): dense sampling where information changes fast, sparse
where it does not. The selected MFCC rows form a partially
speaking-rate-normalized representation of the utterance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer
from .frontend import (
    FeatureMatrix,
    FeatureMeta,
    FrontendConfig,
    LOG_FLOOR,
    MelSpectrogram,
    frame_signal,
    mel_energies,
    mfcc,
    sliding_cmn,
)

OVERSAMPLE_SHIFT_MS = 2.5
ENTROPY_BUFFER_MS = 30.0
ENTROPY_HOP_MS = 15.0

TRACE_FLOOR = 1e-10
DEGENERATE_SPAN = 1e-6
OMEGAS = (0.7, 0.8, 0.5)

# picking strides in oversampled hops; 4 hops = the plain 10 ms rate
STRIDE_DENSE = 2
STRIDE_SEMI_DENSE = 3
STRIDE_NEUTRAL = 4
STRIDE_SPARSE = 5


@dataclass(frozen=True)
class EntropyWindowStats:
    """Mean and covariance trace of one buffered window of mel vectors."""

    mu: np.ndarray
    trace_sigma: float
    num_dims: int


@dataclass(frozen=True)
class EntropyCurve:
    """Entropy values sampled every ``hop_ms`` over ``buffer_ms`` windows."""

    values: np.ndarray
    segment_start_indices: np.ndarray  # oversampled-grid row of each buffer start
    hop_ms: float = ENTROPY_HOP_MS
    buffer_ms: float = ENTROPY_BUFFER_MS

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        starts = np.asarray(self.segment_start_indices, dtype=np.int64)
        if values.ndim != 1 or len(values) == 0:
            raise ValueError("entropy curve must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(values)):
            raise ValueError("entropy values must be finite")
        if starts.shape != values.shape:
            raise ValueError("one start index per entropy value required")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "segment_start_indices", starts)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ThresholdSet:
    """Frame-picking thresholds from the curve's max/median/min.

    t1 >= t2 >= t3 holds for any input curve; ``degenerate`` marks a curve
    too flat (max - min below 1e-6) for the branches to be meaningful.
    """

    t1: float
    t2: float
    t3: float
    m_max: float
    m_med: float
    m_min: float
    omegas: tuple[float, float, float] = OMEGAS
    degenerate: bool = False


@dataclass(frozen=True)
class FramePlan:
    """Oversampled-grid indices retained by variable-rate selection."""

    picked_indices: np.ndarray
    per_segment_stride: np.ndarray

    def __post_init__(self):
        picked = np.asarray(self.picked_indices, dtype=np.int64)
        strides = np.asarray(self.per_segment_stride, dtype=np.int64)
        if len(picked) == 0 or picked[0] != 0:
            raise ValueError("frame plan must start at index 0")
        diffs = np.diff(picked)
        if len(diffs) and (diffs.min() < STRIDE_DENSE or diffs.max() > STRIDE_SPARSE):
            raise ValueError("consecutive picks must differ by 2..5 hops")
        object.__setattr__(self, "picked_indices", picked)
        object.__setattr__(self, "per_segment_stride", strides)

    def __len__(self) -> int:
        return len(self.picked_indices)


def window_stats(buffered_rows: np.ndarray) -> EntropyWindowStats:
    """Per-dimension mean and summed population variance of a buffer."""
    rows = np.asarray(buffered_rows, dtype=np.float64)
    if rows.ndim != 2 or len(rows) < 2:
        raise ValueError("entropy needs a buffer of at least 2 rows")
    return EntropyWindowStats(
        mu=rows.mean(axis=0),
        trace_sigma=float(rows.var(axis=0, ddof=0).sum()),
        num_dims=rows.shape[1],
    )


def window_entropy(buffered_rows: np.ndarray) -> float:
    """Gaussian-approximation entropy (nats) of one buffer of mel vectors.

    The covariance trace is floored at 1e-10 so constant buffers (silence)
    yield a finite minimum instead of -inf.
    """
    stats = window_stats(buffered_rows)
    const = stats.num_dims * 0.5 * np.log(2.0 * np.pi)
    return float(const + np.log(max(stats.trace_sigma, TRACE_FLOOR)))


def entropy_curve(mel: MelSpectrogram, entropy_domain: str = "linear") -> EntropyCurve:
    """Entropy every 15 ms over 30 ms buffers of an oversampled mel grid.

    Buffers start every 6 rows and hold 12 rows. A trailing partial buffer
    is kept when it extends past the last full buffer and still holds at
    least 2 rows; shorter remainders are dropped.

    ``entropy_domain`` selects the energy domain the statistics are
    computed in: "linear" (default) or "log" (floored log energies).
    """
    if mel.shift_ms != OVERSAMPLE_SHIFT_MS:
        raise ValueError(
            f"entropy runs on the {OVERSAMPLE_SHIFT_MS} ms oversampled grid, "
            f"got shift {mel.shift_ms} ms"
        )
    if entropy_domain == "linear":
        rows = mel.rows
    elif entropy_domain == "log":
        rows = np.log(np.maximum(mel.rows, LOG_FLOOR))
    else:
        raise ValueError(f"unknown entropy domain {entropy_domain!r}")

    buffer_rows = int(round(ENTROPY_BUFFER_MS / OVERSAMPLE_SHIFT_MS))  # 12
    hop_rows = int(round(ENTROPY_HOP_MS / OVERSAMPLE_SHIFT_MS))  # 6
    n = len(rows)
    if n < buffer_rows:
        raise ValueError(f"need at least {buffer_rows} oversampled rows, got {n}")

    n_full = (n - buffer_rows) // hop_rows + 1
    starts = [hop_rows * i for i in range(n_full)]
    covered_end = starts[-1] + buffer_rows
    tail_start = hop_rows * n_full
    if n > covered_end and n - tail_start >= 2:
        starts.append(tail_start)

    values = [window_entropy(rows[s : min(s + buffer_rows, n)]) for s in starts]
    return EntropyCurve(values=np.array(values),
                        segment_start_indices=np.array(starts))


def compute_thresholds(curve: EntropyCurve) -> ThresholdSet:
    """Thresholds from the curve statistics.

    t1 = w1*max + (1-w1)*median, t2 = (1-w2)*max + w2*median,
    t3 = (1-w3)*median + w3*min with weights (0.7, 0.8, 0.5). The median of
    an even-length curve is the lower-middle element.
    """
    values = np.sort(curve.values)
    m_max = float(values[-1])
    m_min = float(values[0])
    m_med = float(values[(len(values) - 1) // 2])
    w1, w2, w3 = OMEGAS
    # median-anchored rearrangement of the mixing formulas; keeps
    # t1 >= t2 >= t3 exact even in floating point
    return ThresholdSet(
        t1=m_med + w1 * (m_max - m_med),
        t2=m_med + (1.0 - w2) * (m_max - m_med),
        t3=m_med - w3 * (m_med - m_min),
        m_max=m_max,
        m_med=m_med,
        m_min=m_min,
        degenerate=(m_max - m_min) < DEGENERATE_SPAN,
    )


def stride_for_entropy(value: float, th: ThresholdSet) -> int:
    if th.degenerate:
        return STRIDE_NEUTRAL
    if value >= th.t1:
        return STRIDE_DENSE
    if value >= th.t2:
        return STRIDE_SEMI_DENSE
    if value >= th.t3:
        return STRIDE_NEUTRAL
    return STRIDE_SPARSE


def build_frame_plan(curve: EntropyCurve, th: ThresholdSet,
                     n_oversampled: int) -> FramePlan:
    """Walk the oversampled grid, advancing by each segment's stride.

    A cursor starts at index 0 (always picked). At cursor c the governing
    segment is min(c // 6, last); its entropy picks the stride. The stride
    carries over segment boundaries rather than resetting, so no index is
    picked twice or skipped at a boundary. Degenerate curves fall back to
    the uniform 10 ms stride.
    """
    if n_oversampled < 1:
        raise ValueError("n_oversampled must be >= 1")
    strides = np.array([stride_for_entropy(v, th) for v in curve.values],
                       dtype=np.int64)
    hop_rows = int(round(curve.hop_ms / OVERSAMPLE_SHIFT_MS))
    last = len(strides) - 1

    picked = []
    cursor = 0
    while cursor < n_oversampled:
        picked.append(cursor)
        cursor += strides[min(cursor // hop_rows, last)]
    return FramePlan(picked_indices=np.array(picked, dtype=np.int64),
                     per_segment_stride=strides)


def vfr_extract(buf: AudioBuffer, cfg: FrontendConfig, apply_cmn: bool = True,
                entropy_domain: str = "linear") -> FeatureMatrix:
    """Variable-frame-rate MFCC extraction.

    Frames the signal on the 2.5 ms oversampled grid, computes the entropy
    curve and thresholds, picks frames per the resulting plan, and finally
    mean-normalizes the selected rows. Timestamps keep the true
    (non-uniform) frame centers.
    """
    over_cfg = cfg.with_shift(OVERSAMPLE_SHIFT_MS)
    frames = frame_signal(buf, over_cfg)
    mel = mel_energies(frames, over_cfg)
    curve = entropy_curve(mel, entropy_domain=entropy_domain)
    th = compute_thresholds(curve)
    plan = build_frame_plan(curve, th, len(mel))

    all_feats = mfcc(mel, over_cfg)
    meta = FeatureMeta(source_id=buf.source_id, vfr_applied=True,
                       base_shift_ms=OVERSAMPLE_SHIFT_MS)
    feats = FeatureMatrix(rows=all_feats.rows[plan.picked_indices],
                          timestamps_ms=all_feats.timestamps_ms[plan.picked_indices],
                          meta=meta)
    if apply_cmn:
        feats = sliding_cmn(feats, cfg.cmn_window_frames)
    return feats


def dump_entropy_csv(path, curve: EntropyCurve, th: ThresholdSet) -> None:
    """Diagnostic CSV: threshold header line, then one row per segment."""
    with open(path, "w", newline="") as handle:
        handle.write(f"# T1={th.t1:.9g} T2={th.t2:.9g} T3={th.t3:.9g}\n")
        handle.write("segment_index,start_ms,entropy_nats\n")
        for i, (start, value) in enumerate(
            zip(curve.segment_start_indices, curve.values)
        ):
            start_ms = start * OVERSAMPLE_SHIFT_MS
            handle.write(f"{i},{start_ms:.9g},{value:.9g}\n")
