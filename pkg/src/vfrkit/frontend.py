"""Fixed-grid short-time analysis: framing, mel energies, MFCCs, CMN.

The same machinery serves two grids: the ordinary 10 ms frame shift and the
dense 2.5 ms "oversampled" grid that variable-frame-rate selection draws
from. Cepstra are 23-dimensional by default, computed from 23 triangular
mel filters with an orthonormal DCT-II over floored log energies.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.fft import dct

from .audio_io import AudioBuffer

LOG_FLOOR = 1e-10

VFRF_MAGIC = b"VFRF"
VFRF_VERSION = 1
_FLAG_CMN = 0x01
_FLAG_VFR = 0x02


class VfrfError(Exception):
    """A VFRF feature file could not be decoded."""


def mel_scale(freq_hz):
    return 1127.0 * np.log(1.0 + np.asarray(freq_hz, dtype=np.float64) / 700.0)


def inverse_mel_scale(mel):
    return 700.0 * (np.exp(np.asarray(mel, dtype=np.float64) / 1127.0) - 1.0)


@dataclass(frozen=True)
class FrontendConfig:
    """Analysis parameters tied to one working sample rate.

    ``fft_size=0`` and ``high_freq_hz=0.0`` auto-fill to the smallest power
    of two covering a frame and to Nyquist minus 20 Hz respectively.
    """

    sample_rate: int = 8000
    frame_len_ms: float = 25.0
    base_shift_ms: float = 10.0
    fft_size: int = 0
    num_mel_filters: int = 23
    num_ceps: int = 23
    low_freq_hz: float = 20.0
    high_freq_hz: float = 0.0
    preemph: float = 0.97
    cmn_window_frames: int = 300

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not self.frame_len_ms > self.base_shift_ms > 0:
            raise ValueError("need frame_len_ms > base_shift_ms > 0")
        if self.num_ceps > self.num_mel_filters:
            raise ValueError("num_ceps must not exceed num_mel_filters")
        if self.fft_size == 0:
            size = 1
            while size < self.frame_len_samples:
                size *= 2
            object.__setattr__(self, "fft_size", size)
        if self.fft_size < self.frame_len_samples:
            raise ValueError("fft_size smaller than the frame length")
        if self.high_freq_hz == 0.0:
            object.__setattr__(self, "high_freq_hz", 0.5 * self.sample_rate - 20.0)
        if not self.low_freq_hz < self.high_freq_hz <= 0.5 * self.sample_rate:
            raise ValueError("need low_freq_hz < high_freq_hz <= Nyquist")
        if self.cmn_window_frames < 1:
            raise ValueError("cmn_window_frames must be >= 1")

    @property
    def frame_len_samples(self) -> int:
        return int(round(self.frame_len_ms * self.sample_rate / 1000.0))

    @property
    def shift_samples(self) -> int:
        return int(round(self.base_shift_ms * self.sample_rate / 1000.0))

    def with_shift(self, shift_ms: float) -> "FrontendConfig":
        return replace(self, base_shift_ms=shift_ms)


@dataclass(frozen=True)
class MelSpectrogram:
    """Non-negative linear mel-filter energies on a uniform frame grid."""

    rows: np.ndarray  # (n_frames, num_mel_filters)
    shift_ms: float
    frame_len_ms: float
    sample_rate: int

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2:
            raise ValueError("mel rows must be 2-D")
        if not np.all(np.isfinite(rows)) or np.any(rows < 0):
            raise ValueError("mel energies must be finite and non-negative")
        object.__setattr__(self, "rows", rows)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def num_filters(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True)
class FeatureMeta:
    source_id: str = ""
    cmn_applied: bool = False
    vfr_applied: bool = False
    base_shift_ms: float = 10.0


@dataclass(frozen=True)
class FeatureMatrix:
    """Cepstral rows with per-row center timestamps (ms)."""

    rows: np.ndarray
    timestamps_ms: np.ndarray
    meta: FeatureMeta = FeatureMeta()

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        ts = np.asarray(self.timestamps_ms, dtype=np.float64)
        if rows.ndim != 2:
            raise ValueError("feature rows must be 2-D")
        if ts.shape != (len(rows),):
            raise ValueError("one timestamp per row required")
        if not (np.all(np.isfinite(rows)) and np.all(np.isfinite(ts))):
            raise ValueError("features and timestamps must be finite")
        if len(ts) > 1 and not np.all(np.diff(ts) > 0):
            raise ValueError("timestamps must be strictly increasing")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "timestamps_ms", ts)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


def frame_signal(buf: AudioBuffer, cfg: FrontendConfig) -> np.ndarray:
    """Slice, pre-emphasize, and Hamming-window a signal.

    Frame i covers samples [i*shift, i*shift + frame_len); a trailing
    partial frame is dropped. Pre-emphasis runs within each frame with the
    first sample replicated for the off-frame predecessor.
    """
    if buf.sample_rate != cfg.sample_rate:
        raise ValueError(
            f"buffer rate {buf.sample_rate} != config rate {cfg.sample_rate}"
        )
    n = len(buf.samples)
    flen, shift = cfg.frame_len_samples, cfg.shift_samples
    if n < flen:
        raise ValueError(f"signal of {n} samples shorter than one {flen}-sample frame")
    n_frames = (n - flen) // shift + 1
    idx = shift * np.arange(n_frames)[:, None] + np.arange(flen)[None, :]
    frames = buf.samples[idx]

    emphasized = np.empty_like(frames)
    emphasized[:, 1:] = frames[:, 1:] - cfg.preemph * frames[:, :-1]
    emphasized[:, 0] = frames[:, 0] * (1.0 - cfg.preemph)

    window = 0.54 - 0.46 * np.cos(2.0 * np.pi * np.arange(flen) / (flen - 1))
    return emphasized * window[None, :]


@lru_cache(maxsize=8)
def _mel_filterbank(sample_rate: int, fft_size: int, num_filters: int,
                    low_freq_hz: float, high_freq_hz: float) -> np.ndarray:
    """Triangular filters with centers equally spaced on the mel scale.

    Returns a (num_filters, fft_size // 2 + 1) weight matrix; triangles are
    evaluated in the mel domain, so weights of adjacent filters sum to one
    between their centers.
    """
    breakpoints = np.linspace(mel_scale(low_freq_hz), mel_scale(high_freq_hz),
                              num_filters + 2)
    bin_freqs = np.arange(fft_size // 2 + 1) * (sample_rate / fft_size)
    bin_mels = mel_scale(bin_freqs)

    left = breakpoints[:-2, None]
    center = breakpoints[1:-1, None]
    right = breakpoints[2:, None]
    rising = (bin_mels[None, :] - left) / (center - left)
    falling = (right - bin_mels[None, :]) / (right - center)
    weights = np.minimum(rising, falling)
    weights[weights < 0.0] = 0.0
    weights.flags.writeable = False
    return weights


def mel_filterbank(cfg: FrontendConfig) -> np.ndarray:
    return _mel_filterbank(cfg.sample_rate, cfg.fft_size, cfg.num_mel_filters,
                           cfg.low_freq_hz, cfg.high_freq_hz)


def filter_center_frequencies(cfg: FrontendConfig) -> np.ndarray:
    """Center frequency (Hz) of each mel filter."""
    breakpoints = np.linspace(mel_scale(cfg.low_freq_hz), mel_scale(cfg.high_freq_hz),
                              cfg.num_mel_filters + 2)
    return inverse_mel_scale(breakpoints[1:-1])


def mel_energies(frames: np.ndarray, cfg: FrontendConfig) -> MelSpectrogram:
    """Linear (not log) mel-filter energies of windowed frames."""
    spectrum = np.fft.rfft(frames, n=cfg.fft_size, axis=1)
    power = spectrum.real**2 + spectrum.imag**2
    energies = power @ mel_filterbank(cfg).T
    return MelSpectrogram(rows=energies, shift_ms=cfg.base_shift_ms,
                          frame_len_ms=cfg.frame_len_ms, sample_rate=cfg.sample_rate)


def mfcc(mel: MelSpectrogram, cfg: FrontendConfig,
         meta: FeatureMeta | None = None) -> FeatureMatrix:
    """Orthonormal DCT-II of floored log mel energies.

    Keeps coefficients 0..num_ceps-1; timestamps are frame centers.
    """
    log_energies = np.log(np.maximum(mel.rows, LOG_FLOOR))
    ceps = dct(log_energies, type=2, norm="ortho", axis=1)[:, : cfg.num_ceps]
    timestamps = mel.shift_ms * np.arange(len(mel)) + mel.frame_len_ms / 2.0
    if meta is None:
        meta = FeatureMeta(base_shift_ms=mel.shift_ms)
    return FeatureMatrix(rows=ceps, timestamps_ms=timestamps, meta=meta)


def sliding_cmn(feats: FeatureMatrix, window_frames: int = 300) -> FeatureMatrix:
    """Subtract per-dimension means over a centered sliding window.

    The window holds up to ``window_frames`` rows and shrinks at the
    utterance edges instead of shifting; it is counted in rows, not
    milliseconds, so variable-rate features follow the same rule. Even
    window sizes take the extra row on the right.
    """
    if window_frames < 1:
        raise ValueError("window_frames must be >= 1")
    n = len(feats)
    if n == 0:
        raise ValueError("cannot normalize an empty feature matrix")

    csum = np.vstack([np.zeros((1, feats.dim)), np.cumsum(feats.rows, axis=0)])
    i = np.arange(n)
    lo = np.maximum(0, i - (window_frames - 1) // 2)
    hi = np.minimum(n, i + window_frames // 2 + 1)
    means = (csum[hi] - csum[lo]) / (hi - lo)[:, None]
    return FeatureMatrix(rows=feats.rows - means, timestamps_ms=feats.timestamps_ms,
                         meta=replace(feats.meta, cmn_applied=True))


def extract_features(buf: AudioBuffer, cfg: FrontendConfig,
                     apply_cmn: bool = True) -> FeatureMatrix:
    """Fixed-rate pipeline: frame -> mel -> MFCC (-> sliding CMN)."""
    frames = frame_signal(buf, cfg)
    mel = mel_energies(frames, cfg)
    feats = mfcc(mel, cfg, meta=FeatureMeta(source_id=buf.source_id,
                                            base_shift_ms=cfg.base_shift_ms))
    if apply_cmn:
        feats = sliding_cmn(feats, cfg.cmn_window_frames)
    return feats


def write_vfrf(path: str | Path, feats: FeatureMatrix) -> None:
    """Write the little-endian VFRF binary feature format (version 1)."""
    flags = (_FLAG_CMN if feats.meta.cmn_applied else 0) | (
        _FLAG_VFR if feats.meta.vfr_applied else 0
    )
    header = VFRF_MAGIC + struct.pack(
        "<IIIBf", VFRF_VERSION, len(feats), feats.dim, flags,
        feats.meta.base_shift_ms,
    )
    body = feats.timestamps_ms.astype("<f8").tobytes()
    body += feats.rows.astype("<f4").tobytes()
    Path(path).write_bytes(header + body)


def read_vfrf(path: str | Path) -> FeatureMatrix:
    path = Path(path)
    raw = path.read_bytes()
    header_len = 4 + struct.calcsize("<IIIBf")
    if len(raw) < header_len or raw[:4] != VFRF_MAGIC:
        raise VfrfError(f"{path}: not a VFRF file")
    version, num_rows, dim, flags, base_shift_ms = struct.unpack_from(
        "<IIIBf", raw, 4
    )
    if version != VFRF_VERSION:
        raise VfrfError(f"{path}: unsupported VFRF version {version}")
    expected = header_len + 8 * num_rows + 4 * num_rows * dim
    if len(raw) != expected:
        raise VfrfError(f"{path}: expected {expected} bytes, found {len(raw)}")
    timestamps = np.frombuffer(raw, dtype="<f8", count=num_rows, offset=header_len)
    values = np.frombuffer(raw, dtype="<f4", count=num_rows * dim,
                           offset=header_len + 8 * num_rows)
    meta = FeatureMeta(source_id=path.stem, cmn_applied=bool(flags & _FLAG_CMN),
                       vfr_applied=bool(flags & _FLAG_VFR),
                       base_shift_ms=float(np.float32(base_shift_ms)))
    return FeatureMatrix(rows=values.reshape(num_rows, dim).astype(np.float64),
                         timestamps_ms=timestamps.astype(np.float64), meta=meta)


def write_feature_csv(path: str | Path, feats: FeatureMatrix) -> None:
    """Text export: one row per frame, timestamp then coefficients."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        for ts, row in zip(feats.timestamps_ms, feats.rows):
            writer.writerow([f"{ts:.9g}"] + [f"{v:.9g}" for v in row])
