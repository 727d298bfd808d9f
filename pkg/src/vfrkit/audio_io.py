"""WAV file reading and band-limited resampling.

Every downstream stage works on mono floating-point samples at a single
working rate (8 kHz by default), so this module owns the two conversions
needed to get there: decoding PCM/float WAV files and sample-rate
conversion with a polyphase windowed-sinc filter.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from math import ceil, gcd
from pathlib import Path

import numpy as np
from scipy.signal import upfirdn

INT16_SCALE = 32768.0

# Resampler design constants: Kaiser-windowed sinc, 32 zero crossings per
# side, cutoff at 95% of the narrower Nyquist band.
KAISER_BETA = 10.0
ZERO_CROSSINGS = 32
CUTOFF_FRACTION = 0.95


class WavReadError(Exception):
    """A WAV file could not be decoded."""


class UnsupportedWavError(WavReadError):
    """Container or encoding outside PCM 16-bit / IEEE float 32-bit."""


class TruncatedWavError(WavReadError):
    """Data chunk ends before its declared size."""


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio with amplitudes in [-1, 1] at a known sample rate."""

    samples: np.ndarray
    sample_rate: int
    source_id: str = ""

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional (mono)")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain non-finite values")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate


def read_wav(path: str | Path) -> AudioBuffer:
    """Read a RIFF/WAVE file into an :class:`AudioBuffer`.

    Supports PCM 16-bit LE and IEEE float 32-bit LE, any channel count.
    Multichannel input is averaged down to mono; 16-bit samples are scaled
    by 1/32768. The buffer's ``source_id`` is the file stem.

    Raises:
        FileNotFoundError: the file does not exist.
        UnsupportedWavError: not a WAV file, or a compressed/unknown encoding.
        TruncatedWavError: the data chunk is shorter than declared.
    """
    path = Path(path)
    raw = path.read_bytes()

    if len(raw) < 12 or raw[0:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise UnsupportedWavError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        chunk_id = raw[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", raw, pos + 4)
        body_start = pos + 8
        if chunk_id == b"fmt ":
            if chunk_size < 16 or body_start + 16 > len(raw):
                raise UnsupportedWavError(f"{path}: malformed fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", raw, body_start)
        elif chunk_id == b"data":
            if body_start + chunk_size > len(raw):
                raise TruncatedWavError(
                    f"{path}: data chunk declares {chunk_size} bytes, "
                    f"only {len(raw) - body_start} present"
                )
            data = raw[body_start : body_start + chunk_size]
        # chunks are padded to even length
        pos = body_start + chunk_size + (chunk_size & 1)

    if fmt is None or data is None:
        raise UnsupportedWavError(f"{path}: missing fmt or data chunk")

    audio_format, n_channels, sample_rate, _, block_align, bits = fmt
    if audio_format == 1 and bits == 16:
        dtype, scale = np.dtype("<i2"), INT16_SCALE
    elif audio_format == 3 and bits == 32:
        dtype, scale = np.dtype("<f4"), 1.0
    else:
        raise UnsupportedWavError(
            f"{path}: unsupported encoding (format tag {audio_format}, "
            f"{bits} bits); only PCM 16-bit and IEEE float 32-bit are read"
        )
    if n_channels < 1 or sample_rate <= 0:
        raise UnsupportedWavError(f"{path}: invalid fmt fields")

    frame_bytes = dtype.itemsize * n_channels
    if block_align not in (0, frame_bytes) or len(data) % frame_bytes != 0:
        raise TruncatedWavError(f"{path}: data chunk is not a whole number of frames")

    samples = np.frombuffer(data, dtype=dtype).astype(np.float64) / scale
    if n_channels > 1:
        samples = samples.reshape(-1, n_channels).mean(axis=1)

    return AudioBuffer(samples=samples, sample_rate=sample_rate, source_id=path.stem)


def write_wav(path: str | Path, buf: AudioBuffer) -> None:
    """Write a mono PCM 16-bit WAV file (round-half-away quantization)."""
    clipped = np.clip(buf.samples, -1.0, 1.0)
    ints = np.clip(np.round(clipped * INT16_SCALE), -32768, 32767).astype("<i2")
    data = ints.tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, buf.sample_rate,
                                    buf.sample_rate * 2, 2, 16)
    header += b"data" + struct.pack("<I", len(data))
    Path(path).write_bytes(header + data)


def _design_lowpass(up: int, down: int, source_rate: int) -> np.ndarray:
    """Windowed-sinc anti-aliasing filter for the upsampled-domain rate."""
    upsampled_rate = source_rate * up
    target_rate = source_rate * up // down
    cutoff_hz = CUTOFF_FRACTION * 0.5 * min(source_rate, target_rate)
    w = cutoff_hz / upsampled_rate  # cycles per upsampled sample
    half = ceil(ZERO_CROSSINGS / (2.0 * w))
    t = np.arange(-half, half + 1, dtype=np.float64)
    taps = 2.0 * w * np.sinc(2.0 * w * t) * np.kaiser(2 * half + 1, KAISER_BETA)
    # unit average DC gain after zero-stuffing
    taps *= up / taps.sum()
    return taps


def resample(buf: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Resample to ``target_rate`` with a polyphase windowed-sinc filter.

    Output length is round(len(input) * target_rate / source_rate). When
    the rates already match the samples are copied verbatim.
    """
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    if target_rate == buf.sample_rate:
        return AudioBuffer(buf.samples.copy(), buf.sample_rate, buf.source_id)

    g = gcd(buf.sample_rate, target_rate)
    up, down = target_rate // g, buf.sample_rate // g
    n_in = len(buf.samples)
    # round-half-up in exact integer arithmetic
    n_out = (2 * n_in * up + down) // (2 * down)
    if n_in == 0 or n_out == 0:
        return AudioBuffer(np.zeros(n_out), target_rate, buf.source_id)

    taps = _design_lowpass(up, down, buf.sample_rate)
    half = len(taps) // 2
    # prepend zeros so the group delay is a whole number of output samples
    front_pad = (down - half % down) % down
    taps = np.concatenate([np.zeros(front_pad), taps])
    skip = (half + front_pad) // down

    # zero-pad the input so upfirdn yields skip + n_out output samples
    needed_conv = (skip + n_out - 1) * down + 1
    n_in_needed = ceil((needed_conv - len(taps)) / up) + 1
    x = buf.samples
    if n_in_needed > n_in:
        x = np.concatenate([x, np.zeros(n_in_needed - n_in)])

    out = upfirdn(taps, x, up=up, down=down)
    return AudioBuffer(out[skip : skip + n_out], target_rate, buf.source_id)
