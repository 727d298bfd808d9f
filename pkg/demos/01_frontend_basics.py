"""Fixed-rate front-end walkthrough.

Synthesizes one utterance, runs the standard 25 ms / 10 ms MFCC pipeline
on it, and pokes at the intermediate products: windowed frames, mel
energies, cepstra, and sliding mean normalization. Finishes by writing the
features to a VFRF file and reading them back.
"""

from pathlib import Path

import numpy as np

from vfrkit import (
    FrontendConfig,
    extract_features,
    frame_signal,
    mel_energies,
    mfcc,
    read_vfrf,
    sliding_cmn,
    write_vfrf,
)
from vfrkit.toybench import sample_speaker, synth_utterance

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# A 3 second synthetic "speaker": three formant bands over a 150 Hz pitch.
speaker = sample_speaker(np.random.default_rng(4), seed=0)
buf = synth_utterance(speaker, "neutral", 3.0, seed=11)
print(f"utterance: {buf.duration_seconds:.2f} s at {buf.sample_rate} Hz "
      f"({len(buf)} samples)")

cfg = FrontendConfig(sample_rate=8000)
print(f"config: {cfg.frame_len_samples}-sample frames, "
      f"{cfg.shift_samples}-sample shift, {cfg.num_mel_filters} mel filters, "
      f"fft {cfg.fft_size}")

# Step by step: frames -> mel energies -> cepstra.
frames = frame_signal(buf, cfg)
print(f"frames: {frames.shape}  (floor((n - 200) / 80) + 1)")

mel = mel_energies(frames, cfg)
print(f"mel energies: {mel.rows.shape}, all non-negative: "
      f"{bool(np.all(mel.rows >= 0))}")

feats = mfcc(mel, cfg)
print(f"cepstra: {feats.rows.shape}, first timestamps {feats.timestamps_ms[:3]} ms")

# Sliding CMN removes slowly varying level/channel offsets: each row loses
# the mean of up to 300 surrounding rows (3 s at the 10 ms shift). With a
# window that covers the utterance from every row, the global mean
# vanishes exactly.
normalized = sliding_cmn(feats, cfg.cmn_window_frames)
full = sliding_cmn(feats, 2 * len(feats))
print(f"per-dim |mean|: {np.abs(feats.rows.mean(axis=0)).max():.3f} raw, "
      f"{np.abs(normalized.rows.mean(axis=0)).max():.3f} after 300-frame CMN, "
      f"{np.abs(full.rows.mean(axis=0)).max():.2e} with an utterance-wide window")

# The one-call version of all of the above:
same = extract_features(buf, cfg)
assert np.array_equal(same.rows, normalized.rows)

# Features travel as VFRF files (binary, little-endian, float32 payload).
path = OUT / "neutral.vfrf"
write_vfrf(path, same)
back = read_vfrf(path)
print(f"VFRF round trip: {path.name}, {len(back)} rows x {back.dim} dims, "
      f"cmn_applied={back.meta.cmn_applied}")
