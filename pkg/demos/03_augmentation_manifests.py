"""Adaptation-set manifests and feature materialization.

A backend adapted on in-domain data can be fed different development sets:
the matched style only (X files), its style-normalized rendition (X), both
together (2X, the augmentation this toolkit is about), or every style in
the corpus (4X). This demo builds a little synthetic corpus on disk and
materializes each configuration.
"""

import shutil
from pathlib import Path

import numpy as np

from vfrkit import (
    CorpusManifest,
    FrontendConfig,
    ManifestEntry,
    build_plan,
    read_vfrf,
    run_plan,
    write_manifest,
    write_wav,
)
from vfrkit.toybench import BUILTIN_STYLES, sample_speaker, synth_utterance

OUT = Path(__file__).parent / "output" / "corpus"
if OUT.exists():
    shutil.rmtree(OUT)
OUT.mkdir(parents=True)

# Four speakers, one utterance per style each: a 16-utterance corpus.
rng = np.random.default_rng(0)
entries = []
for i in range(4):
    speaker = sample_speaker(rng, seed=i)
    for style_name in BUILTIN_STYLES:
        buf = synth_utterance(speaker, style_name, 2.0, seed=31 * i)
        wav = OUT / f"spk{i}-{style_name}.wav"
        write_wav(wav, buf)
        entries.append(ManifestEntry(f"spk{i}-{style_name}", f"spk{i}",
                                     f"synthetic-{style_name}", wav))
manifest = CorpusManifest(entries=tuple(entries))
write_manifest(OUT / "manifest.csv", manifest)
print(f"corpus: {len(manifest)} utterances, styles {sorted(manifest.styles())}")

# Plan cardinalities per configuration (X = 4 neutral utterances here).
for config, style in [("baseline", "synthetic-neutral"),
                      ("vfr-norm", "synthetic-neutral"),
                      ("vfr-norm-aug", "synthetic-neutral"),
                      ("multi-style", None)]:
    plan = build_plan(manifest, config, style_filter=style)
    print(f"{config:>13}: {len(plan.outputs):2d} outputs "
          f"({sum(o.variant == 'orig' for o in plan.outputs)} orig, "
          f"{sum(o.variant == 'vfr' for o in plan.outputs)} vfr)")

# Extrinsic augmentation needs MUSAN/reverb corpora and is refused.
try:
    build_plan(manifest, "extrinsic-aug", style_filter="synthetic-neutral")
except ValueError as exc:
    print(f"extrinsic-aug: rejected ({exc})")

# Materialize the 2X configuration and peek at the index.
cfg = FrontendConfig(sample_rate=8000)
plan = build_plan(manifest, "vfr-norm-aug", style_filter="synthetic-neutral")
result = run_plan(plan, cfg, OUT / "features", threads=2)
print(f"\nwrote {len(result.written)} files, failures: {len(result.failures)}")
print((OUT / "features" / "index.csv").read_text().strip())

orig = read_vfrf(OUT / "features" / "spk0-neutral.vfrf")
vfr = read_vfrf(OUT / "features" / "spk0-neutral-vfr.vfrf")
print(f"\nspk0-neutral: {len(orig)} fixed-rate rows vs {len(vfr)} "
      f"variable-rate rows, same {orig.dim}-dim cepstra")
