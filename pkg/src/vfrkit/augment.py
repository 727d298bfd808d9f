"""Corpus manifests and feature materialization for adaptation setups.

Four buildable configurations mirror how a backend's adaptation data can be
assembled from one in-domain corpus: a single matched style (baseline, size
X), its style-normalized version (X), original plus normalized together
(2X), and all styles pooled (4X for a four-style corpus). Extrinsic
noise/reverb augmentation is named but rejected: it needs external corpora
that are out of scope here.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .audio_io import read_wav, resample
from .frontend import FrontendConfig, extract_features, write_vfrf
from .vfr import vfr_extract

NAMED_STYLES = {"read", "narrative", "conversation", "pet-directed"}
SYNTHETIC_PREFIX = "synthetic-"

VFR_SUFFIX = "-vfr"
ORIG = "orig"
VFR = "vfr"

INDEX_FIELDS = ("feature_path", "utterance_id", "speaker_id", "style", "variant")
MANIFEST_FIELDS = ("utterance_id", "speaker_id", "style", "audio_path")


class AugmentationConfig(str, Enum):
    BASELINE = "baseline"
    VFR_NORM = "vfr-norm"
    VFR_NORM_AUG = "vfr-norm-aug"
    MULTI_STYLE = "multi-style"
    EXTRINSIC_AUG = "extrinsic-aug"


def _check_style(style: str) -> str:
    if style in NAMED_STYLES or style.startswith(SYNTHETIC_PREFIX):
        return style
    raise ValueError(
        f"unknown style {style!r}; expected one of {sorted(NAMED_STYLES)} "
        f"or a '{SYNTHETIC_PREFIX}*' label"
    )


@dataclass(frozen=True)
class ManifestEntry:
    utterance_id: str
    speaker_id: str
    style: str
    audio_path: Path


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple[ManifestEntry, ...]
    set_label: str = "development"

    def __post_init__(self):
        entries = tuple(self.entries)
        ids = [e.utterance_id for e in entries]
        if len(set(ids)) != len(ids):
            raise ValueError("utterance_ids must be unique")
        paths = [str(e.audio_path) for e in entries]
        if len(set(paths)) != len(paths):
            raise ValueError("audio paths must be distinct")
        for e in entries:
            _check_style(e.style)
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    def styles(self) -> set[str]:
        return {e.style for e in self.entries}


@dataclass(frozen=True)
class PlannedOutput:
    feature_path: str  # relative to the run's output directory
    source_utterance_id: str
    variant: str  # ORIG or VFR


@dataclass(frozen=True)
class AugmentationPlan:
    config: AugmentationConfig
    input: CorpusManifest
    outputs: tuple[PlannedOutput, ...]


@dataclass
class RunResult:
    index_path: Path
    written: list[str]
    failures: list[tuple[str, str]]  # (utterance_id, error message)

    @property
    def ok(self) -> bool:
        return not self.failures


def read_manifest(path: str | Path, set_label: str = "development") -> CorpusManifest:
    """Read a `utterance_id,speaker_id,style,audio_path` CSV manifest.

    Relative audio paths are resolved against the manifest's directory.
    """
    path = Path(path)
    base = path.parent
    entries = []
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        missing = set(MANIFEST_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: manifest missing columns {sorted(missing)}")
        for row in reader:
            audio = Path(row["audio_path"])
            if not audio.is_absolute():
                audio = base / audio
            entries.append(ManifestEntry(utterance_id=row["utterance_id"],
                                         speaker_id=row["speaker_id"],
                                         style=row["style"], audio_path=audio))
    return CorpusManifest(entries=tuple(entries), set_label=set_label)


def write_manifest(path: str | Path, manifest: CorpusManifest) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(MANIFEST_FIELDS)
        for e in manifest.entries:
            writer.writerow([e.utterance_id, e.speaker_id, e.style, e.audio_path])


def build_plan(manifest: CorpusManifest, config: AugmentationConfig,
               style_filter: str | None = None) -> AugmentationPlan:
    """Lay out which feature files a configuration materializes.

    Baseline and vfr-norm produce one file per filtered utterance (orig or
    vfr respectively), vfr-norm-aug produces both (2X), and multi-style
    takes every style as orig. The first three require a style filter;
    multi-style forbids one.
    """
    config = AugmentationConfig(config)
    if config is AugmentationConfig.EXTRINSIC_AUG:
        raise ValueError(
            "extrinsic-aug needs external noise/reverb corpora (MUSAN, room "
            "impulse responses) and is not materializable by this toolkit"
        )
    if config is AugmentationConfig.MULTI_STYLE:
        if style_filter is not None:
            raise ValueError("multi-style uses every style; drop the style filter")
        selected = manifest.entries
    else:
        if style_filter is None:
            raise ValueError(f"{config.value} requires a style filter")
        _check_style(style_filter)
        selected = tuple(e for e in manifest.entries if e.style == style_filter)
    if not selected:
        raise ValueError(f"no utterances match style filter {style_filter!r}")

    outputs = []
    for entry in selected:
        if config in (AugmentationConfig.BASELINE, AugmentationConfig.MULTI_STYLE,
                      AugmentationConfig.VFR_NORM_AUG):
            outputs.append(PlannedOutput(f"{entry.utterance_id}.vfrf",
                                         entry.utterance_id, ORIG))
        if config in (AugmentationConfig.VFR_NORM, AugmentationConfig.VFR_NORM_AUG):
            outputs.append(PlannedOutput(f"{entry.utterance_id}{VFR_SUFFIX}.vfrf",
                                         entry.utterance_id, VFR))
    return AugmentationPlan(config=config, input=manifest, outputs=tuple(outputs))


def _extract_one(entry: ManifestEntry, variant: str, cfg: FrontendConfig,
                 out_path: Path) -> None:
    buf = read_wav(entry.audio_path)
    if buf.sample_rate != cfg.sample_rate:
        buf = resample(buf, cfg.sample_rate)
    if variant == VFR:
        feats = vfr_extract(buf, cfg)
    else:
        feats = extract_features(buf, cfg)
    write_vfrf(out_path, feats)


def run_plan(plan: AugmentationPlan, cfg: FrontendConfig,
             output_dir: str | Path, threads: int = 1) -> RunResult:
    """Materialize a plan's feature files plus an index CSV.

    Per-file failures are recorded and the run continues; the index lists
    only files that were written, in plan order regardless of scheduling.
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    by_id = {e.utterance_id: e for e in plan.input.entries}

    def work(out: PlannedOutput):
        entry = by_id[out.source_utterance_id]
        try:
            _extract_one(entry, out.variant, cfg, output_dir / out.feature_path)
            return None
        except Exception as exc:  # per-entry isolation
            return f"{type(exc).__name__}: {exc}"

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            errors = list(pool.map(work, plan.outputs))
    else:
        errors = [work(out) for out in plan.outputs]

    written, failures, index_rows = [], [], []
    for out, error in zip(plan.outputs, errors):
        entry = by_id[out.source_utterance_id]
        utt_id = out.source_utterance_id + (VFR_SUFFIX if out.variant == VFR else "")
        if error is None:
            written.append(out.feature_path)
            index_rows.append([out.feature_path, utt_id, entry.speaker_id,
                               entry.style, out.variant])
        else:
            failures.append((utt_id, error))

    index_path = output_dir / "index.csv"
    with open(index_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(INDEX_FIELDS)
        writer.writerows(index_rows)
    return RunResult(index_path=index_path, written=written, failures=failures)
