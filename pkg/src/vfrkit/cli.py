"""Command-line entry point: one executable, one subcommand per stage.

Exit codes: 0 on success, 1 on any validation or usage error, 2 when a
corpus run completed but individual files failed. Diagnostics go to
stderr; results go to stdout or the named output files.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .audio_io import read_wav, resample
from .augment import AugmentationConfig, build_plan, read_manifest, run_plan
from .evaluation import (
    NONTARGET,
    TARGET,
    ScoreSet,
    TrialScore,
    compute_eer,
    decisions_at_eer,
    embed_utterance,
    mcnemar_test,
)
from .frontend import (
    VFRF_VERSION,
    FrontendConfig,
    extract_features,
    frame_signal,
    mel_energies,
    read_vfrf,
    write_vfrf,
)
from .toybench import BUILTIN_STYLES, run_experiment
from .vfr import compute_thresholds, dump_entropy_csv, entropy_curve, vfr_extract

VERSION_STRING = f"vfrkit {__version__} (VFRF format v{VFRF_VERSION})"


class CliError(Exception):
    """Validation failure; turns into exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise CliError(message)


def _load_buffer(path: str, sample_rate: int):
    buf = read_wav(path)
    if buf.sample_rate != sample_rate:
        buf = resample(buf, sample_rate)
    return buf


def _read_trials(path: str):
    trials = []
    with open(path) as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 3 or parts[2] not in (TARGET, NONTARGET):
                raise CliError(f"{path}:{lineno}: expected "
                               f"'enroll<TAB>test<TAB>target|nontarget'")
            trials.append(tuple(parts[:3]))
    if not trials:
        raise CliError(f"{path}: no trials found")
    return trials


def _read_scores(path: str) -> ScoreSet:
    records = []
    with open(path) as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 4 or parts[2] not in (TARGET, NONTARGET):
                raise CliError(f"{path}:{lineno}: expected "
                               f"'enroll<TAB>test<TAB>label<TAB>score'")
            records.append(TrialScore(enroll_id=parts[0], test_id=parts[1],
                                      label=parts[2], score=float(parts[3])))
    if not records:
        raise CliError(f"{path}: no scores found")
    return ScoreSet(records=tuple(records))


def _load_embedding(directory: Path, utterance_id: str):
    txt = directory / f"{utterance_id}.txt"
    if txt.exists():
        values = np.loadtxt(txt, ndmin=1)
        norm = np.linalg.norm(values)
        if norm == 0:
            raise CliError(f"{txt}: zero-norm embedding")
        from .evaluation import EmbeddingVector

        return EmbeddingVector(values=values / norm, utterance_id=utterance_id)
    vfrf = directory / f"{utterance_id}.vfrf"
    if vfrf.exists():
        return embed_utterance(read_vfrf(vfrf), utterance_id=utterance_id)
    raise CliError(f"no embedding for {utterance_id!r} in {directory} "
                   f"(looked for .txt and .vfrf)")


def cmd_extract(args) -> int:
    cfg = FrontendConfig(sample_rate=args.sample_rate, base_shift_ms=args.shift_ms)
    buf = _load_buffer(args.input, args.sample_rate)
    feats = extract_features(buf, cfg, apply_cmn=not args.no_cmn)
    write_vfrf(args.output, feats)
    print(f"{args.output}: {len(feats)} frames x {feats.dim} dims", file=sys.stderr)
    return 0


def cmd_vfr(args) -> int:
    cfg = FrontendConfig(sample_rate=args.sample_rate)
    buf = _load_buffer(args.input, args.sample_rate)
    if args.dump_entropy:
        over = cfg.with_shift(2.5)
        mel = mel_energies(frame_signal(buf, over), over)
        curve = entropy_curve(mel, entropy_domain=args.entropy_domain)
        dump_entropy_csv(args.dump_entropy, curve, compute_thresholds(curve))
    feats = vfr_extract(buf, cfg, entropy_domain=args.entropy_domain)
    write_vfrf(args.output, feats)
    print(f"{args.output}: {len(feats)} frames x {feats.dim} dims (vfr)",
          file=sys.stderr)
    return 0


def cmd_augment(args) -> int:
    cfg = FrontendConfig(sample_rate=args.sample_rate)
    manifest = read_manifest(args.manifest)
    try:
        config = AugmentationConfig(args.config)
    except ValueError:
        raise CliError(f"unknown config {args.config!r}") from None
    plan = build_plan(manifest, config, style_filter=args.style)
    result = run_plan(plan, cfg, args.output_dir, threads=args.threads)
    print(f"wrote {len(result.written)} feature files to {args.output_dir}; "
          f"index at {result.index_path}", file=sys.stderr)
    for utt_id, error in result.failures:
        print(f"FAILED {utt_id}: {error}", file=sys.stderr)
    return 0 if result.ok else 2


def cmd_embed(args) -> int:
    emb = embed_utterance(read_vfrf(args.input))
    text = "\n".join(f"{v:.9g}" for v in emb.values)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_score(args) -> int:
    trials = _read_trials(args.trials)
    directory = Path(args.embeddings)
    ids = sorted({t[0] for t in trials} | {t[1] for t in trials})
    embeddings = {i: _load_embedding(directory, i) for i in ids}
    from .evaluation import score_trials

    scores = score_trials(trials, embeddings)
    lines = [f"{r.enroll_id}\t{r.test_id}\t{r.label}\t{r.score:.6f}"
             for r in scores.records]
    out = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(out)
    else:
        sys.stdout.write(out)
    return 0


def cmd_eer(args) -> int:
    report = compute_eer(_read_scores(args.scores))
    if args.det:
        with open(args.det, "w", newline="") as handle:
            handle.write("threshold,far,frr\n")
            for thr, far, frr in report.far_frr_curve:
                handle.write(f"{thr:.9g},{far:.9g},{frr:.9g}\n")
    print(f"EER={report.eer_percent:.2f} THRESH={report.threshold:.6f}")
    return 0


def cmd_mcnemar(args) -> int:
    scores_a = _read_scores(args.scores_a)
    scores_b = _read_scores(args.scores_b)
    if len(scores_a) != len(scores_b):
        raise CliError("score files cover different numbers of trials")
    for ra, rb in zip(scores_a.records, scores_b.records):
        if (ra.enroll_id, ra.test_id, ra.label) != (rb.enroll_id, rb.test_id, rb.label):
            raise CliError("trial lists differ between the two score files")
    report = mcnemar_test(decisions_at_eer(scores_a), decisions_at_eer(scores_b))
    flags = " ".join(
        f"significant@{lvl:g}={'yes' if lvl in report.significant_at else 'no'}"
        for lvl in (0.05, 0.01, 0.005)
    )
    print(f"b={report.b} c={report.c} p={report.p_value:.6f} "
          f"method={report.method} pairing=correctness-at-own-eer-threshold")
    print(flags)
    return 0


def cmd_bench(args) -> int:
    reports = []
    for seed in range(args.seeds):
        report = run_experiment(args.speakers, args.enroll_style, args.test_style,
                                args.config, args.seed + seed,
                                duration_s=args.duration, n_test=args.n_test,
                                sample_rate=args.sample_rate)
        reports.append(report)
        print(report.to_json(), file=sys.stderr)
    payload = {
        "config": reports[0].config,
        "enroll_style": reports[0].enroll_style,
        "test_style": reports[0].test_style,
        "n_speakers": args.speakers,
        "seeds": [r.seed for r in reports],
        "per_seed_eer_percent": [r.eer_percent for r in reports],
        "median_eer_percent": statistics.median(r.eer_percent for r in reports),
        "n_target": reports[0].n_target,
        "n_nontarget": reports[0].n_nontarget,
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="vfrkit", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=VERSION_STRING)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--sample-rate", type=int, default=8000,
                        help="working sample rate; input audio is resampled to it")

    p = sub.add_parser("extract", parents=[common],
                       help="fixed-rate MFCC extraction (WAV -> VFRF)")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--shift-ms", type=float, default=10.0, choices=[10.0, 2.5],
                   help="frame shift: 10 (standard) or 2.5 (oversampled)")
    p.add_argument("--no-cmn", action="store_true",
                   help="skip sliding cepstral mean normalization")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("vfr", parents=[common],
                       help="variable-frame-rate MFCC extraction (WAV -> VFRF)")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--dump-entropy", metavar="CSV",
                   help="write the entropy curve and thresholds to a CSV")
    p.add_argument("--entropy-domain", choices=["linear", "log"], default="linear",
                   help="compute entropy on linear (default) or log mel energies")
    p.set_defaults(func=cmd_vfr)

    p = sub.add_parser("augment", parents=[common],
                       help="materialize an adaptation configuration's features")
    p.add_argument("--manifest", required=True,
                   help="CSV: utterance_id,speaker_id,style,audio_path")
    p.add_argument("--config", required=True,
                   choices=[c.value for c in AugmentationConfig])
    p.add_argument("--style", help="style filter (all but multi-style need one)")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("embed", help="statistics-pooling embedding (VFRF -> text)")
    p.add_argument("input")
    p.add_argument("-o", "--output", help="write the vector here instead of stdout")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("score", help="cosine-score trials against embeddings")
    p.add_argument("--trials", required=True,
                   help="TSV: enroll<TAB>test<TAB>target|nontarget")
    p.add_argument("--embeddings", required=True,
                   help="directory of <id>.txt vectors or <id>.vfrf features")
    p.add_argument("-o", "--output", help="scores TSV (default stdout)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eer", help="equal error rate of a scores file")
    p.add_argument("scores")
    p.add_argument("--det", metavar="CSV", help="dump the FAR/FRR curve")
    p.set_defaults(func=cmd_eer)

    p = sub.add_parser("mcnemar",
                       help="paired significance test between two score files")
    p.add_argument("--scores-a", required=True)
    p.add_argument("--scores-b", required=True)
    p.set_defaults(func=cmd_mcnemar)

    p = sub.add_parser("bench", parents=[common],
                       help="synthetic speaker-verification benchmark")
    p.add_argument("--speakers", type=int, default=20)
    p.add_argument("--enroll-style", default="neutral",
                   choices=sorted(BUILTIN_STYLES))
    p.add_argument("--test-style", default="neutral",
                   choices=sorted(BUILTIN_STYLES))
    p.add_argument("--config", default="baseline",
                   choices=[c.value for c in AugmentationConfig])
    p.add_argument("--seeds", type=int, default=1, help="number of seeds to run")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--duration", type=float, default=4.0,
                   help="audio seconds per utterance")
    p.add_argument("--n-test", type=int, default=3,
                   help="test utterances per speaker")
    p.add_argument("-o", "--output", help="write the JSON report here")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
