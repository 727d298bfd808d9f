"""Acceptance suite: one test per release criterion, at stated tolerances.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS/FAIL line
per criterion alongside the pytest verdicts.
"""

import functools
import statistics
import time

import numpy as np
import pytest
from scipy.stats import binom

from vfrkit.audio_io import write_wav
from vfrkit.cli import main as cli_main
from vfrkit.evaluation import compute_eer, mcnemar_test
from vfrkit.frontend import (
    FeatureMatrix,
    FeatureMeta,
    FrontendConfig,
    extract_features,
    read_vfrf,
    write_vfrf,
)
from vfrkit.toybench import (
    BUILTIN_STYLES,
    run_experiment,
    sample_speaker,
    synth_utterance,
)
from vfrkit.vfr import (
    EntropyCurve,
    ThresholdSet,
    build_frame_plan,
    compute_thresholds,
    window_entropy,
)

from test_evaluation import eer_bruteforce, score_set, decisions_with

CFG = FrontendConfig(sample_rate=8000)


def criterion(name, limit_s):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            start = time.monotonic()
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"\nACCEPTANCE {name}: FAIL")
                raise
            elapsed = time.monotonic() - start
            print(f"\nACCEPTANCE {name}: PASS ({elapsed:.1f}s, limit {limit_s:g}s)")
            assert elapsed < limit_s, f"{name} exceeded {limit_s}s ({elapsed:.1f}s)"
        return wrapper

    return decorate


def curve_of(values):
    values = np.asarray(values, dtype=np.float64)
    return EntropyCurve(values=values,
                        segment_start_indices=6 * np.arange(len(values)))


@criterion("entropy-formula", 1.0)
def test_entropy_formula():
    rows = np.zeros((2, 23))
    rows[1, 0] = 2.0  # population trace exactly 1
    assert window_entropy(rows) == pytest.approx(21.135586, abs=1e-6)

    rng = np.random.default_rng(101)
    for _ in range(1000):
        buf = rng.uniform(0.5, 4.0, size=(12, 23))
        c = rng.uniform(0.5, 3.0)
        shift = window_entropy(c * buf) - window_entropy(buf)
        assert abs(shift - 2.0 * np.log(c)) < 1e-9


@criterion("thresholds", 1.0)
def test_thresholds():
    th = compute_thresholds(curve_of([10.0, 4.0, 2.0]))
    assert th.t1 == pytest.approx(8.2, abs=1e-12)
    assert th.t2 == pytest.approx(5.2, abs=1e-12)
    assert th.t3 == pytest.approx(3.0, abs=1e-12)

    rng = np.random.default_rng(202)
    for _ in range(1000):
        n = int(rng.integers(1, 50))
        th = compute_thresholds(curve_of(rng.normal(0, 5, size=n)))
        assert th.t1 >= th.t2 >= th.t3


@criterion("frame-plan", 5.0)
def test_frame_plan():
    degenerate = ThresholdSet(t1=1, t2=1, t3=1, m_max=1, m_med=1, m_min=1,
                              degenerate=True)
    plan = build_frame_plan(curve_of([1.0] * 7), degenerate, 41)
    assert plan.picked_indices.tolist() == list(range(0, 41, 4))

    th = ThresholdSet(t1=5.0, t2=3.0, t3=1.0, m_max=9, m_med=4, m_min=0)
    plan = build_frame_plan(curve_of([6.0]), th, 12)
    assert plan.picked_indices.tolist() == [0, 2, 4, 6, 8, 10]
    plan = build_frame_plan(curve_of([6.0, 0.5]), th, 17)
    assert plan.picked_indices.tolist() == [0, 2, 4, 6, 11, 16]

    rng = np.random.default_rng(303)
    for _ in range(1000):
        n_seg = int(rng.integers(1, 30))
        curve = curve_of(rng.normal(0, 3, size=n_seg))
        n_ov = int(rng.integers(1, 6 * n_seg + 12))
        picked = build_frame_plan(curve, compute_thresholds(curve),
                                  n_ov).picked_indices
        diffs = np.diff(picked)
        assert len(diffs) == 0 or (diffs.min() >= 2 and diffs.max() <= 5)
        assert np.ceil(n_ov / 5) <= len(picked) <= np.ceil(n_ov / 2)
        assert picked[0] == 0 and picked[-1] < n_ov


@criterion("fixed-rate-equivalence", 5.0)
def test_fixed_rate_equivalence():
    th = ThresholdSet(t1=10.0, t2=6.0, t3=2.0, m_max=12, m_med=5, m_min=0)
    rng = np.random.default_rng(404)
    for _ in range(200):
        n_seg = int(rng.integers(1, 25))
        values = rng.uniform(2.0, 6.0 - 1e-9, size=n_seg)  # all in [t3, t2)
        n_ov = int(rng.integers(1, 6 * n_seg + 12))
        picked = build_frame_plan(curve_of(values), th, n_ov).picked_indices
        assert picked.tolist() == list(range(0, n_ov, 4))


@criterion("eer-oracle", 10.0)
def test_eer_oracle():
    report = compute_eer(score_set([0.9, 0.7, 0.4], [0.8, 0.3, 0.1]))
    assert report.eer_percent == pytest.approx(33.333, abs=1e-3)

    rng = np.random.default_rng(505)
    for _ in range(500):
        targets = rng.normal(1.0, 1.0, size=int(rng.integers(2, 200)))
        nontargets = rng.normal(0.0, 1.0, size=int(rng.integers(2, 200)))
        got = compute_eer(score_set(targets, nontargets)).eer_percent
        assert got == pytest.approx(eer_bruteforce(targets, nontargets), abs=1e-9)


@criterion("mcnemar-exact", 5.0)
def test_mcnemar_exact():
    report = mcnemar_test(*decisions_with(10, 2))
    assert report.p_value == pytest.approx(158 / 4096, abs=1e-15)

    for b in range(0, 31):
        for c in range(0, 31 - b):
            got = mcnemar_test(*decisions_with(b, c)).p_value
            n = b + c
            want = 1.0 if n == 0 else min(1.0, 2.0 * float(
                binom.sf(max(b, c) - 1, n, 0.5)))
            assert got == pytest.approx(want, abs=1e-12), (b, c)


@criterion("frame-count-normalization", 120.0)
def test_frame_count_normalization():
    from vfrkit.vfr import vfr_extract

    neutral = BUILTIN_STYLES["neutral"]
    slow = neutral.with_tempo(1.5)
    rng = np.random.default_rng(0)
    ok = 0
    for i in range(100):
        spk = sample_speaker(rng, seed=i)
        seed = int(rng.integers(2**31))
        u = synth_utterance(spk, neutral, 3.5, seed)
        v = synth_utterance(spk, slow, 3.5, seed)
        fixed_ratio = len(extract_features(v, CFG)) / len(extract_features(u, CFG))
        vfr_ratio = len(vfr_extract(v, CFG)) / len(vfr_extract(u, CFG))
        if vfr_ratio < fixed_ratio:
            ok += 1
    print(f"  frame-count normalization held for {ok}/100 utterance pairs")
    assert ok >= 90


@criterion("directional-replication", 600.0)
def test_directional_replication():
    matched, mismatched, vfraug = [], [], []
    for seed in range(5):
        matched.append(run_experiment(
            24, "neutral", "neutral", "baseline", seed).eer_percent)
        mismatched.append(run_experiment(
            24, "neutral", "slow", "baseline", seed).eer_percent)
        vfraug.append(run_experiment(
            24, "neutral", "slow", "vfr-norm-aug", seed).eer_percent)
    med_m = statistics.median(matched)
    med_x = statistics.median(mismatched)
    med_a = statistics.median(vfraug)
    print(f"  median EER: matched {med_m:.2f}%  mismatched {med_x:.2f}%  "
          f"vfr-norm-aug {med_a:.2f}%")
    assert med_x >= med_m, "style mismatch must not beat the matched protocol"
    assert med_a <= med_x, "vfr augmentation must not hurt the mismatched protocol"


@criterion("format-roundtrip", 5.0)
def test_format_roundtrip(tmp_path):
    rng = np.random.default_rng(606)
    for i in range(100):
        n = int(rng.integers(1, 60))
        dim = int(rng.integers(1, 30))
        feats = FeatureMatrix(
            rows=rng.standard_normal((n, dim)).astype(np.float32),
            timestamps_ms=np.cumsum(rng.uniform(1.0, 20.0, size=n)),
            meta=FeatureMeta(cmn_applied=bool(i % 2), vfr_applied=bool(i % 3 == 0),
                             base_shift_ms=2.5),
        )
        p1, p2 = tmp_path / "a.vfrf", tmp_path / "b.vfrf"
        write_vfrf(p1, feats)
        write_vfrf(p2, read_vfrf(p1))
        assert p1.read_bytes() == p2.read_bytes()


@criterion("pipeline-determinism", 120.0)
def test_pipeline_determinism(tmp_path):
    spk = sample_speaker(np.random.default_rng(3), seed=0)
    wav = tmp_path / "utt.wav"
    write_wav(wav, synth_utterance(spk, "neutral", 2.0, 77))
    manifest = tmp_path / "m.csv"
    manifest.write_text("utterance_id,speaker_id,style,audio_path\n"
                        f"utt,spk0,synthetic-neutral,{wav}\n")

    outputs = []
    for run_dir in (tmp_path / "run1", tmp_path / "run2"):
        run_dir.mkdir()
        assert cli_main(["extract", str(wav), str(run_dir / "fixed.vfrf")]) == 0
        assert cli_main(["vfr", str(wav), str(run_dir / "vfr.vfrf"),
                         "--dump-entropy", str(run_dir / "entropy.csv")]) == 0
        assert cli_main(["augment", "--manifest", str(manifest),
                         "--config", "vfr-norm-aug", "--style",
                         "synthetic-neutral",
                         "--output-dir", str(run_dir / "feats")]) == 0
        assert cli_main(["bench", "--speakers", "10", "--test-style", "slow",
                         "--seeds", "1", "--duration", "2", "--n-test", "1",
                         "-o", str(run_dir / "report.json")]) == 0
        names = ["fixed.vfrf", "vfr.vfrf", "entropy.csv", "report.json",
                 "feats/index.csv", "feats/utt.vfrf", "feats/utt-vfr.vfrf"]
        outputs.append({n: (run_dir / n).read_bytes() for n in names})
    assert outputs[0] == outputs[1]
