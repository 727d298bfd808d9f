import json

import numpy as np
import pytest

from vfrkit.frontend import FrontendConfig, extract_features
from vfrkit.toybench import (
    BUILTIN_STYLES,
    StyleSpec,
    SyntheticSpeaker,
    resolve_style,
    run_experiment,
    sample_speaker,
    synth_utterance,
)
from vfrkit.vfr import vfr_extract

CFG = FrontendConfig(sample_rate=8000)

PLAIN = StyleSpec("plain", tempo_factor=1.0, pause_rate=0.0, jitter=0.0)
STRETCHED = StyleSpec("stretched", tempo_factor=1.5, pause_rate=0.0, jitter=0.0)


def speaker(seed=0):
    return sample_speaker(np.random.default_rng(100 + seed), seed=seed)


class TestSpecs:
    def test_pitch_range_enforced(self):
        with pytest.raises(ValueError):
            SyntheticSpeaker((500.0, 1500.0, 2500.0), (80.0, 90.0, 120.0),
                             pitch_hz=40.0)

    def test_tempo_range_enforced(self):
        with pytest.raises(ValueError):
            StyleSpec("broken", tempo_factor=2.5)

    def test_negative_pause_rejected(self):
        with pytest.raises(ValueError):
            StyleSpec("broken", pause_rate=-1.0)

    def test_resolve_builtin(self):
        assert resolve_style("slow").tempo_factor == 1.5
        with pytest.raises(ValueError):
            resolve_style("whispered")

    def test_formants_capped_below_nyquist(self):
        spk = SyntheticSpeaker((500.0, 1500.0, 3900.0), (80.0, 90.0, 120.0),
                               pitch_hz=120.0)
        with pytest.raises(ValueError):
            synth_utterance(spk, PLAIN, 1.0, 0)


class TestSynthUtterance:
    def test_neutral_duration(self):
        buf = synth_utterance(speaker(), PLAIN, 3.0, 7)
        assert abs(buf.duration_seconds - 3.0) / 3.0 < 0.05

    def test_stretched_duration(self):
        a = synth_utterance(speaker(), PLAIN, 3.0, 7)
        b = synth_utterance(speaker(), STRETCHED, 3.0, 7)
        assert abs(b.duration_seconds - 1.5 * a.duration_seconds) \
            / (1.5 * a.duration_seconds) < 0.10

    def test_deterministic(self):
        a = synth_utterance(speaker(), "neutral", 2.0, 42)
        b = synth_utterance(speaker(), "neutral", 2.0, 42)
        assert np.array_equal(a.samples, b.samples)

    def test_amplitude_bounded(self):
        buf = synth_utterance(speaker(3), "pausey", 2.0, 1)
        assert np.abs(buf.samples).max() <= 1.0

    def test_min_duration(self):
        with pytest.raises(ValueError):
            synth_utterance(speaker(), PLAIN, 0.5, 0)

    def test_styles_share_script(self):
        # same seed, different tempo: syllable count is preserved, so the
        # stretched rendering is longer by roughly the tempo factor
        for seed in range(5):
            a = synth_utterance(speaker(1), PLAIN, 2.0, seed)
            b = synth_utterance(speaker(1), STRETCHED, 2.0, seed)
            assert 1.4 < b.duration_seconds / a.duration_seconds < 1.6


class TestFrameCountNormalization:
    def test_ratio_below_fixed_rate(self):
        neutral = BUILTIN_STYLES["neutral"]
        slow = neutral.with_tempo(1.5)
        rng = np.random.default_rng(0)
        ok = 0
        total = 100
        for i in range(total):
            spk = sample_speaker(rng, seed=i)
            seed = int(rng.integers(2**31))
            u = synth_utterance(spk, neutral, 3.5, seed)
            v = synth_utterance(spk, slow, 3.5, seed)
            fixed_ratio = len(extract_features(v, CFG)) / len(extract_features(u, CFG))
            vfr_ratio = len(vfr_extract(v, CFG)) / len(vfr_extract(u, CFG))
            if vfr_ratio < fixed_ratio:
                ok += 1
        assert ok >= 90, f"normalization held for only {ok}/{total} utterances"


class TestRunExperiment:
    def test_deterministic(self):
        a = run_experiment(10, "neutral", "slow", "baseline", seed=3,
                           duration_s=2.0, n_test=1)
        b = run_experiment(10, "neutral", "slow", "baseline", seed=3,
                           duration_s=2.0, n_test=1)
        assert a == b

    def test_report_fields(self):
        r = run_experiment(10, "neutral", "neutral", "baseline", seed=1,
                           duration_s=2.0, n_test=1)
        assert r.n_target == 10 and r.n_nontarget == 90
        assert 0.0 <= r.eer_percent <= 100.0
        payload = json.loads(r.to_json())
        assert payload["config"] == "baseline"
        assert payload["enroll_style"] == "neutral"

    def test_requires_ten_speakers(self):
        with pytest.raises(ValueError):
            run_experiment(5, "neutral", "neutral", "baseline", seed=0)

    def test_extrinsic_rejected(self):
        with pytest.raises(ValueError):
            run_experiment(10, "neutral", "neutral", "extrinsic-aug", seed=0)

    def test_all_buildable_configs_run(self):
        for config in ("baseline", "vfr-norm", "vfr-norm-aug", "multi-style"):
            r = run_experiment(10, "neutral", "slow", config, seed=2,
                               duration_s=2.0, n_test=1)
            assert 0.0 <= r.eer_percent <= 100.0, config
