"""vfrkit: entropy-based variable frame rate speech front-end and metrics."""

from .audio_io import AudioBuffer, read_wav, resample, write_wav
from .augment import (
    AugmentationConfig,
    AugmentationPlan,
    CorpusManifest,
    ManifestEntry,
    build_plan,
    read_manifest,
    run_plan,
    write_manifest,
)
from .evaluation import (
    EerReport,
    EmbeddingVector,
    McNemarReport,
    ScoreSet,
    TrialScore,
    compute_eer,
    decisions_at_eer,
    embed_utterance,
    mcnemar_test,
    score_trials,
)
from .frontend import (
    FeatureMatrix,
    FeatureMeta,
    FrontendConfig,
    MelSpectrogram,
    extract_features,
    frame_signal,
    mel_energies,
    mfcc,
    read_vfrf,
    sliding_cmn,
    write_feature_csv,
    write_vfrf,
)
from .toybench import (
    BUILTIN_STYLES,
    ExperimentReport,
    StyleSpec,
    SyntheticSpeaker,
    run_experiment,
    synth_utterance,
)
from .vfr import (
    EntropyCurve,
    FramePlan,
    ThresholdSet,
    build_frame_plan,
    compute_thresholds,
    entropy_curve,
    vfr_extract,
    window_entropy,
)

__version__ = "0.1.0"
__all__ = [name for name in dir() if not name.startswith("_")]
