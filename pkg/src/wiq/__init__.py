"""Qualitative action recognition from narrowband RSS traces."""

from .signal_sim import (
    ACTIONS,
    ACTIVITY_TEMPLATES,
    ActionEntry,
    ActionInterval,
    ActionScript,
    ChannelModel,
    PedalTrajectory,
    RssTrace,
    add_noise,
    perturb_trajectory,
    script_from_template,
    synth_trajectory,
    trajectory_to_rss,
)
from .preprocess import GradientSequence, WaveletConfig, adaptive_delta, denoise, gradient
from .boundary import (
    BoundaryParams,
    BoundaryPoint,
    Fragment,
    dedupe_candidates,
    detect_boundaries,
    fragment_trace,
    level_step_scorer,
    prune_boundaries,
)
from .features import (
    FeatureMatrix,
    NormalizationStats,
    action_features,
    fit_normalization,
    motion_distance,
    normalize,
    quality_features,
    segment10,
)
from .cnn import CnnParams, NmlpParams, cnn_forward
from .learn import (
    ClassDistribution,
    SvmConfig,
    SvmParams,
    TrainConfig,
    classify,
    grad_check,
    knn_classify,
    nmlp_classify,
    svm_classify,
    svm_train,
    train,
)
from .fusion import ActionResult, ActivityRecord, fuse, rank_k
from .harness import (
    ExperimentSpec,
    ModelConfig,
    Report,
    confusion,
    generate_dataset,
    reproduce_all,
    run_ablation,
    run_experiment,
)

__version__ = "0.1.0"
