"""Non-action segment classification and segment-weighted action recognition.

The library consumes precomputed per-frame descriptor streams (or synthetic
stand-ins), encodes them as additive frame-wise Fisher Vectors, trains a
closed-form least-squares SVM to score how likely a shot is to contain no
action, and uses those scores to down-weight or prune irrelevant segments
when building video-level features for recognition.
"""

from .darwin import DarwinFeature, darwin_encode, darwin_video_feature
from .dataset import (
    DatasetManifest,
    ManifestError,
    ShotLabel,
    ShotRecord,
    VideoRecord,
    load_manifest,
    manifest_from_dict,
    resolve_votes,
    save_manifest,
)
from .evaluation import (
    EvalReport,
    ExperimentConfig,
    SweepPoint,
    loo_comparison,
    run_experiment,
    simulate_pruning,
    whole_video_feature,
)
from .features_io import FeatureStream, read_descriptors, write_descriptors
from .fisher import (
    UnnormalizedFV,
    aggregate,
    fisher_vector,
    frame_fisher_vectors,
    fv_length,
    mean_pool,
    power_l2_normalize,
)
from .gmm import GmmModel, fit_gmm
from .metrics import PRCurve, average_precision, mean_average_precision
from .model_io import load_model, save_model
from .models import (
    LinearModel,
    SvrModel,
    fit_lssvm,
    fit_one_vs_rest,
    fit_svr,
    lssvm_kkt_residual,
    softmax,
)
from .nonaction import (
    ShotFeature,
    ShotScore,
    ap_at_k,
    build_training_set,
    score_shots,
    shot_feature,
    train_nonaction,
)
from .pca import PcaModel, fit_pca
from .pipeline import (
    ChannelModels,
    EncodedVideo,
    encode_manifest,
    encode_video,
    fit_channel_models,
    region_feature,
    split_videos,
)
from .pooling import (
    PooledFeature,
    Segment,
    make_segments,
    softmax_weights,
    video_feature,
    weighted_pool,
)
from .synthetic import SyntheticSpec, generate, generate_to_dir

__version__ = "0.1.0"
