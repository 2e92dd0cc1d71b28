"""Evidence-fusion ensemble classifier.

Builds a pool of base classifiers, ranks them by mutual information with
the target, grows an ensemble greedily, turns each member's score vector
into a distance-based mass function with learned reference vectors and
confusion-matrix weightings, and fuses the evidence with Dempster's rule.
"""

__version__ = "0.1.0"

from .baselearners import LearnerSpec, ScoreMatrix, builtin_pool, default_pool
from .data import Dataset, add_noise, imbalance_ratio, load_csv, make_two_gaussians, stratified_split
from .errors import DSFusionError
from .evidence import BBA, Frame, combine_pair, combine_sequence, conflict
from .experiments import ExperimentConfig, emit_report, noise_sweep, run_pipeline
from .fusion import (
    FusionConfig,
    FusionModel,
    load_model,
    predict,
    save_model,
    select_ensemble,
    train_fusion,
)
from .infotheory import entropy, mutual_information, rank_by_relevancy
from .metrics import ConfusionMatrix, confusion
from .weights import WeightScheme, WeightVector, build_weight

__all__ = [
    "BBA",
    "ConfusionMatrix",
    "DSFusionError",
    "Dataset",
    "ExperimentConfig",
    "Frame",
    "FusionConfig",
    "FusionModel",
    "LearnerSpec",
    "ScoreMatrix",
    "WeightScheme",
    "WeightVector",
    "__version__",
    "add_noise",
    "build_weight",
    "builtin_pool",
    "combine_pair",
    "combine_sequence",
    "conflict",
    "confusion",
    "default_pool",
    "emit_report",
    "entropy",
    "imbalance_ratio",
    "load_csv",
    "load_model",
    "make_two_gaussians",
    "mutual_information",
    "noise_sweep",
    "predict",
    "rank_by_relevancy",
    "run_pipeline",
    "save_model",
    "select_ensemble",
    "stratified_split",
    "train_fusion",
]
