"""Finger-vein verification toolkit.

Batch pipeline: image enhancement (contrast-limited adaptive histogram
equalization plus smoothing), handcrafted feature extraction, a from-scratch
random forest whose vote fractions serve as match scores, and the full
verification-metrics calculus (ROC, AUC, FMR/FNMR, EER, operating points).
"""

from .config import Config, default_config, load_config, parse_config, save_config
from .dataset import (
    Manifest,
    SampleRecord,
    Split,
    SplitSpec,
    generate_manifest,
    load_manifest,
    load_split,
    save_manifest,
    save_split,
    split,
    validate_manifest,
)
from .errors import VeinforgeError
from .evaluation import (
    ImposterPolicy,
    Trial,
    TrialSet,
    auc_trapezoid,
    build_trials,
    confusion_at_threshold,
    eer,
    mean_confidence,
    operating_threshold,
    per_class_auc,
    rates,
    roc_curve,
)
from .features import (
    FeatureFile,
    FeatureVector,
    PcaModel,
    lbp_code,
    lbp_features,
    load_pca,
    mc_features,
    mean_curvature_map,
    pca_fit,
    pca_transform,
    read_feature_file,
    save_pca,
    write_feature_file,
)
from .forest import (
    Forest,
    ForestParams,
    Prediction,
    load_forest,
    match_score,
    predict,
    save_forest,
    train_forest,
)
from .imaging import (
    ClaheParams,
    FloatImage,
    GrayImage,
    adjust_contrast_brightness,
    clahe,
    gaussian_filter,
    load_grayscale,
    normalize,
    resize,
    write_pgm,
)
from .report import EvalReport, build_report, load_report, validate_report
from .rng import SplitMix64, fnv1a64

__version__ = "0.1.0"

__all__ = [
    "ClaheParams",
    "Config",
    "EvalReport",
    "FeatureFile",
    "FeatureVector",
    "FloatImage",
    "Forest",
    "ForestParams",
    "GrayImage",
    "ImposterPolicy",
    "Manifest",
    "PcaModel",
    "Prediction",
    "SampleRecord",
    "Split",
    "SplitMix64",
    "SplitSpec",
    "Trial",
    "TrialSet",
    "VeinforgeError",
    "adjust_contrast_brightness",
    "auc_trapezoid",
    "build_report",
    "build_trials",
    "clahe",
    "confusion_at_threshold",
    "default_config",
    "eer",
    "fnv1a64",
    "gaussian_filter",
    "generate_manifest",
    "lbp_code",
    "lbp_features",
    "load_config",
    "load_forest",
    "load_grayscale",
    "load_manifest",
    "load_pca",
    "load_report",
    "load_split",
    "match_score",
    "mc_features",
    "mean_confidence",
    "mean_curvature_map",
    "normalize",
    "operating_threshold",
    "parse_config",
    "pca_fit",
    "pca_transform",
    "per_class_auc",
    "predict",
    "rates",
    "read_feature_file",
    "resize",
    "roc_curve",
    "save_config",
    "save_forest",
    "save_manifest",
    "save_pca",
    "save_split",
    "split",
    "train_forest",
    "validate_manifest",
    "validate_report",
    "write_feature_file",
    "write_pgm",
]
