"""Failure prediction from ATM event logs with convolutional kernel
features and a ridge linear classifier."""

__version__ = "0.1.0"

from .dataset import (
    DatasetManifest,
    LabelPolicy,
    MachineDaySample,
    build_dataset,
    flatten_tabular,
    load_manifest,
    save_manifest,
)
from .eventlog import (
    CommandVocabulary,
    MaintenanceRecord,
    StateEvent,
    build_vocabulary,
    parse_annotations,
    parse_states,
)
from .experiment import (
    MethodSpec,
    run_experiment,
    run_nontemporal_baseline,
)
from .fleet import FleetConfig, generate_fleet
from .folds import FoldPlan, plan_folds
from .metrics import MetricsRecord, compute_metrics, confusion
from .ridge import RidgeFailureClassifier, select_alpha
from .stats import (
    anderson_darling_normality,
    bonferroni,
    pairwise_matrix,
    wilcoxon_signed_rank,
)
from .transforms import HydraTransform, MiniRocketTransform, RocketTransform

__all__ = [
    "__version__",
    "DatasetManifest",
    "LabelPolicy",
    "MachineDaySample",
    "build_dataset",
    "flatten_tabular",
    "load_manifest",
    "save_manifest",
    "CommandVocabulary",
    "MaintenanceRecord",
    "StateEvent",
    "build_vocabulary",
    "parse_annotations",
    "parse_states",
    "MethodSpec",
    "run_experiment",
    "run_nontemporal_baseline",
    "FleetConfig",
    "generate_fleet",
    "FoldPlan",
    "plan_folds",
    "MetricsRecord",
    "compute_metrics",
    "confusion",
    "RidgeFailureClassifier",
    "select_alpha",
    "anderson_darling_normality",
    "bonferroni",
    "pairwise_matrix",
    "wilcoxon_signed_rank",
    "HydraTransform",
    "MiniRocketTransform",
    "RocketTransform",
]
