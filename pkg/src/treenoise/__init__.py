"""Tree-guided noise addition for privacy-preserving classification."""

from .dataset import (
    AttributeDescriptor,
    Dataset,
    DatasetError,
    DomainRange,
    Kind,
    NormalFit,
    Role,
    Schema,
    compute_domains,
    embedded_liver_sample,
    fit_normal,
    fit_normals,
    load_bhp,
    load_csv,
    split_train_test,
)
from .evaluation import EvalReport, accuracy, compare_runs, distortion
from .paths import PathAttributeSets, RoutedPath, Scope, SiblingRule, leaf_population, path_sets, route, route_all
from .perturb import (
    CaptTarget,
    NoiseMode,
    PerturbConfig,
    PerturbError,
    PerturbReport,
    WrapMode,
    capt,
    pipeline,
    ptlrpa,
    ptlwpa,
    v_wrap,
)
from .tree import (
    BuildParams,
    ClassDistribution,
    Criterion,
    DecisionTree,
    best_numeric_split,
    build,
    entropy,
    gain,
    gain_ratio,
    partition_entropy,
    similarity,
    split_info,
)

__version__ = "0.1.0"
