"""Exact piecewise affine regression by hyperplane enumeration."""

from .exceptions import (
    AllSubsetsDegenerate,
    DegenerateSubset,
    InstanceTooLarge,
    InstanceTooSmall,
    NoRealizableLabeling,
    NotAPartition,
    PWAError,
    SequenceTooShort,
)
from .geometry import Hyperplane, Side, check_general_position, hyperplane_through, iter_subsets, side_of
from .regression import Dataset, Loss, MulticlassClassifier, PWAModel, cost_of_labeling, fit_affine, predict
from .enumeration import enumerate_binary_labelings, enumerate_multiclass_labelings
from .solver import (
    SolveResult,
    brute_force_oracle,
    check_realizability,
    solve_binary_exact,
    solve_exact,
    solve_multiclass_exact,
)
from .reduction import decide_partition_via_pwa, partition_to_dataset, recover_partition, witness_to_model
from .data import ArxOrders, GeneratorConfig, build_regressors, generate_pwa_dataset

__version__ = "0.1.0"

__all__ = [
    "AllSubsetsDegenerate", "ArxOrders", "Dataset", "DegenerateSubset", "GeneratorConfig", "Hyperplane",
    "InstanceTooLarge", "InstanceTooSmall", "Loss", "MulticlassClassifier", "NoRealizableLabeling",
    "NotAPartition", "PWAError", "PWAModel", "SequenceTooShort", "Side", "SolveResult",
    "brute_force_oracle", "build_regressors", "check_general_position", "check_realizability",
    "cost_of_labeling", "decide_partition_via_pwa", "enumerate_binary_labelings",
    "enumerate_multiclass_labelings", "fit_affine", "generate_pwa_dataset", "hyperplane_through",
    "iter_subsets", "partition_to_dataset", "predict", "recover_partition", "side_of",
    "solve_binary_exact", "solve_exact", "solve_multiclass_exact", "witness_to_model",
]
