"""Partition to two-mode PWA regression.

A multiset ``s_1..s_d`` of positive integers is encoded as ``2d+3`` points in
``R^d``: ``(s_i e_i, s_i)``, ``(-s_i e_i, s_i)``, ``(s, 0)``, ``(-s, 0)`` and
``(0, 0)`` with ``s = sum_k s_k e_k``.  A two-mode PWA model fits these points
with zero error exactly when the multiset splits into two halves of equal sum.

Element indices of the multiset are 1-based throughout this module, matching
the usual ``s_1..s_d`` numbering.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .exceptions import InstanceTooLarge, NotAPartition
from .geometry import Hyperplane
from .regression import Dataset, Loss, PWAModel, augment
from .solver import SolveResult, solve_binary_exact

EPS_ZERO = 1e-9
RECOVERY_TOL = 1e-6
MAX_DECIDER_D = 10


def validate_partition(s) -> tuple[int, ...]:
    values = tuple(s)
    if not values:
        raise ValueError("a partition instance needs at least one element")
    out = []
    for v in values:
        if isinstance(v, (bool, np.bool_)) or int(v) != v:
            raise ValueError(f"partition elements must be integers, got {v!r}")
        if v < 1:
            raise ValueError(f"partition elements must be positive, got {v}")
        out.append(int(v))
    return tuple(out)


def parse_partition(text: str) -> tuple[int, ...]:
    """``"1,2,3"`` -> ``(1, 2, 3)``."""
    try:
        values = [int(tok) for tok in text.replace(" ", "").split(",") if tok]
    except ValueError as exc:
        raise ValueError(f"cannot parse partition instance {text!r}") from exc
    return validate_partition(values)


@dataclass
class GadgetDataset:
    data: Dataset
    # construction case of each point: "pos", "neg", "sum", "neg_sum" or "origin"
    cases: list[str]
    s: tuple[int, ...]


def partition_to_dataset(s) -> GadgetDataset:
    s = validate_partition(s)
    d = len(s)
    E = np.diag(np.asarray(s, dtype=float))
    total = np.asarray(s, dtype=float)
    X = np.vstack([E, -E, total, -total, np.zeros(d)])
    y = np.concatenate([total, total, np.zeros(3)])
    cases = ["pos"] * d + ["neg"] * d + ["sum", "neg_sum", "origin"]
    return GadgetDataset(Dataset(X, y), cases, s)


def _check_split(s, I1) -> tuple[int, ...]:
    d = len(s)
    I1 = tuple(sorted(set(int(i) for i in I1)))
    if any(i < 1 or i > d for i in I1):
        raise ValueError(f"indices must lie in 1..{d}")
    return I1


def is_partition(s, I1) -> bool:
    s = validate_partition(s)
    I1 = _check_split(s, I1)
    inside = sum(s[i - 1] for i in I1)
    return 2 * inside == sum(s)


def witness_to_model(s, I1) -> PWAModel:
    """Zero-error model built from an equal-sum split (``I1`` holds 1-based indices).

    ``h = sum_{I1} e_k - sum_{I-1} e_k``, ``b = 0``, ``w_1 = [h, 0]`` and
    ``w_{-1} = -w_1``.  Mode 1 of the returned model is the ``+1`` class.
    """
    s = validate_partition(s)
    I1 = _check_split(s, I1)
    if not is_partition(s, I1):
        raise NotAPartition(f"indices {I1} do not split {s} into equal sums")
    d = len(s)
    h = -np.ones(d)
    h[[i - 1 for i in I1]] = 1.0
    w1 = np.append(h, 0.0)
    return PWAModel(np.vstack([w1, -w1]), Hyperplane(h, 0.0), Loss.SQUARED)


def exhaustive_partition(s) -> tuple[int, ...] | None:
    """First equal-sum split found by trying all ``2**d`` subsets, or None."""
    s = validate_partition(s)
    d = len(s)
    total = sum(s)
    if total % 2:
        return None
    for r in range(d + 1):
        for I1 in itertools.combinations(range(1, d + 1), r):
            if 2 * sum(s[i - 1] for i in I1) == total:
                return I1
    return None


def _fits(w, Xbar, y) -> np.ndarray:
    return np.abs(Xbar @ w - y) <= RECOVERY_TOL


def recover_partition(s, submodels, labeling) -> tuple[int, ...] | None:
    """Read an equal-sum split off a zero-cost two-mode fit of the gadget.

    Mode A is the mode of the origin point.  First take the elements whose
    ``+s_i e_i`` point is fitted by ``w_A``; if that is not a valid split,
    ``w_B`` must fit both sum points, and the elements fitted by ``w_B`` form the
    other half.  Returns None when neither branch gives an exact split.
    """
    s = validate_partition(s)
    d = len(s)
    gadget = partition_to_dataset(s).data
    Xbar = augment(gadget.X)
    a = int(labeling[2 * d + 2]) - 1
    w_a, w_b = submodels[a], submodels[1 - a]
    ok_a = _fits(w_a, Xbar[:d], gadget.y[:d])
    I_hat = tuple(int(i) + 1 for i in np.flatnonzero(ok_a))
    if is_partition(s, I_hat):
        return I_hat
    ok_b = _fits(w_b, Xbar[:d], gadget.y[:d])
    I_hat = tuple(int(i) + 1 for i in np.flatnonzero(~ok_b))
    if is_partition(s, I_hat):
        return I_hat
    return None


@dataclass
class PartitionDecision:
    yes: bool
    subset: tuple[int, ...] | None
    result: SolveResult
    gadget: GadgetDataset


def decide_partition_via_pwa(s, eps: float = EPS_ZERO) -> PartitionDecision:
    """Answer Partition by asking whether the gadget admits a zero-error two-mode fit.

    The gadget is far from general position, so hyperplane on-points beyond the
    defining ones are enumerated too and any zero-cost candidate must pass the
    realizability LP.  Enumeration stops at the first such candidate, and
    subsets whose off-hyperplane points already have positive error are pruned.
    Exponential in ``d``; refused beyond ``d = 10``.
    """
    s = validate_partition(s)
    d = len(s)
    if d > MAX_DECIDER_D:
        raise InstanceTooLarge(f"decider is limited to d <= {MAX_DECIDER_D}, got d={d}")
    gadget = partition_to_dataset(s)
    result = solve_binary_exact(
        gadget.data,
        Loss.SQUARED,
        on_extras="enumerate",
        verify=True,
        target=eps,
        bound_prune=True,
        enforce_size=False,
    )
    yes = result.best_cost <= eps and bool(result.realizable)
    subset = recover_partition(s, result.model.submodels, result.labeling) if yes else None
    return PartitionDecision(yes, subset, result, gadget)
