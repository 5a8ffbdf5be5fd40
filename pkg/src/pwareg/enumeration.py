"""Enumeration of the labelings that linear classifiers can produce on a point set.

Binary case: every linear dichotomy of points in general position is reproduced,
away from ``d`` points, by a hyperplane passing through ``d`` of the points.
Walking all ``C(N, d)`` such hyperplanes and all ``2**d`` assignments of their
defining points therefore yields the whole projection.

Multiclass case: the label of a point is decided by the signs of the pairwise
differences ``g_jk = h_j - h_k``.  Each pairwise sign vector is a binary linear
dichotomy, so combining the binary enumeration over all ``n(n-1)/2`` pairs
yields a superset of the multiclass projection.  Labelings in that superset are
not necessarily realizable (the pairwise functions are not independent);
callers that need realizability must verify it.

Labels are modes ``1..n``.  For binary labelings mode 1 is the nonnegative side
of the hyperplane and mode 2 the negative side.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Iterator
from dataclasses import dataclass
from math import comb

import numpy as np

from .geometry import (
    TAU_ON,
    Hyperplane,
    check_general_position,
    hyperplane_through,
    hyperplanes_through_batch,
    iter_subsets,
)

log = logging.getLogger(__name__)

DEDUP_LIMIT = 10**7
ON_EXTRAS_MODES = ("plus", "enumerate")


@dataclass
class EnumerationStats:
    subsets: int = 0
    degenerate: int = 0
    # labelings produced before deduplication / pruning
    candidates: int = 0
    yielded: int = 0
    # points tagged On that were not among the defining points
    on_extra_points: int = 0
    tuples: int = 0
    inconsistent: int = 0
    duplicate_hyperplanes: int = 0
    dedup_overflow: bool = False

    def merge(self, other: EnumerationStats) -> None:
        for name in ("subsets", "degenerate", "candidates", "yielded", "on_extra_points", "tuples",
                     "inconsistent", "duplicate_hyperplanes"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        self.dedup_overflow |= other.dedup_overflow


def binary_bound(N: int, d: int) -> int:
    """Upper bound ``2**(d+1) * C(N, d)`` on the number of linear dichotomies."""
    return 2 ** (d + 1) * comb(N, d)


def multiclass_bound(N: int, d: int, n: int) -> int:
    return binary_bound(N, d) ** (n * (n - 1) // 2)


@dataclass
class SubsetPatterns:
    """All on-point assignments for the hyperplane through one d-subset.

    ``plus`` has one row per assignment, in binary-counter order: bit ``j`` of
    the row index puts ``on_index[j]`` on the plus side.
    """

    subset: tuple[int, ...]
    hyperplane: Hyperplane
    on_index: np.ndarray
    plus: np.ndarray
    extras: int


def _patterns(X, subset, hp: Hyperplane, on_extras: str, tol: float, seen_on: set | None):
    g = hp.value(X)
    in_subset = np.zeros(X.shape[0], dtype=bool)
    in_subset[list(subset)] = True
    on = (np.abs(g) <= tol) | in_subset
    extras_mask = on & ~in_subset
    extras = int(extras_mask.sum())
    base = (g > tol) & ~on
    if on_extras == "enumerate":
        if extras and seen_on is not None:
            key = np.packbits(on).tobytes()
            if key in seen_on:
                return None
            seen_on.add(key)
        on_index = np.flatnonzero(on)
    else:
        base = base | extras_mask
        on_index = np.asarray(subset, dtype=np.intp)
    k = on_index.size
    bits = (np.arange(2**k)[:, None] >> np.arange(k)[None, :]) & 1
    plus = np.repeat(base[None, :], 2**k, axis=0)
    plus[:, on_index] = bits.astype(bool)
    return SubsetPatterns(tuple(subset), hp, on_index, plus, extras)


def subset_patterns(X: np.ndarray, subset, on_extras: str = "plus", tol: float = TAU_ON,
                    seen_on: set | None = None) -> SubsetPatterns | None:
    """Build the hyperplane through ``X[subset]`` and every assignment of its on-points.

    Off-hyperplane points keep the side given by the (canonical) normal.  Points
    found on the hyperplane but outside ``subset`` only occur without general
    position; ``on_extras="plus"`` puts them on the plus side, while
    ``"enumerate"`` treats them like defining points.  In that mode the
    candidates depend only on the on-set, so when ``seen_on`` is given a
    hyperplane whose on-set was already produced returns None.

    Raises DegenerateSubset for affinely dependent subsets.
    """
    if on_extras not in ON_EXTRAS_MODES:
        raise ValueError(f"on_extras must be one of {ON_EXTRAS_MODES}")
    X = np.asarray(X, dtype=float)
    hp = hyperplane_through(X[list(subset)])
    return _patterns(X, subset, hp, on_extras, tol, seen_on)


def iter_subset_patterns(X: np.ndarray, on_extras: str = "plus", stats: EnumerationStats | None = None,
                         start: int = 0, stop: int | None = None, chunk: int = 1024) -> Iterator[SubsetPatterns]:
    """``subset_patterns`` over all d-subsets of rank ``start..stop``, skipping degenerate ones.

    Hyperplanes are computed ``chunk`` subsets at a time.  The rank of each
    produced subset is ``start + stats.subsets - 1`` at the time it is yielded.
    """
    if on_extras not in ON_EXTRAS_MODES:
        raise ValueError(f"on_extras must be one of {ON_EXTRAS_MODES}")
    X = np.asarray(X, dtype=float)
    N, d = X.shape
    stats = stats if stats is not None else EnumerationStats()
    seen_on: set[bytes] = set()
    subsets = iter_subsets(N, d, start, stop)
    while True:
        block = list(itertools.islice(subsets, chunk))
        if not block:
            break
        normals, offsets, ok = hyperplanes_through_batch(X[np.array(block)])
        for subset, h, b, good in zip(block, normals, offsets, ok):
            stats.subsets += 1
            if not good:
                stats.degenerate += 1
                continue
            sp = _patterns(X, subset, Hyperplane(h, b), on_extras, TAU_ON, seen_on)
            if sp is None:
                stats.duplicate_hyperplanes += 1
                continue
            if sp.extras:
                stats.on_extra_points += sp.extras
            yield sp
    if stats.degenerate:
        log.warning("skipped %d degenerate subsets out of %d", stats.degenerate, stats.subsets)


def to_labels(plus: np.ndarray) -> np.ndarray:
    """Boolean plus-side mask(s) to binary mode labels (1 = plus, 2 = minus)."""
    return np.where(plus, 1, 2).astype(np.int8)


def negate(q: np.ndarray) -> np.ndarray:
    """Opposite binary labeling (modes 1 and 2 swapped)."""
    return (3 - np.asarray(q)).astype(np.int8)


def _check_points(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    N, d = X.shape
    if N <= d:
        raise ValueError(f"need more points than dimensions (N={N}, d={d})")
    return X


class _Seen:
    """Hash set of labelings that stops deduplicating past ``DEDUP_LIMIT`` entries."""

    def __init__(self, stats: EnumerationStats, limit: int = DEDUP_LIMIT):
        self._set: set[bytes] = set()
        self._stats = stats
        self._limit = limit

    def active(self) -> bool:
        return not self._stats.dedup_overflow

    def __contains__(self, key: bytes) -> bool:
        return key in self._set

    def add(self, key: bytes) -> None:
        if self._stats.dedup_overflow:
            return
        if len(self._set) >= self._limit:
            log.warning("dedup store exceeded %d entries; repeats will be yielded", self._limit)
            self._stats.dedup_overflow = True
            self._set.clear()
            return
        self._set.add(key)


def enumerate_binary_labelings(X, *, dedup: bool = True, symmetry_prune: bool = False,
                               verify: bool = False, on_extras: str = "plus",
                               stats: EnumerationStats | None = None) -> Iterator[np.ndarray]:
    """Yield the linear dichotomies of the rows of ``X`` as label vectors in ``{1, 2}``.

    For each d-subset and each of its ``2**d`` on-point assignments, the labeling
    is yielded for both orientations of the hyperplane.  With ``dedup`` repeats
    are dropped; with ``symmetry_prune`` a labeling is also dropped when its
    negation was already yielded (implies dedup).
    """
    X = _check_points(X)
    if verify:
        ok, bad = check_general_position(X)
        if not ok:
            raise ValueError(f"points are not in general position: subset {bad}")
    stats = stats if stats is not None else EnumerationStats()
    seen = _Seen(stats) if (dedup or symmetry_prune) else None
    for sp in iter_subset_patterns(X, on_extras, stats):
        for plus in sp.plus:
            for q in (to_labels(plus), to_labels(~plus)):
                stats.candidates += 1
                if seen is not None and seen.active():
                    key = q.tobytes()
                    if key in seen:
                        continue
                    if symmetry_prune and negate(q).tobytes() in seen:
                        continue
                    seen.add(key)
                stats.yielded += 1
                yield q


def pair_list(n: int) -> list[tuple[int, int]]:
    return [(j, k) for j in range(1, n + 1) for k in range(j + 1, n + 1)]


def label_from_pairs(pair_values, n: int) -> int | None:
    """Mode selected by the pairwise rule, or None when no mode wins (cyclic signs).

    ``pair_values`` maps ``(j, k)`` with ``j < k`` to ``g_jk(x)`` (or just its
    sign); mode ``j`` wins when ``g_jk >= 0`` for all ``k > j`` and
    ``g_kj < 0`` for all ``k < j``.  This is argmax with ties to the smallest
    index.
    """
    for j in range(1, n + 1):
        if all(pair_values[(j, k)] >= 0 for k in range(j + 1, n + 1)) and all(
            pair_values[(k, j)] < 0 for k in range(1, j)
        ):
            return j
    return None


def labels_from_pair_masks(masks: dict[tuple[int, int], np.ndarray], n: int) -> np.ndarray:
    """Vectorized ``label_from_pairs`` over boolean ``g_jk >= 0`` masks; 0 marks inconsistency.

    Masks may carry leading batch dimensions as long as they broadcast.
    """
    shape = np.broadcast_shapes(*(m.shape for m in masks.values()))
    out = np.zeros(shape, dtype=np.int8)
    for j in range(1, n + 1):
        win = np.ones(shape, dtype=bool)
        for k in range(j + 1, n + 1):
            win &= masks[(j, k)]
        for k in range(1, j):
            win &= ~masks[(k, j)]
        out[win] = j
    return out


def pairwise_dichotomies(X, *, dedup: bool = True, on_extras: str = "plus",
                         stats: EnumerationStats | None = None) -> np.ndarray:
    """All binary sign masks (``True`` = nonnegative side), both orientations, as an (M, N) array."""
    X = _check_points(X)
    stats = stats if stats is not None else EnumerationStats()
    rows = []
    seen: set[bytes] = set()
    for sp in iter_subset_patterns(X, on_extras, stats):
        for plus in sp.plus:
            for m in (plus, ~plus):
                stats.candidates += 1
                if dedup:
                    key = np.packbits(m).tobytes()
                    if key in seen:
                        continue
                    seen.add(key)
                rows.append(m)
    return np.array(rows, dtype=bool).reshape(len(rows), X.shape[0])


def iter_multiclass_blocks(P: np.ndarray, n: int, stats: EnumerationStats,
                           start: int = 0, stop: int | None = None) -> Iterator[np.ndarray]:
    """Label blocks for every tuple of pairwise dichotomies drawn from the rows of ``P``.

    The outermost pair index runs over ``start..stop``; the last pair is
    vectorized, so each block is an (M, N) array of labels (0 = inconsistent).
    """
    pairs = pair_list(n)
    M = P.shape[0]
    stop = M if stop is None else min(stop, M)
    *prefix_pairs, last = pairs
    prefix_ranges = [range(start, stop)] + [range(M)] * (len(prefix_pairs) - 1)
    for prefix in itertools.product(*prefix_ranges):
        masks = {pair: P[i] for pair, i in zip(prefix_pairs, prefix)}
        masks[last] = P
        block = labels_from_pair_masks(masks, n)
        stats.tuples += M
        yield block


def enumerate_multiclass_labelings(X, n: int, *, dedup: bool = True, on_extras: str = "plus",
                                   stats: EnumerationStats | None = None) -> Iterator[np.ndarray]:
    """Yield candidate ``n``-mode labelings (a superset of the linear multiclass projection).

    Every tuple of one hyperplane-through-d-points dichotomy per mode pair is
    turned into a labeling with the pairwise rule; tuples leaving some point
    without a winner are discarded.  With ``dedup`` the pairwise dichotomies and
    the output labelings are deduplicated; the yielded set is the same either
    way.  ``n == 2`` delegates to the binary enumeration.
    """
    if n == 2:
        yield from enumerate_binary_labelings(X, dedup=dedup, on_extras=on_extras, stats=stats)
        return
    if n < 2:
        raise ValueError("need at least two modes")
    X = _check_points(X)
    stats = stats if stats is not None else EnumerationStats()
    P = pairwise_dichotomies(X, dedup=dedup, on_extras=on_extras, stats=stats)
    seen = _Seen(stats) if dedup else None
    for block in iter_multiclass_blocks(P, n, stats):
        valid = np.all(block > 0, axis=1)
        stats.inconsistent += int((~valid).sum())
        for q in block[valid]:
            if seen is not None and seen.active():
                key = q.tobytes()
                if key in seen:
                    continue
                seen.add(key)
            stats.yielded += 1
            yield q
