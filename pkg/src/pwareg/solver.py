"""Exact global solvers for error-minimizing PWA regression.

``solve_binary_exact`` walks every hyperplane through ``d`` data points and
every assignment of those ``d`` points, fits both modes by least squares and
keeps the best cost.  ``solve_multiclass_exact`` does the same over tuples of
pairwise hyperplanes and verifies the winner by linear programming, since that
enumeration over-approximates the realizable labelings.  ``brute_force_oracle``
enumerates all ``n**N`` labelings and is meant for testing only.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.optimize import linprog

from .enumeration import (
    EnumerationStats,
    iter_multiclass_blocks,
    iter_subset_patterns,
    negate,
    pairwise_dichotomies,
    to_labels,
)
from .exceptions import (
    AllSubsetsDegenerate,
    InstanceTooLarge,
    InstanceTooSmall,
    NoRealizableLabeling,
)
from .geometry import Hyperplane
from .regression import (
    Dataset,
    Loss,
    MulticlassClassifier,
    PWAModel,
    batch_squared_costs,
    cost_of_labeling,
)

log = logging.getLogger(__name__)

ORACLE_MAX_LABELINGS = 10**7
FEASIBILITY_TOL = 1e-7
# relative slack when comparing a subset's lower bound against the incumbent
_BOUND_RTOL = 1e-9
_BATCH = 4096
# refuse multiclass runs that would visit more dichotomy tuples than this
MAX_TUPLES = 10**8


@dataclass
class RealizabilityWitness:
    """Linear classifier parameters reproducing a labeling with unit margin."""

    H: np.ndarray
    b: np.ndarray
    min_margin: float
    max_violation: float

    @property
    def n(self) -> int:
        return self.H.shape[0]

    def classifier(self) -> MulticlassClassifier:
        return MulticlassClassifier(self.H, self.b)

    def hyperplane(self) -> Hyperplane:
        """Binary witness as a hyperplane with mode 1 on its positive side."""
        if self.n != 2:
            raise ValueError("only binary witnesses reduce to a single hyperplane")
        return Hyperplane(self.H[0] - self.H[1], self.b[0] - self.b[1])


@dataclass
class SolveResult:
    best_cost: float
    model: PWAModel
    labeling: np.ndarray
    iterations: int
    skipped_degenerate: int
    certified: bool
    n: int
    evaluated: int = 0
    pruned: int = 0
    lp_checks: int = 0
    # whether the returned labeling passed the margin-1 realizability LP
    realizable: bool | None = None
    unverified_cost: float | None = None
    unverified_labeling: np.ndarray | None = None
    target_reached: bool | None = None
    stats: EnumerationStats = field(default_factory=EnumerationStats)
    winner: tuple | None = None

    def summary(self) -> dict:
        out = {
            "best_cost": self.best_cost,
            "n": self.n,
            "iterations": self.iterations,
            "evaluated": self.evaluated,
            "skipped_degenerate": self.skipped_degenerate,
            "certified": self.certified,
            "realizable": self.realizable,
            "labeling": self.labeling.tolist(),
        }
        if self.pruned:
            out["pruned"] = self.pruned
        if self.lp_checks:
            out["lp_checks"] = self.lp_checks
        if self.unverified_cost is not None:
            out["unverified_cost"] = self.unverified_cost
        if self.target_reached is not None:
            out["target_reached"] = self.target_reached
        return out


def normalize_labels(q, n: int) -> np.ndarray:
    """Labels as modes ``1..n``; binary ``{-1, +1}`` input maps +1 to mode 1 and -1 to mode 2."""
    q = np.asarray(q).ravel().astype(int)
    if n == 2 and q.size and np.all(np.isin(q, (-1, 1))) and np.any(q == -1):
        q = np.where(q == 1, 1, 2)
    if q.size and (q.min() < 1 or q.max() > n):
        raise ValueError(f"labels must lie in 1..{n}")
    return q


def check_realizability(X, q, n: int) -> RealizabilityWitness | None:
    """Find ``(H, b)`` with ``(h_{q_i} - h_k) @ x_i + b_{q_i} - b_k >= 1`` for all ``i`` and ``k != q_i``.

    Returns None when the LP is infeasible, i.e. no linear classifier separates
    the labeling strictly.  The last mode's parameters are pinned to zero, which
    loses nothing since only differences matter.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    q = normalize_labels(q, n)
    N, d = X.shape
    p = d + 1
    Xbar = np.hstack([X, np.ones((N, 1))])
    nvar = (n - 1) * p
    rows = []
    for i in range(N):
        a = q[i] - 1
        for k in range(n):
            if k == a:
                continue
            # -(theta_a - theta_k) @ xbar_i <= -1
            row = np.zeros(n * p)
            row[a * p:(a + 1) * p] -= Xbar[i]
            row[k * p:(k + 1) * p] += Xbar[i]
            rows.append(row[:nvar])
    A_ub = np.array(rows).reshape(len(rows), nvar)
    if nvar == 0 or not rows:
        return None
    res = linprog(
        np.zeros(nvar),
        A_ub=A_ub,
        b_ub=-np.ones(len(rows)),
        bounds=[(None, None)] * nvar,
        method="highs",
    )
    if res.status != 0:
        return None
    theta = np.vstack([res.x.reshape(n - 1, p), np.zeros((1, p))])
    margins = -(A_ub @ res.x)
    min_margin = float(margins.min())
    if min_margin <= 0:
        return None
    # rescale so the smallest margin is exactly one
    if min_margin < 1.0:
        theta = theta / min_margin
        margins = margins / min_margin
    violation = float(max(0.0, 1.0 - margins.min()))
    if violation > FEASIBILITY_TOL:
        return None
    return RealizabilityWitness(theta[:, :d].copy(), theta[:, d].copy(), float(margins.min()), violation)


def _check_size(data: Dataset, n: int, enforce_size: bool) -> None:
    if data.N <= data.d:
        raise InstanceTooSmall(f"need N > d, got N={data.N}, d={data.d}")
    if enforce_size and data.N < n * (data.d + 1):
        raise InstanceTooSmall(
            f"n={n} modes need N >= n(d+1) = {n * (data.d + 1)} points, got N={data.N}"
        )


def _labeling_costs(Xbar, y, labelings: np.ndarray, n: int, loss: Loss) -> np.ndarray:
    """Mean cost (without the 1/N) of many labelings; squared loss is batched."""
    K = labelings.shape[0]
    if loss is Loss.SQUARED:
        out = np.zeros(K)
        for lo in range(0, K, _BATCH):
            chunk = labelings[lo:lo + _BATCH]
            for j in range(1, n + 1):
                out[lo:lo + _BATCH] += batch_squared_costs(Xbar, y, chunk == j)
        return out
    data = Dataset(Xbar[:, :-1], y)
    return np.array([cost_of_labeling(data, q, n, loss).cost * data.N for q in labelings])


# ---------------------------------------------------------------- binary


@dataclass
class _BinaryOptions:
    loss: Loss
    symmetry_prune: bool
    bound_prune: bool
    on_extras: str
    target: float | None
    verify: bool


@dataclass
class _ScanResult:
    cost: float = np.inf
    key: tuple = ()
    labeling: np.ndarray | None = None
    hyperplane: Hyperplane | None = None
    evaluated: int = 0
    pruned: int = 0
    lp_checks: int = 0
    stopped: bool = False
    stats: EnumerationStats = field(default_factory=EnumerationStats)


def _row_keys(plus: np.ndarray) -> list:
    """Hashable key per row of a boolean (K, N) array; bit-packed integers when they fit."""
    N = plus.shape[1]
    if N <= 62:
        return (plus.astype(np.int64) @ (np.int64(1) << np.arange(N, dtype=np.int64))).tolist()
    return [row.tobytes() for row in np.packbits(plus, axis=1)]


def segment_triples(X: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Index triples (a, b, c) with ``x_c`` strictly inside the segment ``[x_a, x_b]``.

    A linear classifier assigns ``x_c`` the class shared by ``x_a`` and ``x_b``,
    which gives a cheap necessary condition for realizability.
    """
    N = X.shape[0]
    dist = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=2)
    out = []
    for a in range(N):
        for b in range(a + 1, N):
            gap = dist[a] + dist[b] - dist[a, b]
            scale = max(1.0, dist[a, b])
            inside = np.flatnonzero((gap <= tol * scale) & (dist[a] > tol * scale) & (dist[b] > tol * scale))
            out.extend((a, b, int(c)) for c in inside)
    return np.array(out, dtype=np.intp).reshape(len(out), 3)


def _segment_consistent(plus: np.ndarray, triples: np.ndarray) -> np.ndarray:
    if triples.shape[0] == 0:
        return np.ones(plus.shape[0], dtype=bool)
    pa, pb, pc = plus[:, triples[:, 0]], plus[:, triples[:, 1]], plus[:, triples[:, 2]]
    return ~np.any((pa == pb) & (pc != pa), axis=1)


def _binary_scan(X, y, opts: _BinaryOptions, start: int, stop: int | None) -> _ScanResult:
    N = X.shape[0]
    Xbar = np.hstack([X, np.ones((N, 1))])
    out = _ScanResult()
    seen: set | None = set() if opts.symmetry_prune else None
    full = (1 << N) - 1 if N <= 62 else None
    triples = segment_triples(X) if opts.verify else None
    lp_cache: dict = {}
    for sp in iter_subset_patterns(X, opts.on_extras, out.stats, start, stop):
        rank = start + out.stats.subsets - 1
        plus = sp.plus
        K = plus.shape[0]
        if opts.bound_prune and np.isfinite(out.cost):
            off = np.ones(N, dtype=bool)
            off[sp.on_index] = False
            off_plus = plus[0] & off
            lb = float(batch_squared_costs(Xbar, y, np.vstack([off_plus, off & ~off_plus])).sum()) / N
            if lb > out.cost * (1 + _BOUND_RTOL) + 1e-15:
                out.pruned += K
                continue
        order = np.arange(K)
        if opts.verify:
            ok = _segment_consistent(plus, triples)
            out.pruned += int(K - ok.sum())
            order = order[ok]
        keys = None
        if seen is not None and order.size:
            keys = _row_keys(plus[order])
            if full is not None:
                canon = [min(k, full ^ k) for k in keys]
            else:
                canon = [min(k, np.packbits(~plus[m]).tobytes()) for k, m in zip(keys, order)]
            keep = [i for i, c in enumerate(canon) if not (c in seen or seen.add(c))]
            order = order[keep]
        if order.size == 0:
            continue
        masks = plus[order]
        if opts.loss is Loss.SQUARED:
            costs = (batch_squared_costs(Xbar, y, masks) + batch_squared_costs(Xbar, y, ~masks)) / N
        else:
            costs = _labeling_costs(Xbar, y, to_labels(masks), 2, opts.loss) / N
        out.evaluated += order.size
        for pos in np.flatnonzero(costs < out.cost):
            J = float(costs[pos])
            if not J < out.cost:
                continue
            m = int(order[pos])
            q = to_labels(plus[m])
            if opts.verify:
                key = q.tobytes()
                if key not in lp_cache:
                    out.lp_checks += 1
                    lp_cache[key] = check_realizability(X, q, 2) is not None
                if not lp_cache[key]:
                    continue
            out.cost = J
            out.key = (rank, m)
            out.labeling = q
            out.hyperplane = sp.hyperplane
            if opts.target is not None and J <= opts.target:
                out.stopped = True
                return out
    return out


def _merge_scans(parts: list[_ScanResult]) -> _ScanResult:
    merged = _ScanResult()
    for part in parts:
        merged.evaluated += part.evaluated
        merged.pruned += part.pruned
        merged.lp_checks += part.lp_checks
        merged.stats.merge(part.stats)
        merged.stopped |= part.stopped
        if part.labeling is not None and (part.cost, part.key) < (merged.cost, merged.key or (np.inf,)):
            merged.cost, merged.key = part.cost, part.key
            merged.labeling, merged.hyperplane = part.labeling, part.hyperplane
    return merged


def _ranges(total: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, total))
    edges = np.linspace(0, total, parts + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def solve_binary_exact(data: Dataset, loss=Loss.SQUARED, *, symmetry_prune: bool = False,
                       bound_prune: bool = False, on_extras: str = "plus",
                       target: float | None = None, verify: bool = False,
                       workers: int = 1, enforce_size: bool = True,
                       refine_classifier: bool = False) -> SolveResult:
    """Globally optimal two-mode PWA model.

    Every d-subset of the regressors defines a hyperplane; points strictly on
    its positive side go to mode 1, strictly negative to mode 2, and each of the
    ``2**d`` assignments of the defining points is evaluated.  The incumbent is
    replaced only on strict improvement, so among equal costs the earliest
    candidate (lexicographic subset, then assignment counter) wins.

    Options that change the visited set:

    - ``symmetry_prune``: skip a labeling if it or its negation was already evaluated.
    - ``bound_prune`` (squared loss): skip a subset when its off-hyperplane
      points alone already cost more than the incumbent.  Exact, since adding
      points to a mode never lowers its least-squares cost.
    - ``target``: stop at the first candidate with cost ``<= target``.  The
      result is then not certified.
    - ``verify``: accept a new incumbent only if it passes ``check_realizability``;
      only needed when general position does not hold.
    - ``workers``: split the subset range over processes; the reduction on
      (cost, candidate order) makes the result identical to a serial run.
      Ignored when ``symmetry_prune``, ``bound_prune`` or ``target`` is set.
    """
    loss = Loss.parse(loss)
    _check_size(data, 2, enforce_size)
    X, y = data.X, data.y
    opts = _BinaryOptions(loss, symmetry_prune, bound_prune and loss is Loss.SQUARED, on_extras, target, verify)
    total = comb(data.N, data.d)
    # both prunes depend on what was visited earlier, so they would give
    # worker-dependent counts; such runs stay serial
    order_dependent = symmetry_prune or opts.bound_prune or target is not None
    if workers > 1 and total > 1 and not order_dependent:
        ranges = _ranges(total, workers)
        with ProcessPoolExecutor(max_workers=len(ranges)) as pool:
            parts = list(pool.map(_binary_scan, *zip(*[(X, y, opts, a, b) for a, b in ranges])))
        scan = _merge_scans(parts)
    else:
        scan = _binary_scan(X, y, opts, 0, None)

    if scan.labeling is None:
        if scan.stats.degenerate == scan.stats.subsets:
            raise AllSubsetsDegenerate(f"all {scan.stats.subsets} subsets were affinely dependent")
        raise NoRealizableLabeling("no candidate labeling survived")
    fit = cost_of_labeling(data, scan.labeling, 2, loss)
    witness = check_realizability(X, scan.labeling, 2)
    classifier = scan.hyperplane
    if refine_classifier and witness is not None:
        classifier = witness.hyperplane()
    return SolveResult(
        best_cost=fit.cost,
        model=PWAModel(fit.submodels, classifier, loss),
        labeling=scan.labeling,
        iterations=scan.evaluated,
        skipped_degenerate=scan.stats.degenerate,
        certified=not scan.stopped,
        n=2,
        evaluated=scan.evaluated,
        pruned=scan.pruned,
        lp_checks=scan.lp_checks + 1,
        realizable=witness is not None,
        target_reached=None if target is None else bool(fit.cost <= target),
        stats=scan.stats,
        winner=scan.key,
    )


# ---------------------------------------------------------------- multiclass


def _multiclass_scan(P: np.ndarray, n: int, start: int, stop: int) -> tuple[np.ndarray, EnumerationStats]:
    stats = EnumerationStats()
    seen: set[bytes] = set()
    found = []
    for block in iter_multiclass_blocks(P, n, stats, start, stop):
        valid = np.all(block > 0, axis=1)
        stats.inconsistent += int((~valid).sum())
        for q in block[valid]:
            key = q.tobytes()
            if key not in seen:
                seen.add(key)
                found.append(q)
    N = P.shape[1]
    return np.array(found, dtype=np.int8).reshape(len(found), N), stats


def _first_realizable(X, labelings, costs, n, order):
    checks = 0
    for idx in order:
        checks += 1
        witness = check_realizability(X, labelings[idx], n)
        if witness is not None:
            return int(idx), witness, checks
    return None, None, checks


def solve_multiclass_exact(data: Dataset, n: int, loss=Loss.SQUARED, *, on_extras: str = "plus",
                           workers: int = 1, enforce_size: bool = True,
                           max_tuples: int = MAX_TUPLES) -> SolveResult:
    """Globally optimal ``n``-mode PWA model for ``n >= 3``.

    Candidate labelings come from ``n(n-1)/2``-tuples of pairwise dichotomies.
    Because that set over-approximates what a linear multiclass classifier can
    realize, candidates are checked with ``check_realizability`` in ascending
    cost order and the first realizable one is returned.  The cheapest
    candidate overall is reported as ``unverified_cost``.

    Raises InstanceTooLarge when the ``M**(n(n-1)/2)`` tuples of the ``M``
    distinct dichotomies exceed ``max_tuples``.
    """
    if n == 2:
        return solve_binary_exact(data, loss, on_extras=on_extras, workers=workers, enforce_size=enforce_size)
    if n < 2:
        raise ValueError("need at least two modes")
    loss = Loss.parse(loss)
    _check_size(data, n, enforce_size)
    X, y = data.X, data.y
    stats = EnumerationStats()
    P = pairwise_dichotomies(X, dedup=True, on_extras=on_extras, stats=stats)
    M = P.shape[0]
    if M == 0:
        raise AllSubsetsDegenerate(f"all {stats.subsets} subsets were affinely dependent")
    n_tuples = M ** (n * (n - 1) // 2)
    if n_tuples > max_tuples:
        raise InstanceTooLarge(f"{M}^{n * (n - 1) // 2} = {n_tuples:.3g} dichotomy tuples exceeds {max_tuples:.3g}")
    if workers > 1 and M > 1:
        ranges = _ranges(M, workers)
        with ProcessPoolExecutor(max_workers=len(ranges)) as pool:
            parts = list(pool.map(_multiclass_scan, *zip(*[(P, n, a, b) for a, b in ranges])))
    else:
        parts = [_multiclass_scan(P, n, 0, M)]
    seen: set[bytes] = set()
    rows = []
    for found, part_stats in parts:
        stats.tuples += part_stats.tuples
        stats.inconsistent += part_stats.inconsistent
        for q in found:
            key = q.tobytes()
            if key not in seen:
                seen.add(key)
                rows.append(q)
    labelings = np.array(rows, dtype=np.int8).reshape(len(rows), data.N)
    stats.yielded = labelings.shape[0]
    Xbar = data.Xbar
    costs = _labeling_costs(Xbar, y, labelings, n, loss) / data.N
    order = np.lexsort((np.arange(len(costs)), costs))
    idx, witness, checks = _first_realizable(X, labelings, costs, n, order)
    if idx is None:
        raise NoRealizableLabeling("no enumerated labeling passed the realizability check")
    q = labelings[idx].astype(int)
    fit = cost_of_labeling(data, q, n, loss)
    unverified = labelings[order[0]].astype(int)
    unverified_cost = float(costs[order[0]])
    if costs[idx] - unverified_cost > 1e-9:
        log.info("unverified minimum %.3g beats certified minimum %.3g", unverified_cost, costs[idx])
    return SolveResult(
        best_cost=fit.cost,
        model=PWAModel(fit.submodels, witness.classifier(), loss),
        labeling=q,
        iterations=stats.tuples,
        skipped_degenerate=stats.degenerate,
        certified=True,
        n=n,
        evaluated=labelings.shape[0],
        lp_checks=checks,
        realizable=True,
        unverified_cost=unverified_cost,
        unverified_labeling=unverified,
        stats=stats,
        winner=(int(idx),),
    )


def solve_exact(data: Dataset, n: int, loss=Loss.SQUARED, **kwargs) -> SolveResult:
    """Dispatch to the binary or multiclass exact solver."""
    if n == 2:
        return solve_binary_exact(data, loss, **kwargs)
    return solve_multiclass_exact(data, n, loss, **kwargs)


# ---------------------------------------------------------------- oracle


def brute_force_oracle(data: Dataset, n: int, loss=Loss.SQUARED, realizable_only: bool = True,
                       max_labelings: int = ORACLE_MAX_LABELINGS) -> SolveResult:
    """Minimum cost over all ``n**N`` labelings, optionally restricted to realizable ones.

    Every labeling is costed with ``cost_of_labeling``; with ``realizable_only``
    they are then checked in ascending cost order (ties by enumeration order)
    and the first realizable one is returned.  Exponential: a test oracle only.
    """
    loss = Loss.parse(loss)
    total = n ** data.N
    if total > max_labelings:
        raise InstanceTooLarge(f"n^N = {n}^{data.N} = {total} labelings exceeds {max_labelings}")
    labelings = np.array(list(itertools.product(range(1, n + 1), repeat=data.N)), dtype=np.int8)
    costs = np.array([cost_of_labeling(data, q, n, loss).cost for q in labelings])
    order = np.lexsort((np.arange(total), costs))
    witness = None
    checks = 0
    if realizable_only:
        idx, witness, checks = _first_realizable(data.X, labelings, costs, n, order)
        if idx is None:
            raise NoRealizableLabeling("no labeling is linearly realizable")
    else:
        idx = int(order[0])
    q = labelings[idx].astype(int)
    fit = cost_of_labeling(data, q, n, loss)
    if witness is not None:
        classifier = witness.hyperplane() if n == 2 else witness.classifier()
    else:
        # arbitrary placeholder classifier; the labeling need not be realizable
        classifier = Hyperplane(np.eye(data.d)[0], 0.0) if n == 2 else MulticlassClassifier(
            np.zeros((n, data.d)), np.zeros(n))
    return SolveResult(
        best_cost=fit.cost,
        model=PWAModel(fit.submodels, classifier, loss),
        labeling=q,
        iterations=total,
        skipped_degenerate=0,
        certified=True,
        n=n,
        evaluated=total,
        lp_checks=checks,
        realizable=witness is not None if realizable_only else None,
    )
