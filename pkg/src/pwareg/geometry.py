"""Hyperplanes through point subsets and point-side classification.

All points of a dataset share one dimension ``d``.  A hyperplane is stored as
a unit normal ``h`` and an offset ``b``; a point ``x`` lies on its positive
side when ``h @ x + b > TAU_ON``.
"""

from __future__ import annotations

import enum
import itertools
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateSubset

# absolute tolerance on |h @ x + b| once h has unit norm
TAU_ON = 1e-9
TAU_UNIT = 1e-12
# singular values below RANK_RTOL * s_max count as zero
RANK_RTOL = 1e-10

GENERAL_POSITION_MAX_N = 200


class Side(enum.Enum):
    PLUS = 1
    MINUS = -1
    ON = 0


@dataclass(frozen=True, eq=False)
class Hyperplane:
    """The set ``{x : normal @ x + offset = 0}`` with a unit normal."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        normal = np.asarray(self.normal, dtype=float).ravel()
        norm = np.linalg.norm(normal)
        if not np.isfinite(norm) or norm == 0.0:
            raise ValueError("hyperplane normal must be a finite nonzero vector")
        if abs(norm - 1.0) > TAU_UNIT:
            normal = normal / norm
            object.__setattr__(self, "offset", float(self.offset) / norm)
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return self.normal.shape[0]

    def value(self, X) -> np.ndarray | float:
        """Signed distance ``normal @ x + offset`` for one point or a stack of points."""
        X = np.asarray(X, dtype=float)
        return X @ self.normal + self.offset

    def canonical(self) -> Hyperplane:
        """Same hyperplane with the first nonzero normal coordinate made positive."""
        nz = np.flatnonzero(np.abs(self.normal) > TAU_UNIT)
        if nz.size and self.normal[nz[0]] < 0:
            return Hyperplane(-self.normal, -self.offset)
        return self

    def flipped(self) -> Hyperplane:
        return Hyperplane(-self.normal, -self.offset)

    def __eq__(self, other):
        if not isinstance(other, Hyperplane):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.allclose(self.normal, other.normal, rtol=0, atol=1e-12)
            and abs(self.offset - other.offset) <= 1e-12 * max(1.0, abs(self.offset))
        )

    __hash__ = None

    def __repr__(self):
        return f"Hyperplane(normal={self.normal.tolist()}, offset={self.offset!r})"


def hyperplanes_through_batch(P) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Canonical hyperplanes through each stack of ``d`` points in ``P`` (shape (B, d, d)).

    Returns ``(normals, offsets, ok)``; rows with ``ok == False`` are affinely
    dependent and their normal/offset are meaningless.
    """
    P = np.asarray(P, dtype=float)
    B, k, d = P.shape
    if k != d:
        raise ValueError(f"need exactly d={d} points per subset, got {k}")
    if d == 1:
        normals = np.ones((B, 1))
        ok = np.ones(B, dtype=bool)
    else:
        _, s, vt = np.linalg.svd(P[:, 1:] - P[:, :1], full_matrices=True)
        # rank must be exactly d - 1
        ok = (s[:, 0] > 0) & (s[:, -1] > RANK_RTOL * s[:, 0])
        normals = vt[:, -1, :]
        normals = normals / np.linalg.norm(normals, axis=1, keepdims=True)
    # canonical sign: first clearly nonzero coordinate positive
    first = np.argmax(np.abs(normals) > TAU_UNIT, axis=1)
    flip = normals[np.arange(B), first] < 0
    normals = np.where(flip[:, None], -normals, normals)
    # average over the defining points so every one of them is within rounding of 0
    offsets = -np.einsum("bkd,bd->bk", P, normals).mean(axis=1)
    return normals, offsets, ok


def hyperplane_through(points) -> Hyperplane:
    """Hyperplane containing exactly the ``d`` given points of ``R^d``.

    The normal is a unit vector of the null space of ``[x_2 - x_1, ..., x_d - x_1]^T``
    and the offset is ``-h @ x_1`` (averaged over the points).  The result is
    sign-canonicalized, so the order of the input points does not matter beyond
    rounding.

    Raises DegenerateSubset when the points are affinely dependent.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    k, d = P.shape
    if d < 1:
        raise ValueError("dimension must be at least 1")
    if k != d:
        raise ValueError(f"need exactly d={d} points, got {k}")
    normals, offsets, ok = hyperplanes_through_batch(P[None])
    if not ok[0]:
        raise DegenerateSubset("points are affinely dependent")
    return Hyperplane(normals[0], offsets[0])


def side_of(hp: Hyperplane, x, tol: float = TAU_ON) -> Side:
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != hp.dim:
        raise ValueError(f"point has dimension {x.shape[0]}, hyperplane has {hp.dim}")
    g = float(hp.value(x))
    if g > tol:
        return Side.PLUS
    if g < -tol:
        return Side.MINUS
    return Side.ON


def sides(hp: Hyperplane, X, tol: float = TAU_ON) -> np.ndarray:
    """Vectorized side test: +1, -1 or 0 (on) for each row of ``X``."""
    g = hp.value(np.atleast_2d(X))
    out = np.zeros(g.shape, dtype=np.int8)
    out[g > tol] = 1
    out[g < -tol] = -1
    return out


def iter_subsets(N: int, d: int, start: int = 0, stop: int | None = None) -> Iterator[tuple[int, ...]]:
    """Lexicographic d-subsets of ``range(N)``; ``start``/``stop`` select a rank range."""
    if not 1 <= d <= N:
        raise ValueError(f"need 1 <= d <= N, got d={d}, N={N}")
    return itertools.islice(itertools.combinations(range(N), d), start, stop)


def affinely_independent(P: np.ndarray) -> bool:
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if P.shape[0] == 1:
        return True
    D = P[1:] - P[0]
    s = np.linalg.svd(D, compute_uv=False)
    scale = max(1.0, float(np.abs(P).max()))
    return s.size == D.shape[0] and s[-1] > 1e-9 * scale


def check_general_position(points, force: bool = False) -> tuple[bool, tuple[int, ...] | None]:
    """Exhaustively test that every ``d+1`` of the points are affinely independent.

    Returns ``(True, None)`` or ``(False, first_offending_subset)``.  This costs
    ``C(N, d+1)`` rank tests; for ``N > 200`` it refuses to run unless
    ``force=True``.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    N, d = P.shape
    if N < d + 1:
        raise ValueError(f"need at least d+1={d + 1} points, got {N}")
    if N > GENERAL_POSITION_MAX_N and not force:
        raise ValueError(
            f"exhaustive general-position check over N={N} points is gated; pass force=True"
        )
    for subset in itertools.combinations(range(N), d + 1):
        if not affinely_independent(P[list(subset)]):
            return False, subset
    return True, None
