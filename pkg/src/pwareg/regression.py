"""Affine submodel fitting and PWA cost evaluation.

Once the classification of the data is fixed, the optimal PWA parameters
decouple into one independent affine regression per mode.  This module holds
that inner solver and the model/prediction types built on top of it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import linprog

from .geometry import Hyperplane


class Loss(str, enum.Enum):
    SQUARED = "squared"
    ABSOLUTE = "absolute"

    def __call__(self, e):
        e = np.asarray(e, dtype=float)
        if self is Loss.SQUARED:
            return e * e
        return np.abs(e)

    @classmethod
    def parse(cls, value) -> Loss:
        if isinstance(value, Loss):
            return value
        aliases = {"abs": "absolute", "l1": "absolute", "l2": "squared", "sq": "squared"}
        value = str(value).lower()
        return cls(aliases.get(value, value))


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains non-finite values")
        self.X = X
        self.y = y

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def Xbar(self) -> np.ndarray:
        """Regressors augmented with a trailing column of ones."""
        return np.hstack([self.X, np.ones((self.N, 1))])

    def subset(self, idx) -> Dataset:
        return Dataset(self.X[idx], self.y[idx])


class AffineFit(NamedTuple):
    w: np.ndarray
    cost: float
    rank_deficient: bool


def augment(X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _lad_fit(A: np.ndarray, y: np.ndarray) -> np.ndarray:
    # min sum t  s.t.  -t <= y - A w <= t ; variables [w, t]
    m, p = A.shape
    c = np.concatenate([np.zeros(p), np.ones(m)])
    eye = np.eye(m)
    A_ub = np.block([[-A, -eye], [A, -eye]])
    b_ub = np.concatenate([-y, y])
    bounds = [(None, None)] * p + [(0, None)] * m
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"least-absolute-deviation LP failed: {res.message}")
    return res.x[:p]


def fit_affine(X, y, loss=Loss.SQUARED) -> AffineFit:
    """Fit ``y ~ w @ [x, 1]`` on one mode's data.

    Squared loss returns the minimum-norm least-squares solution, so fits on
    fewer than ``d+1`` points (or on a degenerate design) are still defined;
    they are only flagged through ``rank_deficient``.  Absolute loss solves the
    least-absolute-deviation LP and returns one of its minimizers.
    """
    loss = Loss.parse(loss)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] == 0:
        raise ValueError("cannot fit an affine model on an empty subset")
    A = augment(X)
    p = A.shape[1]
    w, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    rank_deficient = rank < p
    if loss is Loss.ABSOLUTE:
        w = _lad_fit(A, y)
    r = y - A @ w
    return AffineFit(w, float(np.sum(loss(r))), bool(rank_deficient))


class LabelingCost(NamedTuple):
    cost: float
    submodels: np.ndarray
    empty_modes: tuple[int, ...]
    rank_deficient_modes: tuple[int, ...]


def cost_of_labeling(data: Dataset, q, n: int, loss=Loss.SQUARED) -> LabelingCost:
    """Mean loss of the best PWA submodels for a fixed labeling ``q`` in ``{1..n}``.

    Empty modes contribute nothing and keep a zero submodel.
    """
    q = np.asarray(q).ravel()
    if q.shape[0] != data.N:
        raise ValueError(f"labeling has length {q.shape[0]}, dataset has {data.N} points")
    if q.size and (q.min() < 1 or q.max() > n):
        raise ValueError(f"labels must lie in 1..{n}")
    submodels = np.zeros((n, data.d + 1))
    total = 0.0
    empty, deficient = [], []
    for j in range(1, n + 1):
        idx = np.flatnonzero(q == j)
        if idx.size == 0:
            empty.append(j)
            continue
        fit = fit_affine(data.X[idx], data.y[idx], loss)
        submodels[j - 1] = fit.w
        total += fit.cost
        if fit.rank_deficient:
            deficient.append(j)
    return LabelingCost(total / data.N, submodels, tuple(empty), tuple(deficient))


@dataclass(eq=False)
class MulticlassClassifier:
    """``argmax_k H[k] @ x + b[k]``, ties going to the smallest mode index."""

    H: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.H = np.atleast_2d(np.asarray(self.H, dtype=float))
        self.b = np.asarray(self.b, dtype=float).ravel()
        if self.H.shape[0] != self.b.shape[0]:
            raise ValueError("H and b disagree on the number of modes")

    @property
    def n(self) -> int:
        return self.H.shape[0]

    def scores(self, X) -> np.ndarray:
        return np.atleast_2d(np.asarray(X, dtype=float)) @ self.H.T + self.b

    def classify(self, X) -> np.ndarray:
        # np.argmax returns the first maximal index
        return np.argmax(self.scores(X), axis=1) + 1


@dataclass(eq=False)
class PWAModel:
    """``n`` affine submodels selected by a linear classifier.

    For ``n == 2`` the classifier may be a single Hyperplane: mode 1 where
    ``h @ x + b >= 0`` and mode 2 elsewhere.
    """

    submodels: np.ndarray
    classifier: Hyperplane | MulticlassClassifier
    loss: Loss = Loss.SQUARED

    def __post_init__(self):
        self.submodels = np.atleast_2d(np.asarray(self.submodels, dtype=float))
        self.loss = Loss.parse(self.loss)
        n_clf = 2 if isinstance(self.classifier, Hyperplane) else self.classifier.n
        if n_clf != self.submodels.shape[0]:
            raise ValueError(
                f"classifier has {n_clf} modes but {self.submodels.shape[0]} submodels given"
            )

    @property
    def n(self) -> int:
        return self.submodels.shape[0]

    @property
    def d(self) -> int:
        return self.submodels.shape[1] - 1

    def classify(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if isinstance(self.classifier, Hyperplane):
            # sign(0) = +1
            return np.where(self.classifier.value(X) >= 0, 1, 2)
        return self.classifier.classify(X)

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise ValueError(f"expected regressors of dimension {self.d}, got {X.shape[1]}")
        modes = self.classify(X)
        yhat = np.einsum("ij,ij->i", augment(X), self.submodels[modes - 1])
        return modes, yhat


def predict(model: PWAModel, x) -> tuple[int, float]:
    """Mode and output of ``model`` at a single regressor ``x``."""
    modes, yhat = model.predict(np.asarray(x, dtype=float).reshape(1, -1))
    return int(modes[0]), float(yhat[0])


def model_cost(model: PWAModel, data: Dataset, loss=None) -> float:
    """Mean loss of ``model`` itself (its own classifier decides the modes)."""
    loss = model.loss if loss is None else Loss.parse(loss)
    _, yhat = model.predict(data.X)
    return float(np.mean(loss(data.y - yhat)))


def batch_squared_costs(Xbar: np.ndarray, y: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """Least-squares residual cost of each row-mask of the data, computed in one batch.

    ``masks`` has shape (B, N).  Masked-out rows are zeroed in both the design
    and the target, so they leave the fit and contribute no residual.  The
    minimum-norm solution is taken from a batched SVD with the same rank cutoff
    as ``numpy.linalg.lstsq`` and the residual is formed explicitly.
    """
    masks = np.asarray(masks, dtype=bool)
    if masks.ndim == 1:
        masks = masks[None]
    B, N = masks.shape
    if B == 0:
        return np.zeros(0)
    p = Xbar.shape[1]
    m = masks.astype(float)
    A = Xbar[None, :, :] * m[:, :, None]
    t = y[None, :] * m
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    cutoff = np.finfo(float).eps * max(N, p) * s[:, :1]
    inv = np.where(s > cutoff, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    coef = np.einsum("bnk,bn->bk", U, t) * inv
    w = np.einsum("bkp,bk->bp", Vt, coef)
    r = t - np.einsum("bnp,bp->bn", A, w)
    return np.einsum("bn,bn->b", r, r)
