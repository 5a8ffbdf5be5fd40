"""Regressor construction, synthetic PWA data and file formats.

File formats
------------
Dataset CSV: header ``x1,...,xd,y``, one row per data pair.
Model JSON: ``{"n", "d", "submodels", "classifier", "loss"}`` where the
classifier is ``{"normal", "offset"}`` for a binary model and a list of
``{"h", "b"}`` for a multiclass one.
Labeled CSV: the dataset columns followed by ``label`` and ``yhat``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import SequenceTooShort
from .geometry import Hyperplane
from .regression import Dataset, Loss, MulticlassClassifier, PWAModel

DEFAULT_BOX = (-10.0, 10.0)
MIN_MARGIN = 1e-6


@dataclass(frozen=True)
class ArxOrders:
    n_y: int
    n_u: int

    def __post_init__(self):
        if self.n_y < 0 or self.n_u < 0:
            raise ValueError("lag orders must be nonnegative")

    @property
    def d(self) -> int:
        return self.n_y + self.n_u + 1


def build_regressors(u, y, orders: ArxOrders) -> Dataset:
    """ARX regression pairs ``x_t = [y_{t-1}..y_{t-n_y}, u_t..u_{t-n_u}]``, target ``y_t``.

    One pair per time index ``t >= max(n_y, n_u)``, in time order.
    """
    u = np.asarray(u, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if u.shape != y.shape:
        raise ValueError(f"input and output sequences differ in length ({u.size} vs {y.size})")
    lag = max(orders.n_y, orders.n_u)
    if y.size < lag + 1:
        raise SequenceTooShort(f"need at least {lag + 1} samples for orders {orders}, got {y.size}")
    t = np.arange(lag, y.size)
    cols = [y[t - k] for k in range(1, orders.n_y + 1)]
    cols += [u[t - k] for k in range(orders.n_u + 1)]
    return Dataset(np.column_stack(cols), y[t])


def classifier_margin(model: PWAModel, X) -> np.ndarray:
    """Distance of each point from a change of mode, in classifier score units."""
    X = np.atleast_2d(X)
    clf = model.classifier
    if isinstance(clf, Hyperplane):
        return np.abs(clf.value(X))
    scores = np.sort(clf.scores(X), axis=1)
    return scores[:, -1] - scores[:, -2]


def random_pwa_model(n: int, d: int, rng=None, box=DEFAULT_BOX, scale: float = 5.0) -> PWAModel:
    """Random PWA model whose modes all occupy part of the box.

    Binary: a hyperplane through a random point of the box.  Multiclass: a
    Voronoi partition around ``n`` random centers (``h_k = c_k``,
    ``b_k = -|c_k|^2 / 2``).
    """
    rng = np.random.default_rng(rng)
    lo, hi = box
    submodels = rng.uniform(-scale, scale, size=(n, d + 1))
    if n == 2:
        normal = rng.normal(size=d)
        anchor = rng.uniform(lo / 2, hi / 2, size=d)
        normal /= np.linalg.norm(normal)
        clf = Hyperplane(normal, -normal @ anchor)
    else:
        centers = rng.uniform(lo, hi, size=(n, d))
        clf = MulticlassClassifier(centers, -0.5 * np.sum(centers**2, axis=1))
    return PWAModel(submodels, clf)


@dataclass
class GeneratorConfig:
    model: PWAModel
    N: int
    noise_std: float = 0.0
    box: tuple[float, float] = DEFAULT_BOX
    seed: int | None = None
    min_margin: float = MIN_MARGIN

    def __post_init__(self):
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        if self.N < 1:
            raise ValueError("N must be positive")


def generate_pwa_dataset(cfg: GeneratorConfig) -> tuple[Dataset, np.ndarray]:
    """Sample ``y_i = f(x_i) + v_i`` with ``x_i`` uniform in the box and Gaussian ``v_i``.

    Regressors closer than ``min_margin`` to a mode boundary are redrawn.
    Returns the dataset and the true labeling.
    """
    rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.box
    d = cfg.model.d
    X = rng.uniform(lo, hi, size=(cfg.N, d))
    for _ in range(1000):
        bad = classifier_margin(cfg.model, X) < cfg.min_margin
        if not bad.any():
            break
        X[bad] = rng.uniform(lo, hi, size=(int(bad.sum()), d))
    else:
        raise RuntimeError("could not sample regressors away from the mode boundaries")
    labels, yhat = cfg.model.predict(X)
    y = yhat + cfg.noise_std * rng.standard_normal(cfg.N) if cfg.noise_std > 0 else yhat
    return Dataset(X, y), labels


# ---------------------------------------------------------------- I/O


def _fmt(v: float) -> str:
    return repr(float(v))


def write_dataset_csv(data: Dataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow([f"x{k}" for k in range(1, data.d + 1)] + ["y"])
        for x, y in zip(data.X, data.y):
            w.writerow([_fmt(v) for v in x] + [_fmt(y)])


def read_dataset_csv(path) -> Dataset:
    """Read a dataset CSV; raises ValueError on malformed content."""
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    d = len(header) - 1
    if d < 1 or header != [f"x{k}" for k in range(1, d + 1)] + ["y"]:
        raise ValueError(f"{path}: header must be x1,...,xd,y, got {','.join(header)}")
    body = [r for r in rows[1:] if r]
    if not body:
        raise ValueError(f"{path}: no data rows")
    try:
        values = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc
    if values.ndim != 2 or values.shape[1] != d + 1:
        raise ValueError(f"{path}: every row needs {d + 1} values")
    return Dataset(values[:, :d], values[:, d])


def model_to_dict(model: PWAModel) -> dict:
    clf = model.classifier
    if isinstance(clf, Hyperplane):
        classifier = {"normal": clf.normal.tolist(), "offset": clf.offset}
    else:
        classifier = [{"h": h.tolist(), "b": float(b)} for h, b in zip(clf.H, clf.b)]
    return {
        "n": model.n,
        "d": model.d,
        "submodels": model.submodels.tolist(),
        "classifier": classifier,
        "loss": model.loss.value,
    }


def model_from_dict(obj: dict) -> PWAModel:
    clf = obj["classifier"]
    if isinstance(clf, dict):
        classifier = Hyperplane(np.asarray(clf["normal"], dtype=float), float(clf["offset"]))
    else:
        classifier = MulticlassClassifier([c["h"] for c in clf], [c["b"] for c in clf])
    model = PWAModel(np.asarray(obj["submodels"], dtype=float), classifier, Loss.parse(obj.get("loss", "squared")))
    if model.n != obj["n"] or model.d != obj["d"]:
        raise ValueError("model JSON fields n/d disagree with its parameters")
    return model


def write_model_json(model: PWAModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8")


def read_model_json(path) -> PWAModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def write_labeled_csv(data: Dataset, labels, yhat, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow([f"x{k}" for k in range(1, data.d + 1)] + ["y", "label", "yhat"])
        for x, y, q, yh in zip(data.X, data.y, labels, yhat):
            w.writerow([_fmt(v) for v in x] + [_fmt(y), int(q), _fmt(yh)])
