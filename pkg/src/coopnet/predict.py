"""Feature tables, linear models, train/test splitting and evaluation."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import stats
from .errors import ConfigError, DataError
from .trees import ExtraTreesModel, train_extra_trees

log = logging.getLogger(__name__)

TARGET_COLUMN = "cooperativity"
LABEL_COLUMN = "label"
# Columns that identify a row rather than describe it.
ID_COLUMNS = ("community_id", "algorithm", "network", "source", "id", "dataset", "members")


@dataclass(frozen=True)
class FeatureTable:
    X: np.ndarray
    target: np.ndarray
    labels: np.ndarray
    ids: tuple[str, ...]
    feature_names: tuple[str, ...]

    def __post_init__(self):
        n = len(self.target)
        if self.X.ndim != 2 or self.X.shape[0] != n or len(self.labels) != n or len(self.ids) != n:
            raise DataError("feature table columns have inconsistent lengths")
        if self.X.shape[1] != len(self.feature_names) or self.X.shape[1] < 1:
            raise DataError("feature table needs at least one named feature column")

    @classmethod
    def from_arrays(cls, X, target, labels=None, feature_names=None, ids=None, binarize="mean"):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        target = np.asarray(target, dtype=float)
        if labels is None:
            labels = stats.binarize(target, binarize)
        if feature_names is None:
            feature_names = [f"x{i}" for i in range(X.shape[1])]
        if ids is None:
            ids = [str(i) for i in range(len(target))]
        return cls(X, target, np.asarray(labels, dtype=np.int64), tuple(ids), tuple(feature_names))

    def __len__(self) -> int:
        return len(self.target)

    def subset(self, rows) -> "FeatureTable":
        rows = np.asarray(rows, dtype=np.int64)
        return replace(
            self,
            X=self.X[rows],
            target=self.target[rows],
            labels=self.labels[rows],
            ids=tuple(self.ids[i] for i in rows),
        )


def _label_value(text: str) -> int:
    t = text.strip().lower()
    if t in ("1", "cooperative", "true"):
        return 1
    if t in ("0", "defective", "false"):
        return 0
    raise DataError(f"unrecognised label {text!r}")


def read_feature_table(path, binarize: str | float = "mean", group: str | None = None) -> FeatureTable:
    """Load a CSV with feature columns, ``cooperativity`` and optional ``label``.

    ``binarize="label"`` takes the binary target from the label column;
    otherwise it is derived from cooperativity.  ``group`` keeps only rows
    whose ``algorithm`` column equals it.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    if not rows:
        raise DataError(f"{path}: no data rows")
    columns = list(rows[0].keys())
    if TARGET_COLUMN not in columns:
        raise DataError(f"{path}: missing '{TARGET_COLUMN}' column")
    if group is not None:
        rows = [r for r in rows if r.get("algorithm") == group]
        if not rows:
            raise DataError(f"{path}: no rows for algorithm {group!r}")
    features = [c for c in columns if c not in ID_COLUMNS and c not in (TARGET_COLUMN, LABEL_COLUMN)]
    try:
        X = np.array([[float(r[c]) for c in features] for r in rows], dtype=float).reshape(len(rows), len(features))
        target = np.array([float(r[TARGET_COLUMN]) for r in rows])
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric value ({exc})") from None
    if binarize == "label":
        if LABEL_COLUMN not in columns:
            raise DataError(f"{path}: no '{LABEL_COLUMN}' column to binarize from")
        labels = np.array([_label_value(r[LABEL_COLUMN]) for r in rows])
    else:
        labels = stats.binarize(target, binarize)
    id_col = next((c for c in ("community_id", "id", "network") if c in columns), None)
    ids = [f"{r.get('algorithm', '')}:{r[id_col]}" if id_col else str(i) for i, r in enumerate(rows)]
    return FeatureTable(X, target, labels, tuple(ids), tuple(features))


def write_feature_table(table: FeatureTable, path, header: Sequence[str] = ()) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["id", *table.feature_names, TARGET_COLUMN, LABEL_COLUMN])
        for i in range(len(table)):
            w.writerow([table.ids[i], *map(repr, table.X[i].tolist()), repr(float(table.target[i])), int(table.labels[i])])


@dataclass(frozen=True)
class Standardizer:
    """Z-scoring fitted on training rows; constant columns are dropped."""

    mean: np.ndarray
    std: np.ndarray
    keep: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray, names: Sequence[str] = ()) -> "Standardizer":
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        keep = std > 0
        for j in np.flatnonzero(~keep):
            name = names[j] if j < len(names) else f"feature {j}"
            log.warning("dropping constant feature %s for linear model", name)
        if not keep.any():
            raise DataError("every feature is constant on the training rows")
        return cls(mean, std, keep)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.mean.size:
            raise DataError(f"expected {self.mean.size} features, got {X.shape[1]}")
        return ((X - self.mean) / np.where(self.keep, self.std, 1.0))[:, self.keep]


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


@dataclass
class LogisticModel:
    scaler: Standardizer
    weights: np.ndarray
    intercept: float
    hyperparameters: dict
    kind: str = "logistic"
    binary: bool = True

    @property
    def n_features(self) -> int:
        return self.scaler.mean.size

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(self.scaler.transform(X) @ self.weights + self.intercept)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) > 0.5).astype(np.int64)


def _check_two_classes(labels):
    if len(labels) < 2:
        raise DataError("need at least 2 training rows")
    if len(np.unique(labels)) < 2:
        raise DataError("single-class target: both classes are needed for training")


def train_logistic(
    train: FeatureTable,
    learning_rate: float = 0.5,
    epochs: int = 2000,
    cost: str = "cross_entropy",
) -> LogisticModel:
    """Full-batch gradient descent on z-scored features.

    ``cost="squared_sigmoid"`` minimises ``0.5 * (sigmoid(w.x) - y)**2`` per
    row instead of the cross-entropy.  Labels are 0/1.
    """
    if cost not in ("cross_entropy", "squared_sigmoid"):
        raise ConfigError(f"unknown logistic cost {cost!r}")
    y = np.asarray(train.labels, dtype=float)
    _check_two_classes(y)
    scaler = Standardizer.fit(train.X, train.feature_names)
    Z = scaler.transform(train.X)
    n, p = Z.shape
    w = np.zeros(p)
    b = 0.0
    for _ in range(epochs):
        s = sigmoid(Z @ w + b)
        err = s - y
        if cost == "squared_sigmoid":
            err = err * s * (1.0 - s)
        w -= learning_rate * (Z.T @ err) / n
        b -= learning_rate * err.mean()
    return LogisticModel(scaler, w, b, {"learning_rate": learning_rate, "epochs": epochs, "cost": cost})


def ridge_solve(X, y, lam: float, fit_intercept: bool = True) -> tuple[np.ndarray, float]:
    """Closed-form ridge; the intercept is never penalised."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if lam < 0:
        raise ConfigError("lambda must be non-negative")
    if fit_intercept:
        xm, ym = X.mean(axis=0), y.mean()
        Xc, yc = X - xm, y - ym
    else:
        Xc, yc = X, y
    gram = Xc.T @ Xc + lam * np.eye(X.shape[1])
    if lam == 0 and np.linalg.matrix_rank(gram) < gram.shape[0]:
        raise DataError("singular normal equations with lambda = 0; use lambda > 0")
    theta = np.linalg.solve(gram, Xc.T @ yc)
    intercept = float(ym - xm @ theta) if fit_intercept else 0.0
    return theta, intercept


@dataclass
class RidgeModel:
    scaler: Standardizer
    coef: np.ndarray
    intercept: float
    hyperparameters: dict
    cv_mse: dict = field(default_factory=dict)
    kind: str = "ridge"
    binary: bool = False

    @property
    def n_features(self) -> int:
        return self.scaler.mean.size

    def predict(self, X) -> np.ndarray:
        return self.scaler.transform(X) @ self.coef + self.intercept


DEFAULT_LAMBDAS = (0.01, 0.1, 1.0, 10.0, 100.0)


def kfold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    order = np.random.default_rng(seed).permutation(n)
    return np.array_split(order, folds)


def train_ridge(
    train: FeatureTable,
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
    folds: int = 5,
    seed: int = 0,
) -> RidgeModel:
    """Pick lambda by k-fold CV MSE (ties to the smaller value) and refit."""
    n = len(train)
    if folds < 2:
        raise ConfigError("need at least 2 folds")
    if n < folds:
        raise DataError(f"need at least {folds} rows for {folds}-fold cross-validation")
    if not lambdas or any(lam < 0 for lam in lambdas):
        raise ConfigError("lambda grid must be non-empty and non-negative")
    X, y = train.X, train.target
    parts = kfold_indices(n, folds, seed)
    cv = {}
    for lam in sorted(lambdas):
        errs = []
        for k in range(folds):
            test_idx = parts[k]
            fit_idx = np.concatenate([parts[j] for j in range(folds) if j != k])
            sc = Standardizer.fit(X[fit_idx])
            coef, icpt = ridge_solve(sc.transform(X[fit_idx]), y[fit_idx], lam)
            errs.append(stats.mse(sc.transform(X[test_idx]) @ coef + icpt, y[test_idx]))
        cv[lam] = float(np.mean(errs))
    best = min(cv, key=lambda lam: (cv[lam], lam))
    scaler = Standardizer.fit(X, train.feature_names)
    coef, icpt = ridge_solve(scaler.transform(X), y, best)
    return RidgeModel(scaler, coef, icpt, {"lambda": best, "lambdas": list(sorted(lambdas)), "folds": folds}, cv)


def split(table: FeatureTable, fraction: float = 0.8, seed: int = 0, stratified: bool = True):
    """Deterministic shuffled train/test split."""
    if not 0 < fraction < 1:
        raise ConfigError("train fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    n = len(table)
    if stratified:
        train_idx, test_idx = [], []
        for c in np.unique(table.labels):
            rows = rng.permutation(np.flatnonzero(table.labels == c))
            k = int(round(fraction * rows.size))
            if k == 0:
                raise DataError(f"class {int(c)} absent from training part after stratified split")
            train_idx.extend(rows[:k])
            test_idx.extend(rows[k:])
    else:
        order = rng.permutation(n)
        k = int(round(fraction * n))
        train_idx, test_idx = order[:k], order[k:]
    if len(train_idx) == 0 or len(test_idx) == 0:
        raise DataError(f"split of {n} rows at fraction {fraction} leaves an empty part")
    return table.subset(np.sort(train_idx)), table.subset(np.sort(test_idx))


@dataclass
class ModelReport:
    model: str
    task: str
    n_train: int
    n_test: int
    prediction_accuracy: float | None
    mse: float
    rmse: float | None
    feature_importances: dict | None
    hyperparameters: dict
    split_seed: int | None = None

    def row(self) -> dict:
        out = {
            "model": self.model,
            "task": self.task,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "prediction_accuracy": "" if self.prediction_accuracy is None else self.prediction_accuracy,
            "mse": self.mse,
            "rmse": "" if self.rmse is None else self.rmse,
        }
        return out


def evaluate(model, test: FeatureTable, n_train: int = 0, split_seed: int | None = None) -> ModelReport:
    if test.X.shape[1] != model.n_features:
        raise DataError(f"model expects {model.n_features} features, test table has {test.X.shape[1]}")
    importances = None
    if isinstance(model, ExtraTreesModel):
        importances = dict(zip(test.feature_names, map(float, model.feature_importances)))
    if model.binary:
        pred = model.predict(test.X)
        counts = stats.ConfusionCounts.from_labels(pred, test.labels)
        pa = stats.prediction_accuracy(counts)
        err = (counts.fp + counts.fn) / counts.total
        return ModelReport(model.kind, "binary", n_train, len(test), pa, err, None,
                           importances, dict(model.hyperparameters), split_seed)
    pred = model.predict(test.X)
    err = stats.mse(pred, test.target)
    return ModelReport(model.kind, "regression", n_train, len(test), None, err, float(np.sqrt(err)),
                       importances, dict(model.hyperparameters), split_seed)


MODEL_KINDS = ("logistic", "extratrees", "ridge")


def fit_model(kind: str, train: FeatureTable, seed: int = 0, **params):
    if kind == "logistic":
        return train_logistic(train, **params)
    if kind == "extratrees":
        return train_extra_trees(train, seed=seed, **params)
    if kind == "ridge":
        return train_ridge(train, seed=seed, **params)
    raise ConfigError(f"unknown model {kind!r}; choose from {', '.join(MODEL_KINDS)}")
