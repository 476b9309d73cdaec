"""Rating-prediction models: ridge (closed form) and brute-force KNN.

Both fit on features standardized with training statistics only. The model
interface is fit/predict/describe so further regressor kinds can slot in
behind the same contract.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class LabeledDesign:
    """Feature matrix plus labels normalized to [0, 1]."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels length disagrees with feature rows")
        if len(self.feature_names) != self.features.shape[1]:
            raise ValueError("feature_names length disagrees with feature columns")
        if not np.isfinite(self.features).all() or not np.isfinite(self.labels).all():
            raise ValueError("design contains non-finite entries")
        if self.labels.size and (self.labels.min() < -1e-12 or self.labels.max() > 1.0 + 1e-12):
            raise ValueError("labels must be normalized to [0, 1]")

    @property
    def m(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")


def normalize_labels(values: np.ndarray, max_value: float) -> np.ndarray:
    """Divide by the declared maximum; result must land in [0, 1]."""
    values = np.asarray(values, dtype=np.float64)
    scaled = values / max_value
    if scaled.size and (scaled.min() < -1e-12 or scaled.max() > 1.0 + 1e-12):
        raise ValueError("labels exceed their declared maximum")
    return scaled


def split(design: LabeledDesign, spec: SplitSpec) -> tuple[LabeledDesign, LabeledDesign]:
    """Seed-deterministic shuffle into floor(m * fraction) train rows and the rest."""
    m = design.m
    if m < 2:
        raise ValueError("need at least 2 rows to split")
    n_train = math.floor(m * spec.train_fraction)
    if n_train < 1 or n_train >= m:
        raise ValueError("split leaves an empty train or test side")
    perm = np.random.default_rng(spec.seed).permutation(m)
    train_idx, test_idx = perm[:n_train], perm[n_train:]
    return (
        LabeledDesign(design.features[train_idx], design.labels[train_idx], design.feature_names),
        LabeledDesign(design.features[test_idx], design.labels[test_idx], design.feature_names),
    )


@dataclass
class Standardizer:
    """Per-feature train means and standard deviations. Constant columns get
    deviation 1 so they scale to zero columns instead of dividing by zero."""

    means: np.ndarray
    stds: np.ndarray

    @classmethod
    def fit(cls, features: np.ndarray) -> "Standardizer":
        means = features.mean(axis=0)
        stds = features.std(axis=0)
        return cls(means=means, stds=np.where(stds == 0.0, 1.0, stds))

    @classmethod
    def identity(cls, width: int) -> "Standardizer":
        return cls(means=np.zeros(width), stds=np.ones(width))

    def apply(self, features: np.ndarray) -> np.ndarray:
        return (features - self.means) / self.stds


@dataclass
class FittedModel:
    kind: str
    standardizer: Standardizer
    feature_names: tuple[str, ...]
    # ridge
    weights: np.ndarray | None = None
    intercept: float = 0.0
    ridge_lambda: float | None = None
    jittered: bool = False
    # knn
    train_features: np.ndarray | None = field(default=None, repr=False)
    train_labels: np.ndarray | None = field(default=None, repr=False)
    k: int | None = None

    def describe(self) -> dict:
        """JSON-serializable summary of the fitted model."""
        out = {
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "standardizer": {
                "means": self.standardizer.means.tolist(),
                "stds": self.standardizer.stds.tolist(),
            },
        }
        if self.kind == "ridge":
            out["hyperparameters"] = {"lambda": self.ridge_lambda, "jittered": self.jittered}
            out["weights"] = self.weights.tolist()
            out["intercept"] = self.intercept
        else:
            out["hyperparameters"] = {"k": self.k}
            out["train_size"] = int(self.train_features.shape[0])
        return out


def fit_ridge(
    train: LabeledDesign, ridge_lambda: float = 1.0, standardize: bool = True
) -> FittedModel:
    """Closed-form ridge on standardized features and centered labels.

    A singular system at lambda=0 falls back to the minimum-norm solution
    via a 1e-10 jitter, reported on the model. standardize=False skips the
    scaling step (identity standardizer) for callers checking the raw
    solver algebra.
    """
    if ridge_lambda < 0.0:
        raise ValueError("ridge lambda must be nonnegative")
    if train.features.shape[1] < 1:
        raise ValueError("ridge needs at least one feature column")
    scaler = Standardizer.fit(train.features) if standardize else Standardizer.identity(
        train.features.shape[1]
    )
    x = scaler.apply(train.features)
    intercept = float(train.labels.mean())
    y = train.labels - intercept
    gram = x.T @ x
    rhs = x.T @ y
    identity = np.eye(x.shape[1])
    jittered = False
    if ridge_lambda > 0.0:
        weights = np.linalg.solve(gram + ridge_lambda * identity, rhs)
    else:
        try:
            weights = np.linalg.solve(gram, rhs)
            residual = gram @ weights - rhs
            scale = max(np.abs(rhs).max(), np.abs(gram).max(), 1.0)
            if not np.isfinite(weights).all() or np.abs(residual).max() > 1e-8 * scale:
                raise np.linalg.LinAlgError("ill-conditioned normal equations")
        except np.linalg.LinAlgError:
            weights = np.linalg.solve(gram + 1e-10 * identity, rhs)
            jittered = True
            logger.warning("singular system at lambda=0; fell back to 1e-10 jitter")
    return FittedModel(
        kind="ridge",
        standardizer=scaler,
        feature_names=train.feature_names,
        weights=weights,
        intercept=intercept,
        ridge_lambda=ridge_lambda,
        jittered=jittered,
    )


def fit_knn(train: LabeledDesign, k: int = 5) -> FittedModel:
    """Store standardized training rows; prediction averages the labels of
    the k nearest rows by Euclidean distance, ties broken by lower row index."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > train.m:
        raise ValueError(f"k={k} exceeds training size {train.m}")
    scaler = Standardizer.fit(train.features)
    return FittedModel(
        kind="knn",
        standardizer=scaler,
        feature_names=train.feature_names,
        train_features=scaler.apply(train.features),
        train_labels=train.labels.copy(),
        k=k,
    )


def predict(model: FittedModel, features: np.ndarray) -> np.ndarray:
    """Apply the model's standardizer, then its predictor."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != len(model.feature_names):
        raise ValueError(
            f"feature matrix width {features.shape[1] if features.ndim == 2 else '?'} "
            f"disagrees with model width {len(model.feature_names)}"
        )
    x = model.standardizer.apply(features)
    if model.kind == "ridge":
        return x @ model.weights + model.intercept
    out = np.empty(features.shape[0])
    for row in range(x.shape[0]):
        delta = model.train_features - x[row]
        dist2 = np.einsum("ij,ij->i", delta, delta)
        # Stable sort keeps the lower row index first on exact distance ties.
        nearest = np.argsort(dist2, kind="stable")[: model.k]
        out[row] = model.train_labels[nearest].mean()
    return out


def rmse(predictions: np.ndarray, labels: np.ndarray) -> float:
    """Root mean squared error."""
    predictions = np.asarray(predictions, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if predictions.shape != labels.shape or predictions.size == 0:
        raise ValueError("predictions and labels must be equal-length and nonempty")
    return float(np.sqrt(np.mean((predictions - labels) ** 2)))
