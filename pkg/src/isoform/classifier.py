"""Form grading for repetitions: angle bands plus a small MLP.

Two complementary models assess a repetition's feature vector. The band
model grades each angle against a mean +/- k*sigma interval fitted on
correct-class data, with strictness k per user level; it powers the
per-angle feedback text. The MLP predicts a distribution over the three
form classes (correct plus two mistakes) and feeds the three-part
assessment metric.

Angles live on a circle, so band statistics use circular means and the
deviations are wrapped into [-180, 180) before averaging. Model-facing
MLP inputs are feature degrees scaled by 1/360.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .features import AngleFeatureVector, FeatureConfig

CLASS_COUNT = 3

# Strictness multiplier applied to sigma per user level.
GRADE_LEVELS = {"professional": 0.5, "standard": 1.0, "beginner": 1.5}


class InsufficientData(ValueError):
    """Too few samples to fit a model."""


class NonFiniteLoss(RuntimeError):
    """Training diverged: the loss stopped being a finite number."""


class DimensionMismatch(ValueError):
    """A feature vector does not match the model's expected layout."""


def wrap_degrees(delta: np.ndarray | float) -> np.ndarray | float:
    """Map angle differences onto [-180, 180)."""
    return (delta + 180.0) % 360.0 - 180.0


# -- angle band model ---------------------------------------------------


@dataclass(frozen=True)
class BandViolation:
    """One out-of-band angle: signed deviation from the mean, in degrees."""

    triplet_label: str
    deviation: float
    limit: float


@dataclass(frozen=True)
class GradeResult:
    passed: bool
    level: str
    violations: tuple[BandViolation, ...]


@dataclass(frozen=True)
class AngleBandModel:
    """Per-triplet circular mean and deviation of correct-class features."""

    triplet_labels: tuple[str, ...]
    means: np.ndarray  # degrees in [0, 360)
    stds: np.ndarray  # degrees, >= 0
    bin_width: float  # tolerance slack absorbing feature quantization

    def __post_init__(self) -> None:
        if not len(self.triplet_labels) == len(self.means) == len(self.stds):
            raise ValueError("labels, means, and stds must align")

    def tolerance(self, level: str) -> np.ndarray:
        return GRADE_LEVELS[level] * self.stds + self.bin_width


def fit_bands(
    correct_features: np.ndarray,
    triplet_labels: tuple[str, ...],
    config: FeatureConfig = FeatureConfig(),
) -> AngleBandModel:
    """Fit per-triplet bands from correct-class features (degrees).

    The mean is the circular mean; the deviation is the population
    standard deviation of the wrapped differences from that mean, so
    samples straddling the 0/360 seam fit a tight band instead of a
    nonsense one.
    """
    feats = np.asarray(correct_features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[1] != len(triplet_labels):
        raise DimensionMismatch(
            f"expected (n, {len(triplet_labels)}) features, got {feats.shape}"
        )
    if len(feats) < 2:
        raise InsufficientData("band fitting needs at least 2 correct reps")
    radians = np.radians(feats)
    mean_sin = np.sin(radians).mean(axis=0)
    mean_cos = np.cos(radians).mean(axis=0)
    means = np.degrees(np.arctan2(mean_sin, mean_cos)) % 360.0
    means = np.where(means >= 360.0, 0.0, means)
    deviations = wrap_degrees(feats - means)
    stds = np.sqrt((deviations**2).mean(axis=0))
    return AngleBandModel(
        triplet_labels=tuple(triplet_labels),
        means=means,
        stds=stds,
        bin_width=config.bin_width,
    )


def grade(
    feature: AngleFeatureVector, bands: AngleBandModel, level: str = "standard"
) -> GradeResult:
    """Pass/fail a rep against the bands at one strictness level.

    A rep passes when every angle sits within level*sigma plus one bin
    width of the band mean (circular distance). Violations carry the
    signed deviation so feedback can say which way the angle was off.
    """
    if level not in GRADE_LEVELS:
        raise KeyError(f"unknown grade level {level!r}")
    if feature.triplet_labels != bands.triplet_labels:
        raise DimensionMismatch(
            f"feature triplets {feature.triplet_labels} do not match bands"
        )
    deviations = wrap_degrees(feature.values - bands.means)
    limits = bands.tolerance(level)
    violations = tuple(
        BandViolation(label, float(dev), float(lim))
        for label, dev, lim in zip(bands.triplet_labels, deviations, limits)
        if abs(dev) > lim
    )
    return GradeResult(passed=not violations, level=level, violations=violations)


# -- multilayer perceptron ----------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; defaults chosen for small feature sets."""

    hidden_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    epochs: int = 200
    batch_size: int = 16
    seed: int = 0

    def __post_init__(self) -> None:
        if self.hidden_size < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("hidden_size, epochs, and batch_size must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")


@dataclass
class MlpModel:
    """One-hidden-layer rectifier network with a 3-class softmax head.

    Inputs are feature degrees scaled by 1/360; predict() applies the
    scaling itself so callers always pass degrees.
    """

    w1: np.ndarray  # (in_size, hidden)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden, CLASS_COUNT)
    b2: np.ndarray  # (CLASS_COUNT,)
    config: TrainConfig = TrainConfig()
    loss_history: tuple[float, ...] = ()

    @property
    def layer_sizes(self) -> tuple[int, int, int]:
        return (self.w1.shape[0], self.w1.shape[1], self.w2.shape[1])


@dataclass(frozen=True)
class ClassPrediction:
    """A 3-class distribution ordered (correct, mistake1, mistake2)."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        if self.probs.shape != (CLASS_COUNT,):
            raise ValueError(f"expected {CLASS_COUNT} probabilities")
        if abs(float(self.probs.sum()) - 1.0) > 1e-9:
            raise ValueError("probabilities must sum to 1")

    @property
    def predicted_class(self) -> int:
        return int(np.argmax(self.probs))

    @property
    def max_mistake_prob(self) -> float:
        return float(self.probs[1:].max())


def init_model(in_size: int, config: TrainConfig = TrainConfig()) -> MlpModel:
    """He-initialized network; the draw order is part of the contract."""
    rng = np.random.default_rng(config.seed)
    w1 = rng.normal(0.0, np.sqrt(2.0 / in_size), (in_size, config.hidden_size))
    w2 = rng.normal(0.0, np.sqrt(2.0 / config.hidden_size), (config.hidden_size, CLASS_COUNT))
    return MlpModel(
        w1=w1,
        b1=np.zeros(config.hidden_size),
        w2=w2,
        b2=np.zeros(CLASS_COUNT),
        config=config,
    )


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward(model: MlpModel, x_scaled: np.ndarray) -> np.ndarray:
    """Class probabilities for pre-scaled inputs, one row per sample."""
    hidden = np.maximum(x_scaled @ model.w1 + model.b1, 0.0)
    return _softmax(hidden @ model.w2 + model.b2)


def loss_and_gradients(
    model: MlpModel, x_scaled: np.ndarray, labels: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy and its gradients for one batch."""
    n = len(x_scaled)
    z1 = x_scaled @ model.w1 + model.b1
    a1 = np.maximum(z1, 0.0)
    probs = _softmax(a1 @ model.w2 + model.b2)
    # A diverged model can drive a true-class probability to zero; the
    # resulting -inf loss is caught by the caller's finiteness check.
    with np.errstate(divide="ignore"):
        loss = float(-np.log(probs[np.arange(n), labels]).mean())

    dz2 = probs.copy()
    dz2[np.arange(n), labels] -= 1.0
    dz2 /= n
    dz1 = (dz2 @ model.w2.T) * (z1 > 0.0)
    grads = {
        "w2": a1.T @ dz2,
        "b2": dz2.sum(axis=0),
        "w1": x_scaled.T @ dz1,
        "b1": dz1.sum(axis=0),
    }
    return loss, grads


def train_mlp(
    features: np.ndarray, labels: np.ndarray, config: TrainConfig = TrainConfig()
) -> MlpModel:
    """Momentum-SGD training on feature degrees; deterministic per seed.

    Raises:
        InsufficientData: fewer than 10 samples for any class.
        NonFiniteLoss: the loss left the finite range (diverged).
    """
    feats = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if feats.ndim != 2 or len(feats) != len(labels):
        raise DimensionMismatch("features must be (n, m) with one label per row")
    if labels.size and (labels.min() < 0 or labels.max() >= CLASS_COUNT):
        raise ValueError(f"labels must lie in [0, {CLASS_COUNT})")
    counts = np.bincount(labels, minlength=CLASS_COUNT)
    if np.any(counts < 10):
        raise InsufficientData(
            f"need at least 10 samples per class, got {counts.tolist()}"
        )
    x = feats / 360.0
    model = init_model(feats.shape[1], config)
    rng = np.random.default_rng(config.seed)
    velocity = {name: np.zeros_like(getattr(model, name)) for name in ("w1", "b1", "w2", "b2")}
    # history[0] is the pre-training loss; history[e] the loss after epoch e.
    history = [loss_and_gradients(model, x, labels)[0]]
    for epoch in range(config.epochs):
        order = rng.permutation(len(x))
        for start in range(0, len(x), config.batch_size):
            idx = order[start : start + config.batch_size]
            loss, grads = loss_and_gradients(model, x[idx], labels[idx])
            if not np.isfinite(loss):
                raise NonFiniteLoss(
                    f"loss became non-finite at epoch {epoch}, batch offset {start}"
                )
            for name, grad in grads.items():
                velocity[name] = config.momentum * velocity[name] - config.learning_rate * grad
                param = getattr(model, name)
                param += velocity[name]
        epoch_loss, _ = loss_and_gradients(model, x, labels)
        history.append(epoch_loss)
    model.loss_history = tuple(history)
    return model


def predict(model: MlpModel, feature: AngleFeatureVector | np.ndarray) -> ClassPrediction:
    """Class distribution for one rep's feature degrees."""
    values = feature.values if isinstance(feature, AngleFeatureVector) else np.asarray(feature)
    if values.shape != (model.w1.shape[0],):
        raise DimensionMismatch(
            f"model expects {model.w1.shape[0]} features, got {values.shape}"
        )
    probs = forward(model, values[None, :] / 360.0)[0]
    return ClassPrediction(probs=probs)


def predict_proba(model: MlpModel, features: np.ndarray) -> np.ndarray:
    """Batch class probabilities for feature degrees, one row per rep."""
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[1] != model.w1.shape[0]:
        raise DimensionMismatch(
            f"model expects (n, {model.w1.shape[0]}) features, got {feats.shape}"
        )
    return forward(model, feats / 360.0)


# -- model bundle serialization -----------------------------------------


@dataclass
class ModelBundle:
    """Everything the feedback service needs for one exercise."""

    exercise: str
    profile: str
    classes: tuple[str, str, str]
    triplet_labels: tuple[str, ...]
    bin_count: int
    mlp: MlpModel
    bands: AngleBandModel


def save_bundle(bundle: ModelBundle, path: str | Path) -> None:
    payload = {
        "exercise": bundle.exercise,
        "profile": bundle.profile,
        "classes": list(bundle.classes),
        "triplet_labels": list(bundle.triplet_labels),
        "feature_config": {"bin_count": bundle.bin_count},
        "layer_sizes": list(bundle.mlp.layer_sizes),
        "weights": {
            "w1": bundle.mlp.w1.tolist(),
            "b1": bundle.mlp.b1.tolist(),
            "w2": bundle.mlp.w2.tolist(),
            "b2": bundle.mlp.b2.tolist(),
        },
        "bands": {
            "means": bundle.bands.means.tolist(),
            "stds": bundle.bands.stds.tolist(),
            "bin_width": bundle.bands.bin_width,
        },
        "training": asdict(bundle.mlp.config),
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def load_bundle(path: str | Path) -> ModelBundle:
    payload = json.loads(Path(path).read_text())
    triplets = tuple(payload["triplet_labels"])
    mlp = MlpModel(
        w1=np.array(payload["weights"]["w1"], dtype=np.float64),
        b1=np.array(payload["weights"]["b1"], dtype=np.float64),
        w2=np.array(payload["weights"]["w2"], dtype=np.float64),
        b2=np.array(payload["weights"]["b2"], dtype=np.float64),
        config=TrainConfig(**payload["training"]),
    )
    bands = AngleBandModel(
        triplet_labels=triplets,
        means=np.array(payload["bands"]["means"], dtype=np.float64),
        stds=np.array(payload["bands"]["stds"], dtype=np.float64),
        bin_width=float(payload["bands"]["bin_width"]),
    )
    return ModelBundle(
        exercise=payload["exercise"],
        profile=payload["profile"],
        classes=tuple(payload["classes"]),
        triplet_labels=triplets,
        bin_count=int(payload["feature_config"]["bin_count"]),
        mlp=mlp,
        bands=bands,
    )
