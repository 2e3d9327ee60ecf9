"""From-scratch logistic regression plus the evaluation machinery around it:
label quantization, dataset splitting, metrics, conditional phase
distributions, and annotation lead-time confidence intervals.

One binary model is trained per phase target on z-scored features with
full-batch gradient descent on the L2-regularized cross-entropy.  The scene
task uses one-vs-rest over the four scene classes with an argmax decision.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .features import FeatureMatrix
from .interchange import IntervalAnnotation, SCENE_CLASSES
from .preannotate import PhaseTriple, project_chain
from .rng import Lcg

PHASE_TARGETS = ("is_match", "is_active", "is_standing")

DEFAULT_L2 = 1e-4
DEFAULT_LEARNING_RATE = 0.1
DEFAULT_MAX_ITERS = 500
DEFAULT_GRAD_TOL = 1e-6


class ModelError(ValueError):
    pass


@dataclass
class Hyper:
    l2: float = DEFAULT_L2
    learning_rate: float = DEFAULT_LEARNING_RATE
    max_iters: int = DEFAULT_MAX_ITERS
    grad_tol: float = DEFAULT_GRAD_TOL


@dataclass
class Standardization:
    """Per-feature z-score parameters fitted on the training split.
    Constant features keep sd 1 so they map to exactly zero."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardization":
        mean = x.mean(axis=0)
        std = x.std(axis=0, ddof=0)
        std = np.where(std < 1e-12, 1.0, std)
        return cls(mean=mean, std=std)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    standardization: Standardization
    target: str

    def __post_init__(self):
        if len(self.weights) != len(self.standardization.mean):
            raise ModelError("weights and standardization dimension mismatch")


@dataclass
class TrainLog:
    losses: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


@dataclass
class SplitSpec:
    """Deterministic seeded split; unit=clip keeps whole clips together."""

    ratios: tuple[float, float, float] = (0.7, 0.15, 0.15)
    seed: int = 0
    unit: str = "frame"

    def __post_init__(self):
        if any(r < 0 for r in self.ratios):
            raise ModelError("split ratios must be non-negative")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ModelError(f"split ratios {self.ratios} must sum to 1")
        if self.unit not in ("frame", "clip"):
            raise ModelError(f"unknown split unit {self.unit!r}")


@dataclass
class LabeledDataset:
    """Features plus one 0/1 (or class-name) label per row."""

    features: FeatureMatrix
    labels: list

    def __post_init__(self):
        if len(self.labels) != len(self.features):
            raise ModelError("features and labels length mismatch")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, positions: Sequence[int]) -> "LabeledDataset":
        return LabeledDataset(
            features=FeatureMatrix(
                rows=[self.features.rows[p] for p in positions],
                index=[self.features.index[p] for p in positions],
            ),
            labels=[self.labels[p] for p in positions],
        )


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    accuracy: float
    tp: int
    fp: int
    fn: int
    tn: int


@dataclass
class MetricsReport:
    per_class: dict[object, ClassMetrics]
    accuracy: float
    macro_f1: float

    def positive_f1(self) -> float:
        """F1 of the positive class for binary 0/1 targets."""
        if 1 not in self.per_class:
            raise ModelError("no positive class in report")
        return self.per_class[1].f1


# ---------------------------------------------------------------------------
# Label quantization and distributions
# ---------------------------------------------------------------------------


def quantize_labels(
    annotations: Sequence[IntervalAnnotation], clip_length_s: int
) -> list[PhaseTriple]:
    """One PhaseTriple per whole second of a clip.

    A second takes the label of the interval covering its midpoint
    (half-open [start_s, end_s) intervals); uncovered seconds are
    (0, 0, 0).  Overlapping or out-of-clip intervals are errors.
    """
    ordered = sorted(annotations, key=lambda a: a.start_s)
    for a, b in zip(ordered, ordered[1:]):
        if b.start_s < a.end_s:
            raise ModelError(
                f"overlapping intervals [{a.start_s}, {a.end_s}) and "
                f"[{b.start_s}, {b.end_s})"
            )
    for a in ordered:
        if a.start_s < 0 or a.end_s > clip_length_s:
            raise ModelError(
                f"interval [{a.start_s}, {a.end_s}) outside clip of "
                f"{clip_length_s} s"
            )
    triples = []
    for second in range(clip_length_s):
        mid = second + 0.5
        label = PhaseTriple(False, False, False)
        for a in ordered:
            if a.start_s <= mid < a.end_s:
                label = PhaseTriple(a.is_match, a.is_active, a.is_standing)
                break
        triples.append(label)
    return triples


def conditional_distribution(
    triples: Sequence[PhaseTriple],
) -> tuple[float, float | None, float | None]:
    """(P(match), P(active|match), P(standing|active)); conditionals are
    None when their denominator is empty.

    Note each conditional is taken on the immediate parent label.
    """
    if not triples:
        raise ModelError("empty triple sequence")
    n = len(triples)
    n_match = sum(t.is_match for t in triples)
    n_active = sum(t.is_active for t in triples)
    n_standing = sum(t.is_standing for t in triples)
    p_match = n_match / n
    p_active = n_active / n_match if n_match else None
    p_standing = n_standing / n_active if n_active else None
    return p_match, p_active, p_standing


def lead_time_ci(durations: Sequence[float]) -> tuple[float, float]:
    """Mean annotation lead time with a 95% normal-approximation interval
    half-width (1.96 * sd / sqrt(n), sample sd)."""
    n = len(durations)
    if n < 2:
        raise ModelError("need at least 2 durations")
    mean = sum(durations) / n
    var = sum((d - mean) ** 2 for d in durations) / (n - 1)
    return mean, 1.96 * math.sqrt(var) / math.sqrt(n)


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------


def split(
    dataset: LabeledDataset, spec: SplitSpec
) -> tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    """Seeded shuffle of units then a contiguous partition by ratios.

    Train and validation sizes are floored; the test partition takes the
    remainder.  A partition with a positive ratio but zero units is an
    error.
    """
    if len(dataset) == 0:
        raise ModelError("cannot split an empty dataset")
    if spec.unit == "clip":
        units: list = []
        seen = set()
        for clip_id, _ in dataset.features.index:
            if clip_id not in seen:
                seen.add(clip_id)
                units.append(clip_id)
    else:
        units = list(range(len(dataset.labels)))
    if not units:
        raise ModelError("cannot split an empty dataset")

    rng = Lcg(spec.seed)
    rng.shuffle(units)

    n = len(units)
    n_train = math.floor(n * spec.ratios[0])
    n_val = math.floor(n * spec.ratios[1])
    n_test = n - n_train - n_val
    for size, ratio, name in (
        (n_train, spec.ratios[0], "train"),
        (n_val, spec.ratios[1], "validation"),
        (n_test, spec.ratios[2], "test"),
    ):
        if ratio > 0 and size == 0:
            raise ModelError(f"{name} partition received 0 units")

    parts = (
        units[:n_train],
        units[n_train : n_train + n_val],
        units[n_train + n_val :],
    )
    if spec.unit == "clip":
        out = []
        for part in parts:
            chosen = set(part)
            positions = [
                p
                for p, (clip_id, _) in enumerate(dataset.features.index)
                if clip_id in chosen
            ]
            out.append(dataset.subset(positions))
        return tuple(out)
    return tuple(dataset.subset(part) for part in parts)


# ---------------------------------------------------------------------------
# Logistic regression
# ---------------------------------------------------------------------------


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def regularized_loss(
    x: np.ndarray, y: np.ndarray, weights: np.ndarray, bias: float, l2: float
) -> float:
    """Mean cross-entropy plus (l2/2)*||w||^2 (bias unpenalized)."""
    z = x @ weights + bias
    # log(1 + exp(z)) - y*z, computed stably
    ce = np.mean(np.logaddexp(0.0, z) - y * z)
    return float(ce + 0.5 * l2 * weights @ weights)


def loss_gradient(
    x: np.ndarray, y: np.ndarray, weights: np.ndarray, bias: float, l2: float
) -> tuple[np.ndarray, float]:
    residual = _sigmoid(x @ weights + bias) - y
    grad_w = x.T @ residual / len(y) + l2 * weights
    grad_b = float(residual.mean())
    return grad_w, grad_b


def train_logistic(
    train: LabeledDataset,
    target: str = "",
    hyper: Hyper | None = None,
    log: TrainLog | None = None,
) -> LinearModel:
    """Fit one binary target by full-batch gradient descent.

    Features are z-scored on the training split; weights start at zero and
    descend until the gradient infinity-norm drops below tolerance or the
    iteration cap is reached.
    """
    hyper = hyper or Hyper()
    y = np.asarray([int(v) for v in train.labels], dtype=float)
    if len(y) == 0:
        raise ModelError("empty training set")
    n_pos = int(y.sum())
    if n_pos < 2 or len(y) - n_pos < 2:
        raise ModelError(
            f"target {target or 'label'!r} needs at least 2 samples per class "
            f"(got {n_pos} positive of {len(y)})"
        )
    standardization = Standardization.fit(train.features.as_array())
    x = standardization.apply(train.features.as_array())

    weights = np.zeros(x.shape[1])
    bias = 0.0
    converged = False
    iterations = 0
    for iterations in range(1, hyper.max_iters + 1):
        grad_w, grad_b = loss_gradient(x, y, weights, bias, hyper.l2)
        if log is not None:
            log.losses.append(regularized_loss(x, y, weights, bias, hyper.l2))
        if max(np.abs(grad_w).max(initial=0.0), abs(grad_b)) < hyper.grad_tol:
            converged = True
            break
        weights -= hyper.learning_rate * grad_w
        bias -= hyper.learning_rate * grad_b
    if log is not None:
        log.iterations = iterations
        log.converged = converged
        log.losses.append(regularized_loss(x, y, weights, bias, hyper.l2))
    return LinearModel(
        weights=weights, bias=bias, standardization=standardization, target=target
    )


def predict_proba(model: LinearModel, features: FeatureMatrix) -> np.ndarray:
    x = features.as_array()
    if x.shape[1] != len(model.weights):
        raise ModelError(
            f"feature dimension {x.shape[1]} != model dimension "
            f"{len(model.weights)}"
        )
    z = model.standardization.apply(x) @ model.weights + model.bias
    return _sigmoid(z)


def predict(
    model: LinearModel, features: FeatureMatrix, threshold: float = 0.5
) -> tuple[np.ndarray, list[int]]:
    """Probabilities and hard labels; a probability exactly at the threshold
    goes to the positive class."""
    proba = predict_proba(model, features)
    return proba, [1 if p >= threshold else 0 for p in proba]


def predict_phases(
    models: dict[str, LinearModel], features: FeatureMatrix
) -> list[PhaseTriple]:
    """Threshold the three per-target models and project each second's
    decisions onto the legal phase chain."""
    decisions = {}
    for target in PHASE_TARGETS:
        if target not in models:
            raise ModelError(f"missing model for target {target}")
        decisions[target] = predict(models[target], features)[1]
    return [
        project_chain(
            decisions["is_match"][i],
            decisions["is_active"][i],
            decisions["is_standing"][i],
        )
        for i in range(len(features))
    ]


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def evaluate(predictions: Sequence, truths: Sequence) -> MetricsReport:
    """Per-class precision/recall/F1/accuracy from confusion counts.

    Classes are whatever values appear in either sequence; per-class
    accuracy is the one-vs-rest accuracy.  F1 is 0 when precision and
    recall are both 0.
    """
    if len(predictions) != len(truths):
        raise ModelError("predictions and truths length mismatch")
    if not truths:
        raise ModelError("empty evaluation input")
    classes = sorted(set(predictions) | set(truths), key=repr)
    n = len(truths)
    per_class = {}
    correct = sum(1 for p, t in zip(predictions, truths) if p == t)
    for c in classes:
        tp = sum(1 for p, t in zip(predictions, truths) if p == c and t == c)
        fp = sum(1 for p, t in zip(predictions, truths) if p == c and t != c)
        fn = sum(1 for p, t in zip(predictions, truths) if p != c and t == c)
        tn = n - tp - fp - fn
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (
            2 * precision * recall / (precision + recall)
            if precision + recall
            else 0.0
        )
        per_class[c] = ClassMetrics(
            precision=precision,
            recall=recall,
            f1=f1,
            accuracy=(tp + tn) / n,
            tp=tp,
            fp=fp,
            fn=fn,
            tn=tn,
        )
    macro_f1 = sum(m.f1 for m in per_class.values()) / len(per_class)
    return MetricsReport(
        per_class=per_class, accuracy=correct / n, macro_f1=macro_f1
    )


def evaluate_conditional(
    predictions: Sequence[int],
    truths: Sequence[int],
    gate: Sequence[bool],
) -> MetricsReport:
    """Evaluate only where ``gate`` is true (e.g. standing scored only on
    seconds whose parent label is active).  Non-default mode."""
    pairs = [(p, t) for p, t, g in zip(predictions, truths, gate) if g]
    if not pairs:
        raise ModelError("gate excludes every sample")
    return evaluate([p for p, _ in pairs], [t for _, t in pairs])


# ---------------------------------------------------------------------------
# Multiclass scene model
# ---------------------------------------------------------------------------


@dataclass
class MulticlassModel:
    """One-vs-rest binary models with an argmax decision."""

    models: dict[str, LinearModel]
    classes: tuple[str, ...]


def train_multiclass(
    train: LabeledDataset,
    classes: Sequence[str] = SCENE_CLASSES,
    hyper: Hyper | None = None,
) -> MulticlassModel:
    present = set(train.labels)
    for c in classes:
        if c not in present:
            raise ModelError(f"class {c!r} absent from training data")
    models = {}
    for c in classes:
        binary = LabeledDataset(
            features=train.features,
            labels=[1 if label == c else 0 for label in train.labels],
        )
        models[c] = train_logistic(binary, target=c, hyper=hyper)
    return MulticlassModel(models=models, classes=tuple(classes))


def predict_multiclass(model: MulticlassModel, features: FeatureMatrix) -> list[str]:
    scores = np.stack(
        [predict_proba(model.models[c], features) for c in model.classes]
    )
    winners = scores.argmax(axis=0)
    return [model.classes[w] for w in winners]


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def config_hash(config: dict) -> str:
    payload = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def save_model(model: LinearModel, config: dict, stream: IO[str]) -> None:
    json.dump(
        {
            "target": model.target,
            "weights": [float(w) for w in model.weights],
            "bias": float(model.bias),
            "standardization": {
                "mean": [float(v) for v in model.standardization.mean],
                "std": [float(v) for v in model.standardization.std],
            },
            "config": config,
            "config_hash": config_hash(config),
        },
        stream,
        indent=1,
    )
    stream.write("\n")


def load_model(stream: IO[str]) -> tuple[LinearModel, dict]:
    obj = json.load(stream)
    model = LinearModel(
        weights=np.asarray(obj["weights"], dtype=float),
        bias=float(obj["bias"]),
        standardization=Standardization(
            mean=np.asarray(obj["standardization"]["mean"], dtype=float),
            std=np.asarray(obj["standardization"]["std"], dtype=float),
        ),
        target=obj["target"],
    )
    return model, obj.get("config", {})


def write_metrics_row(
    stream: IO[str],
    label: str,
    feature: str,
    train_f1: float,
    test_f1: float,
    header: bool = False,
) -> None:
    writer = csv.writer(stream)
    if header:
        writer.writerow(["label", "feature", "train_f1", "test_f1"])
    writer.writerow([label, feature, f"{train_f1:.4f}", f"{test_f1:.4f}"])


def phase_labels(triples: Iterable[PhaseTriple], target: str) -> list[int]:
    """0/1 labels for one phase target over all samples (hierarchical
    targets are trained and scored on every second; a second that is not
    active simply has standing=0)."""
    if target not in PHASE_TARGETS:
        raise ModelError(f"unknown phase target {target!r}")
    return [int(getattr(t, target)) for t in triples]
