"""Softmax feature space: the low-dimensional representations all tests run on.

A sample is an L-dimensional probability vector; its argmax index is the
sample's class label.  Vectors either come out of a softmax-regression
reducer trained here, or are ingested from CSV files produced by an external
classifier.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLabelsError, InvalidInputError, SoftmaxParseError

SUM_TOLERANCE = 1e-6

# Loss is checkpointed this many times over a training run, regardless of the
# iteration budget.
LOSS_CHECKPOINTS = 80


def _validate_matrix(vectors: np.ndarray) -> np.ndarray:
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2:
        raise InvalidInputError(f"expected a 2-D array of vectors, got shape {vectors.shape}")
    n, L = vectors.shape
    if n == 0:
        raise InvalidInputError("sample set must be nonempty")
    if L < 2:
        raise InvalidInputError(f"softmax vectors need at least 2 entries, got L={L}")
    if not np.isfinite(vectors).all():
        raise InvalidInputError("softmax vectors contain non-finite values")
    if (vectors < 0).any() or (vectors > 1).any():
        raise InvalidInputError("softmax entries must lie in [0, 1]")
    sums = vectors.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > SUM_TOLERANCE)
    if bad.size:
        raise InvalidInputError(
            f"row {bad[0]} sums to {sums[bad[0]]!r}, outside 1 +/- {SUM_TOLERANCE}"
        )
    return vectors


@dataclass(frozen=True)
class SampleSet:
    """An ordered collection of softmax vectors from one distribution."""

    vectors: np.ndarray  # (n, L)
    origin: str = "source"  # "source" or "target"

    def __post_init__(self):
        object.__setattr__(self, "vectors", _validate_matrix(self.vectors))
        if self.origin not in ("source", "target"):
            raise InvalidInputError(f"origin must be 'source' or 'target', got {self.origin!r}")

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def classes(self) -> np.ndarray:
        return argmax_classes(self.vectors)


def argmax_class(v) -> int:
    """Class label of one softmax vector: smallest index attaining the maximum."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise InvalidInputError("argmax_class expects a single vector")
    return int(np.argmax(v))


def argmax_classes(vectors: np.ndarray) -> np.ndarray:
    """Row-wise argmax labels; ties break toward the smaller index."""
    return np.argmax(np.asarray(vectors), axis=1)


@dataclass(frozen=True)
class ReducerModel:
    """Multinomial softmax regression: linear logits followed by softmax."""

    weights: np.ndarray  # (C, L)
    bias: np.ndarray  # (L,)
    loss_trace: tuple = field(default_factory=tuple)  # ((iteration, loss), ...)

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    @property
    def n_classes(self) -> int:
        return self.weights.shape[1]

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.n_features:
            raise InvalidInputError(
                f"feature dimension {features.shape} does not match model C={self.n_features}"
            )
        return _softmax(features @ self.weights + self.bias)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    n = probs.shape[0]
    return float(-np.log(np.clip(probs[np.arange(n), labels], 1e-300, None)).mean())


def train_reducer(features, labels, learning_rate: float = 0.05,
                  iterations: int = 20_000, seed: int = 0) -> ReducerModel:
    """Fit the softmax-regression reducer by full-batch gradient descent.

    The loss is checkpointed every iterations // 80 steps so the trace has a
    fixed resolution independent of the iteration budget.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if features.ndim != 2:
        raise InvalidInputError("features must be a 2-D array")
    if not np.isfinite(features).all():
        raise InvalidInputError("features contain non-finite values")
    if labels.shape != (features.shape[0],):
        raise InvalidInputError("labels must align with feature rows")
    if learning_rate <= 0 or iterations <= 0:
        raise InvalidInputError("learning_rate and iterations must be positive")
    n_classes = int(labels.max()) + 1
    if np.unique(labels).size < 2:
        raise DegenerateLabelsError("need at least 2 distinct class labels")
    if labels.min() < 0:
        raise InvalidInputError("labels must be non-negative class indices")

    n, C = features.shape
    rng = np.random.default_rng(seed)
    W = rng.normal(scale=1e-3, size=(C, n_classes))
    b = np.zeros(n_classes)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), labels] = 1.0

    every = max(1, iterations // LOSS_CHECKPOINTS)
    trace = []
    for it in range(1, iterations + 1):
        probs = _softmax(features @ W + b)
        grad = (probs - onehot) / n
        W -= learning_rate * (features.T @ grad)
        b -= learning_rate * grad.sum(axis=0)
        if it % every == 0 or it == iterations:
            probs = _softmax(features @ W + b)
            trace.append((it, _cross_entropy(probs, labels)))
    return ReducerModel(weights=W, bias=b, loss_trace=tuple(trace))


def reduce(model: ReducerModel, features, origin: str = "source") -> SampleSet:
    """Map raw feature vectors through the reducer into a SampleSet."""
    return SampleSet(vectors=model.predict_proba(features), origin=origin)


def load_softmax_vectors(path, origin: str = "source") -> SampleSet:
    """Read a softmax CSV (header y1,...,yL[,label]); row order is preserved.

    Rows violating the softmax invariants are rejected with their index.  An
    optional trailing integer label column is ignored; class labels are always
    recomputed via argmax.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise SoftmaxParseError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SoftmaxParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        ncols = len(header)
        has_label = header and header[-1] == "label"
        L = ncols - 1 if has_label else ncols
        expected = [f"y{i + 1}" for i in range(L)]
        if header[:L] != expected or L < 2:
            raise SoftmaxParseError(f"{path}: header must be y1,...,yL[,label], got {header}")

        rows = []
        for idx, row in enumerate(reader):
            if len(row) != ncols:
                raise SoftmaxParseError(f"{path}: row {idx} has {len(row)} fields, expected {ncols}",
                                        row=idx)
            try:
                values = [float(x) for x in row[:L]]
            except ValueError as exc:
                raise SoftmaxParseError(f"{path}: row {idx}: {exc}", row=idx) from exc
            s = sum(values)
            if abs(s - 1.0) > SUM_TOLERANCE:
                raise SoftmaxParseError(f"{path}: row {idx} sums to {s!r}", row=idx)
            if any(v < 0 or v > 1 for v in values):
                raise SoftmaxParseError(f"{path}: row {idx} has entries outside [0, 1]", row=idx)
            rows.append(values)
    if not rows:
        raise SoftmaxParseError(f"{path}: no data rows")
    return SampleSet(vectors=np.array(rows, dtype=np.float64), origin=origin)


def save_softmax_vectors(path, sample_set: SampleSet) -> None:
    """Write a SampleSet as softmax CSV; values round-trip bit-identically."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"y{i + 1}" for i in range(sample_set.dim)])
        for row in sample_set.vectors:
            writer.writerow([repr(float(v)) for v in row])
