"""Extreme Learning Machine: random hidden layer, closed-form output weights."""
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .errors import InvalidInput
from .linalg import least_squares_solve

CLASSES = ("covid", "normal", "pneumonia")
ACTIVATIONS = ("rbf_l2", "sigmoid")
DEFAULT_HIDDEN = 350
DEFAULT_ACTIVATION = "rbf_l2"


@dataclass(frozen=True)
class Standardizer:
    """Per-feature z-score parameters fitted on a training fold."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        scale = np.where(std > 0, std, 1.0)
        return cls(mean, scale)

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale


@dataclass(frozen=True)
class ElmModel:
    A: np.ndarray
    b: np.ndarray
    beta: np.ndarray
    activation: str
    class_order: Tuple
    standardizer: Standardizer
    seed: int
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n_features(self) -> int:
        return self.A.shape[1]

    @property
    def n_hidden(self) -> int:
        return self.A.shape[0]

    @property
    def n_classes(self) -> int:
        return self.beta.shape[1]

    def __post_init__(self):
        L, n = self.A.shape
        if self.b.shape != (L,) or self.beta.shape[0] != L:
            raise InvalidInput(
                f"inconsistent shapes A={self.A.shape} b={self.b.shape} beta={self.beta.shape}"
            )
        if self.beta.shape[1] != len(self.class_order):
            raise InvalidInput("beta columns do not match class_order")
        if self.activation not in ACTIVATIONS:
            raise InvalidInput(f"unknown activation {self.activation!r}")
        if self.activation == "rbf_l2" and np.any(self.b <= 0):
            raise InvalidInput("rbf_l2 widths must be positive")
        if self.standardizer.mean.shape != (n,) or np.any(self.standardizer.scale <= 0):
            raise InvalidInput("standardizer does not match the feature count")


def _check_activation(activation):
    if activation not in ACTIVATIONS:
        raise InvalidInput(f"activation must be one of {ACTIVATIONS}, got {activation!r}")


def init_hidden(n: int, L: int, activation: str = DEFAULT_ACTIVATION, seed: int = 0):
    """Draw hidden-node parameters ``(A, b)`` from a seeded PCG64 stream.

    rbf_l2 centres are uniform on [-1, 1]^n. Widths are uniform on (0, 1]
    divided by ``n``, so the exponent is a per-feature mean squared
    distance and stays O(1) for any input dimension. sigmoid weights and
    biases are uniform on [-1, 1].
    """
    if n <= 0 or L <= 0:
        raise InvalidInput(f"need n >= 1 and L >= 1, got n={n}, L={L}")
    _check_activation(activation)
    if seed < 0:
        raise InvalidInput("seed must be nonnegative")
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1.0, 1.0, size=(L, n))
    if activation == "rbf_l2":
        b = (1.0 - rng.random(L)) / n
    else:
        b = rng.uniform(-1.0, 1.0, size=L)
    return A, b


def hidden_output(X, A, b, activation: str = DEFAULT_ACTIVATION) -> np.ndarray:
    """Hidden-layer output matrix G of shape (N, L)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    A = np.ascontiguousarray(A, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if X.ndim != 2 or A.ndim != 2 or X.shape[1] != A.shape[1] or b.shape != (A.shape[0],):
        raise InvalidInput(f"shape mismatch: X={X.shape}, A={A.shape}, b={b.shape}")
    _check_activation(activation)
    if activation == "rbf_l2":
        return _kernels.rbf_hidden(X, A, b)
    z = X @ A.T + b
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-z))


def _plain(label):
    return label.item() if isinstance(label, np.generic) else label


def resolve_class_order(labels: Sequence, class_order: Optional[Sequence] = None) -> Tuple:
    if class_order is not None:
        return tuple(_plain(c) for c in class_order)
    present = set(labels)
    if present <= set(CLASSES):
        return CLASSES
    return tuple(sorted(present))


def one_hot(labels: Sequence, class_order: Sequence) -> np.ndarray:
    index = {c: i for i, c in enumerate(class_order)}
    T = np.zeros((len(labels), len(class_order)))
    for row, lab in enumerate(labels):
        if lab not in index:
            raise InvalidInput(f"label {lab!r} is not in class_order {tuple(class_order)}")
        T[row, index[lab]] = 1.0
    return T


def train(
    X,
    labels: Sequence,
    L: int = DEFAULT_HIDDEN,
    activation: str = DEFAULT_ACTIVATION,
    seed: int = 0,
    class_order: Optional[Sequence] = None,
) -> ElmModel:
    """Fit an ELM: standardise, draw the hidden layer, solve ``beta = pinv(G) T``."""
    X = np.asarray(X, dtype=np.float64)
    labels = [_plain(lab) for lab in labels]
    if X.ndim != 2 or X.shape[0] != len(labels):
        raise InvalidInput(f"X has shape {X.shape} but {len(labels)} labels were given")
    if not np.all(np.isfinite(X)):
        raise InvalidInput("training features contain non-finite values")
    order = resolve_class_order(labels, class_order)
    missing = [c for c in order if c not in set(labels)]
    if missing:
        raise InvalidInput(f"classes absent from training data: {missing}")
    if len(labels) < len(order):
        raise InvalidInput("fewer training samples than classes")

    std = Standardizer.fit(X)
    A, b = init_hidden(X.shape[1], L, activation, seed)
    G = hidden_output(std.transform(X), A, b, activation)
    beta = least_squares_solve(G, one_hot(labels, order))
    return ElmModel(A=A, b=b, beta=beta, activation=activation, class_order=order,
                    standardizer=std, seed=int(seed))


def decision_scores(model: ElmModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise InvalidInput(f"expected {model.n_features} feature columns, got shape {X.shape}")
    G = hidden_output(model.standardizer.transform(X), model.A, model.b, model.activation)
    return G @ model.beta


def labels_from_scores(scores, class_order: Sequence) -> list:
    # np.argmax returns the first maximum, i.e. the lowest class index on ties
    idx = np.argmax(np.asarray(scores), axis=1)
    return [class_order[i] for i in idx]


def predict(model: ElmModel, X):
    """Return ``(scores, labels)`` for the query rows."""
    scores = decision_scores(model, X)
    return scores, labels_from_scores(scores, model.class_order)
