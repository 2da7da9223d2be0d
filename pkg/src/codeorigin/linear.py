"""Weighted logistic regression (binary and multinomial) trained with seeded SGD.

The training objective is

    J(W, b) = mean_i( c[y_i] * CE(softmax(W x_i + b), t_i) ) + l2 / 2 * ||W||^2

where ``c`` are per-class weights and ``t_i`` is the (optionally smoothed)
one-hot target. Two classes use a single logit row with a sigmoid. The penalty
does not scale with N, so duplicating every sample leaves J unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .features import SparseVector

MODEL_FORMAT = "codeorigin-linear"


class TrainingError(RuntimeError):
    pass


class VocabularyMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ClassWeights:
    weights: np.ndarray
    scheme: str = "uniform"
    beta: Optional[float] = None
    raw: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.weights)


def _check_counts(counts: Sequence[int]) -> np.ndarray:
    n = np.asarray(counts)
    if n.ndim != 1 or len(n) == 0:
        raise ValueError("counts must be a non-empty 1-D sequence")
    if np.any(n < 1):
        bad = [int(i) for i in np.flatnonzero(n < 1)]
        raise ValueError(f"class weight undefined for empty classes {bad}")
    return n


def uniform_weights(num_classes: int) -> ClassWeights:
    return ClassWeights(np.ones(num_classes), "uniform")


def balanced_weights(counts: Sequence[int]) -> ClassWeights:
    """``total / (num_classes * n_c)`` per class."""
    n = _check_counts(counts).astype(np.float64)
    return ClassWeights(n.sum() / (len(n) * n), "balanced")


def effective_number_weights(counts: Sequence[int], beta: float = 0.9995) -> ClassWeights:
    """Class-balanced weights from the effective number of samples.

    Raw weight is ``(1 - beta) / (1 - beta**n_c)``; the result is rescaled to unit
    mean. ``1 - beta**n`` is evaluated as ``-expm1(n * log1p(-(1 - beta)))`` so
    that large counts keep full relative precision.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    n = _check_counts(counts).astype(np.float64)
    one_minus_beta = 1.0 - beta
    raw = one_minus_beta / -np.expm1(n * np.log1p(-one_minus_beta))
    return ClassWeights(raw / raw.mean(), "effective_number", beta, raw)


def make_class_weights(scheme: str, counts: Sequence[int], beta: float = 0.9995) -> ClassWeights:
    if scheme == "uniform":
        return uniform_weights(len(counts))
    if scheme == "balanced":
        return balanced_weights(counts)
    if scheme == "effective_number":
        return effective_number_weights(counts, beta)
    raise ValueError(f"unknown class-weight scheme {scheme!r}")


@dataclass
class TrainConfig:
    l2: float = 1e-4
    epochs: int = 30
    lr: float = 2.0
    batch_size: int = 32
    seed: int = 1337
    label_smoothing: float = 0.0


@dataclass
class LinearModel:
    coef: np.ndarray
    intercept: np.ndarray
    num_classes: int
    vocab_hash: Optional[str] = None
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.coef.shape[1]

    def check_vocab(self, vocab_hash: Optional[str]) -> None:
        if self.vocab_hash is not None and vocab_hash is not None and vocab_hash != self.vocab_hash:
            raise VocabularyMismatch(
                f"model was trained against vocabulary {self.vocab_hash[:12]}, got {vocab_hash[:12]}"
            )

    def to_json(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": 1,
            "num_classes": self.num_classes,
            "vocab_hash": self.vocab_hash,
            "coef": self.coef.tolist(),
            "intercept": self.intercept.tolist(),
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, data: dict) -> "LinearModel":
        if data.get("format") != MODEL_FORMAT:
            raise ValueError("not a codeorigin linear model file")
        return cls(np.asarray(data["coef"], dtype=np.float64),
                   np.asarray(data["intercept"], dtype=np.float64),
                   data["num_classes"], data.get("vocab_hash"), data.get("meta", {}))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "LinearModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _targets(y: np.ndarray, num_classes: int, smoothing: float) -> np.ndarray:
    if num_classes == 2:
        return y * (1.0 - smoothing) + smoothing / 2.0
    t = np.full((len(y), num_classes), smoothing / num_classes)
    t[np.arange(len(y)), y] += 1.0 - smoothing
    return t


def _logsumexp(z: np.ndarray) -> np.ndarray:
    m = z.max(axis=1, keepdims=True)
    return (m + np.log(np.exp(z - m).sum(axis=1, keepdims=True)))[:, 0]


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def loss_and_grad(
    coef: np.ndarray,
    intercept: np.ndarray,
    X,
    y: np.ndarray,
    class_weights: np.ndarray,
    l2: float,
    num_classes: int,
    smoothing: float = 0.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Objective value and its analytic gradient w.r.t. ``coef`` and ``intercept``."""
    y = np.asarray(y)
    n = X.shape[0]
    z = np.asarray(X @ coef.T) + intercept
    sw = class_weights[y]
    t = _targets(y, num_classes, smoothing)
    if num_classes == 2:
        z = z[:, 0]
        ce = np.logaddexp(0.0, z) - t * z
        dz = (sw * (_sigmoid(z) - t) / n)[:, None]
    else:
        ce = _logsumexp(z) - (t * z).sum(axis=1)
        dz = sw[:, None] * (_softmax(z) - t) / n
    loss = float(np.dot(sw, ce) / n + 0.5 * l2 * np.sum(coef * coef))
    g_coef = np.asarray(X.T @ dz).T + l2 * coef
    g_int = dz.sum(axis=0)
    return loss, g_coef, g_int


def train(
    X,
    labels: Sequence[int],
    weights: Optional[ClassWeights] = None,
    hyper: Optional[TrainConfig] = None,
    num_classes: Optional[int] = None,
    vocab_hash: Optional[str] = None,
) -> LinearModel:
    """Fit by mini-batch SGD with per-epoch shuffling from a seeded generator.

    A batch size of at least ``len(labels)`` gives plain full-batch gradient
    descent. The learning rate decays as ``lr / sqrt(1 + epoch)``.

    Raises:
        TrainingError: if fewer than two classes occur or the loss stops being finite.
    """
    hyper = hyper or TrainConfig()
    y = np.asarray(labels, dtype=np.int64)
    if X.shape[0] != len(y):
        raise ValueError(f"{X.shape[0]} feature rows but {len(y)} labels")
    present = np.unique(y)
    if len(present) < 2:
        raise TrainingError("training data contains a single class")
    k = int(num_classes if num_classes is not None else y.max() + 1)
    if y.min() < 0 or y.max() >= k:
        raise ValueError(f"labels must lie in 0..{k - 1}")
    cw = (weights or uniform_weights(k)).weights
    if len(cw) != k:
        raise ValueError(f"{len(cw)} class weights for {k} classes")
    if sp.issparse(X):
        X = sp.csr_matrix(X)

    rows = 1 if k == 2 else k
    coef = np.zeros((rows, X.shape[1]))
    intercept = np.zeros(rows)
    rng = np.random.default_rng(hyper.seed)
    n = len(y)
    bs = max(1, min(hyper.batch_size, n))
    history = []
    for epoch in range(hyper.epochs):
        lr = hyper.lr / np.sqrt(1.0 + epoch)
        order = rng.permutation(n) if bs < n else np.arange(n)
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            _, g_coef, g_int = loss_and_grad(coef, intercept, X[idx], y[idx], cw, hyper.l2, k,
                                             hyper.label_smoothing)
            coef -= lr * g_coef
            intercept -= lr * g_int
        loss, _, _ = loss_and_grad(coef, intercept, X, y, cw, hyper.l2, k, hyper.label_smoothing)
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite loss at epoch {epoch}")
        history.append(loss)
    meta = {
        "epochs_run": hyper.epochs,
        "final_loss": history[-1] if history else None,
        "loss_history": history,
        "seed": hyper.seed,
        "hyper": {"l2": hyper.l2, "epochs": hyper.epochs, "lr": hyper.lr,
                  "batch_size": hyper.batch_size, "label_smoothing": hyper.label_smoothing},
        "class_weights": [float(w) for w in cw],
    }
    return LinearModel(coef, intercept, k, vocab_hash, meta)


def decision_function(model: LinearModel, X) -> np.ndarray:
    if isinstance(X, SparseVector):
        X = sp.csr_matrix((X.values, X.indices, [0, len(X.indices)]), shape=(1, X.dim))
    if X.shape[1] != model.dim:
        raise ValueError(f"feature dimension {X.shape[1]} does not match model dimension {model.dim}")
    return np.asarray(X @ model.coef.T) + model.intercept


def predict_proba(model: LinearModel, X) -> np.ndarray:
    """Class probabilities; a single :class:`SparseVector` yields a 1-D vector.

    Binary models return ``[p(class 0), p(class 1)]`` per row.
    """
    single = isinstance(X, SparseVector)
    z = decision_function(model, X)
    if model.num_classes == 2:
        p1 = _sigmoid(z[:, 0])
        probs = np.column_stack([1.0 - p1, p1])
    else:
        probs = _softmax(z)
    return probs[0] if single else probs
