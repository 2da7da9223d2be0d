"""Scorers: anything that maps a batch of texts to class probability rows."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from . import features, linear


class Scorer(Protocol):
    num_classes: int

    def score_texts(self, texts: Sequence[str]) -> np.ndarray: ...


@dataclass(frozen=True)
class FeatureConfig:
    n_min: int = 2
    n_max: int = 5
    max_features: int = 100_000
    max_chars: int = 10_000


@dataclass
class NativeLinearScorer:
    vocab: features.Vocabulary
    model: linear.LinearModel
    calls: int = field(default=0, compare=False)

    def __post_init__(self):
        self.model.check_vocab(self.vocab.fingerprint())

    @property
    def num_classes(self) -> int:
        return self.model.num_classes

    def score_texts(self, texts: Sequence[str]) -> np.ndarray:
        self.calls += len(texts)
        if not len(texts):
            return np.zeros((0, self.num_classes))
        return linear.predict_proba(self.model, features.transform_many(texts, self.vocab))

    def save(self, directory: str | Path) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        self.vocab.save(d / "vocab.json")
        self.model.save(d / "model.json")

    @classmethod
    def load(cls, directory: str | Path) -> "NativeLinearScorer":
        d = Path(directory)
        return cls(features.Vocabulary.load(d / "vocab.json"), linear.LinearModel.load(d / "model.json"))


def fit_native(
    texts: Sequence[str],
    labels: Sequence[int],
    num_classes: int,
    feature_cfg: FeatureConfig = FeatureConfig(),
    train_cfg: linear.TrainConfig | None = None,
    weight_scheme: str = "uniform",
    beta: float = 0.9995,
) -> NativeLinearScorer:
    """Fit a vocabulary and a weighted logistic regression on the given texts."""
    vocab = features.fit_vocabulary(texts, feature_cfg.n_min, feature_cfg.n_max,
                                    feature_cfg.max_features, feature_cfg.max_chars)
    X = features.transform_many(texts, vocab)
    counts = np.bincount(np.asarray(labels, dtype=np.int64), minlength=num_classes)
    if weight_scheme != "uniform" and np.any(counts == 0):
        present = counts > 0
        weights = np.ones(num_classes)
        weights[present] = linear.make_class_weights(weight_scheme, counts[present], beta).weights
        cw = linear.ClassWeights(weights, weight_scheme, beta)
    else:
        cw = linear.make_class_weights(weight_scheme, counts, beta)
    model = linear.train(X, labels, cw, train_cfg, num_classes=num_classes, vocab_hash=vocab.fingerprint())
    return NativeLinearScorer(vocab, model)
