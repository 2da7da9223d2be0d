"""Decision-threshold calibration for the binary task.

Stage one searches a quantile grid on out-of-fold scores, stage two repeats the
search on a "difficult" set of samples a cross-validated linear baseline gets
wrong, and the global threshold is their equal-weight blend. Per-language
thresholds come from the difficult set alone.
"""

from __future__ import annotations

import json
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .corpus import CodeSample
from .langid import LanguageTag, detect_language
from .linear import TrainConfig
from .scorers import FeatureConfig, fit_native

QUANTILES = np.arange(1, 100) / 100.0
MIN_GROUP_SIZE = 20


def candidate_thresholds(scores: Sequence[float]) -> np.ndarray:
    """The 1%..99% empirical quantiles (linear interpolation), ascending."""
    return np.quantile(np.asarray(scores, dtype=np.float64), QUANTILES, method="linear")


def _binary_macro_f1(n_pos_above: int, n_neg_above: int, n_pos: int, n_neg: int) -> Fraction:
    tp, fp = n_pos_above, n_neg_above
    fn = n_pos - tp
    tn = n_neg - fp
    f1_pos = Fraction(2 * tp, 2 * tp + fp + fn) if (2 * tp + fp + fn) else Fraction(0)
    f1_neg = Fraction(2 * tn, 2 * tn + fn + fp) if (2 * tn + fn + fp) else Fraction(0)
    return (f1_pos + f1_neg) / 2


def search_threshold(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Quantile candidate maximizing macro-F1 of ``score >= tau``; smallest wins ties.

    Macro-F1 values are compared as exact fractions so ties are genuine ties.

    Raises:
        ValueError: on empty input or when only one label is present.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if len(s) == 0 or len(s) != len(y):
        raise ValueError("need equally long, non-empty scores and labels")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be binary")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("macro-F1 threshold search needs both labels present")
    pos = np.sort(s[y == 1])
    neg = np.sort(s[y == 0])
    best_tau, best_f1 = None, None
    for tau in candidate_thresholds(s):
        pa = n_pos - int(np.searchsorted(pos, tau, side="left"))
        na = n_neg - int(np.searchsorted(neg, tau, side="left"))
        f1 = _binary_macro_f1(pa, na, n_pos, n_neg)
        if best_f1 is None or f1 > best_f1:
            best_tau, best_f1 = float(tau), f1
    return best_tau


def blend(tau_oof: float, tau_diff: float) -> float:
    for name, v in (("tau_oof", tau_oof), ("tau_diff", tau_diff)):
        if not 0.0 < v < 1.0:
            raise ValueError(f"{name} must lie in (0, 1), got {v}")
    return 0.5 * tau_oof + 0.5 * tau_diff


@dataclass
class ThresholdSet:
    tau_oof: float
    tau_diff: float
    per_language: dict[str, float] = field(default_factory=dict)

    @property
    def tau_global(self) -> float:
        return blend(self.tau_oof, self.tau_diff)

    def threshold_for(self, language: Optional[str | LanguageTag]) -> float:
        key = language.value if isinstance(language, LanguageTag) else language
        if key is not None and key in self.per_language:
            return self.per_language[key]
        return self.tau_global

    def to_json(self) -> dict:
        return {
            "tau_oof": self.tau_oof,
            "tau_diff": self.tau_diff,
            "tau_global": self.tau_global,
            "per_language": {k: self.per_language[k] for k in sorted(self.per_language)},
        }

    @classmethod
    def from_json(cls, data: dict) -> "ThresholdSet":
        ts = cls(float(data["tau_oof"]), float(data["tau_diff"]),
                 {k: float(v) for k, v in data.get("per_language", {}).items()})
        if "tau_global" in data and abs(ts.tau_global - float(data["tau_global"])) > 1e-12:
            raise ValueError("tau_global is not the equal-weight blend of tau_oof and tau_diff")
        return ts

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ThresholdSet":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def apply(thresholds: ThresholdSet, score: float, language: Optional[str | LanguageTag] = None) -> int:
    """1 iff ``score >= threshold`` for the language, falling back to the global blend."""
    return int(score >= thresholds.threshold_for(language))


@dataclass
class ScoredSample:
    sample: CodeSample
    score: float


def per_language_thresholds(
    difficult: Sequence[ScoredSample],
    detector: Callable[[str], LanguageTag] = detect_language,
    min_group: int = MIN_GROUP_SIZE,
) -> dict[str, float]:
    """Threshold per detected language for groups of ``min_group``+ samples with both labels."""
    groups: dict[LanguageTag, list[ScoredSample]] = defaultdict(list)
    for item in difficult:
        groups[detector(item.sample.text)].append(item)
    out = {}
    for lang in sorted(groups, key=lambda t: t.value):
        items = groups[lang]
        if lang is LanguageTag.UNKNOWN or len(items) < min_group:
            continue
        labels = [it.sample.label for it in items]
        if len(set(labels)) < 2:
            continue
        out[lang.value] = search_threshold([it.score for it in items], labels)
    return out


@dataclass
class DifficultSet:
    samples: list[CodeSample]
    n_misclassified: int
    shortfall: bool


def stratified_folds(labels: Sequence[int], k: int, seed: int) -> np.ndarray:
    """Fold index per sample; each class is shuffled then dealt round-robin."""
    y = np.asarray(labels)
    rng = np.random.default_rng(seed)
    fold = np.empty(len(y), dtype=np.int64)
    offset = 0
    for c in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == c))
        fold[idx] = (np.arange(len(idx)) + offset) % k
        offset += len(idx)
    return fold


def cross_val_misclassified(
    samples: Sequence[CodeSample],
    k_folds: int = 3,
    seed: int = 1337,
    feature_cfg: FeatureConfig = FeatureConfig(),
    train_cfg: Optional[TrainConfig] = None,
) -> list[int]:
    """Indices of samples the k-fold baseline misclassifies out of fold."""
    labels = [s.label for s in samples]
    folds = stratified_folds(labels, k_folds, seed)
    wrong: list[int] = []
    for f in range(k_folds):
        tr = np.flatnonzero(folds != f)
        te = np.flatnonzero(folds == f)
        scorer = fit_native([samples[i].text for i in tr], [labels[i] for i in tr], 2,
                            feature_cfg, train_cfg)
        p1 = scorer.score_texts([samples[i].text for i in te])[:, 1]
        pred = (p1 >= 0.5).astype(int)
        wrong.extend(int(i) for i, p in zip(te, pred) if p != labels[i])
    return sorted(wrong)


def build_difficult_set(
    samples: Sequence[CodeSample],
    k_folds: int = 3,
    size: int = 1000,
    seed: int = 1337,
    feature_cfg: FeatureConfig = FeatureConfig(),
    train_cfg: Optional[TrainConfig] = None,
) -> DifficultSet:
    """Sample ``size`` out-of-fold misclassifications of a k-fold TF-IDF + LR baseline.

    When fewer are available all of them are returned and ``shortfall`` is set
    (a warning is also emitted).
    """
    if len(samples) < size:
        raise ValueError(f"need at least {size} samples, got {len(samples)}")
    labels = {s.label for s in samples}
    if labels != {0, 1}:
        raise ValueError("difficult-set construction needs binary labels with both classes present")
    wrong = cross_val_misclassified(samples, k_folds, seed, feature_cfg, train_cfg)
    rng = np.random.default_rng(seed)
    if len(wrong) <= size:
        picked = wrong
    else:
        picked = sorted(int(i) for i in rng.choice(np.asarray(wrong), size=size, replace=False))
    shortfall = len(wrong) < size
    if shortfall:
        warnings.warn(f"only {len(wrong)} misclassified samples available for a difficult set of {size}",
                      stacklevel=2)
    return DifficultSet([samples[i] for i in picked], len(wrong), shortfall)


def calibrate(
    oof_scores: Sequence[float],
    oof_labels: Sequence[int],
    difficult: Sequence[ScoredSample],
    detector: Callable[[str], LanguageTag] = detect_language,
    min_group: int = MIN_GROUP_SIZE,
) -> ThresholdSet:
    tau_oof = search_threshold(oof_scores, oof_labels)
    tau_diff = search_threshold([d.score for d in difficult], [d.sample.label for d in difficult])
    return ThresholdSet(tau_oof, tau_diff, per_language_thresholds(difficult, detector, min_group))
