"""Macro-F1, confusion matrices and per-language error rates."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np


def confusion_matrix(preds: Sequence[int], golds: Sequence[int], num_classes: int) -> np.ndarray:
    """``cm[gold][pred]`` counts."""
    p = np.asarray(preds, dtype=np.int64)
    g = np.asarray(golds, dtype=np.int64)
    if p.shape != g.shape:
        raise ValueError(f"length mismatch: {len(p)} predictions vs {len(g)} gold labels")
    if len(p) and (min(p.min(), g.min()) < 0 or max(p.max(), g.max()) >= num_classes):
        raise ValueError(f"labels must lie in 0..{num_classes - 1}")
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (g, p), 1)
    return cm


def _f1_from_counts(tp: int, fp: int, fn: int) -> Fraction:
    denom = 2 * tp + fp + fn
    return Fraction(2 * tp, denom) if denom else Fraction(0)


def per_class_f1_exact(cm: np.ndarray) -> list[Fraction]:
    """Exact per-class F1 as fractions; a class with no support and no predictions scores 0."""
    tp = np.diag(cm)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    return [_f1_from_counts(int(a), int(b), int(c)) for a, b, c in zip(tp, fp, fn)]


def macro_f1(preds: Sequence[int], golds: Sequence[int], num_classes: int) -> float:
    """Unweighted mean of per-class F1 over all ``num_classes`` classes.

    Every class of the label space counts, including ones absent from both
    predictions and gold labels (they contribute 0).
    """
    return float(macro_f1_exact(confusion_matrix(preds, golds, num_classes)))


def macro_f1_exact(cm: np.ndarray) -> Fraction:
    f1 = per_class_f1_exact(cm)
    return sum(f1, Fraction(0)) / len(f1)


@dataclass
class EvalReport:
    macro_f1: float
    precision: list[float]
    recall: list[float]
    f1: list[float]
    support: list[int]
    confusion: np.ndarray
    language_error_rate: dict[str, float]
    language_support: dict[str, int]

    def top_confusions(self, k: int = 10) -> list[tuple[int, int, int]]:
        """Largest off-diagonal cells as ``(gold, pred, count)``."""
        cells = [(int(self.confusion[i, j]), i, j)
                 for i in range(len(self.confusion)) for j in range(len(self.confusion))
                 if i != j and self.confusion[i, j] > 0]
        cells.sort(key=lambda c: (-c[0], c[1], c[2]))
        return [(i, j, n) for n, i, j in cells[:k]]

    def to_json(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "support": self.support,
            "confusion": self.confusion.tolist(),
            "language_error_rate": self.language_error_rate,
            "language_support": self.language_support,
            "top_confusions": [list(c) for c in self.top_confusions()],
        }

    def format(self) -> str:
        lines = [f"macro-F1: {self.macro_f1:.4f}", "", "class  support  precision  recall  f1"]
        for c, (s, p, r, f) in enumerate(zip(self.support, self.precision, self.recall, self.f1)):
            lines.append(f"{c:>5}  {s:>7}  {p:>9.4f}  {r:>6.4f}  {f:.4f}")
        if self.language_error_rate:
            lines += ["", "language  n  error_rate"]
            for lang in sorted(self.language_error_rate):
                lines.append(f"{lang}  {self.language_support[lang]}  {self.language_error_rate[lang]:.4f}")
        top = self.top_confusions(5)
        if top:
            lines += ["", "top confusions (gold -> pred: n)"]
            lines += [f"{g} -> {p}: {n}" for g, p, n in top]
        return "\n".join(lines)


def eval_report(
    preds: Sequence[int],
    golds: Sequence[int],
    languages: Optional[Sequence[Optional[str]]] = None,
    num_classes: Optional[int] = None,
) -> EvalReport:
    if num_classes is None:
        num_classes = int(max(max(preds, default=0), max(golds, default=0))) + 1
    cm = confusion_matrix(preds, golds, num_classes)
    tp = np.diag(cm)
    pred_tot = cm.sum(axis=0)
    support = cm.sum(axis=1)
    precision = [float(a / b) if b else 0.0 for a, b in zip(tp, pred_tot)]
    recall = [float(a / b) if b else 0.0 for a, b in zip(tp, support)]
    f1 = [float(x) for x in per_class_f1_exact(cm)]
    err_rate: dict[str, float] = {}
    lang_n: dict[str, int] = {}
    if languages is not None:
        if len(languages) != len(golds):
            raise ValueError("languages must align with labels")
        wrong: Counter = Counter()
        total: Counter = Counter()
        for p, g, lang in zip(preds, golds, languages):
            key = str(lang)
            total[key] += 1
            wrong[key] += int(p != g)
        err_rate = {k: wrong[k] / total[k] for k in sorted(total)}
        lang_n = {k: total[k] for k in sorted(total)}
    return EvalReport(float(macro_f1_exact(cm)), precision, recall, f1,
                      [int(s) for s in support], cm, err_rate, lang_n)
