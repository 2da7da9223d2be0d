"""Code sample records, JSON Lines dataset I/O and descriptive statistics."""

from __future__ import annotations

import json
import statistics
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional

TASK_NUM_CLASSES = {"A": 2, "B": 11}


class DatasetError(ValueError):
    """Raised for malformed dataset files or invalid records."""


@dataclass(frozen=True)
class CodeSample:
    id: str
    text: str
    label: Optional[int] = None
    language: Optional[str] = None

    def to_record(self) -> dict:
        return {"id": self.id, "code": self.text, "label": self.label, "language": self.language}


def num_classes(task: str) -> int:
    try:
        return TASK_NUM_CLASSES[task.upper()]
    except KeyError:
        raise DatasetError(f"unknown task {task!r}; expected 'A' or 'B'") from None


def _parse_record(raw: dict, lineno: int, n_classes: Optional[int]) -> CodeSample:
    if not isinstance(raw, dict):
        raise DatasetError(f"line {lineno}: expected a JSON object")
    sid = raw.get("id")
    if sid is None or str(sid) == "":
        raise DatasetError(f"line {lineno}: missing or empty 'id'")
    sid = str(sid)
    text = raw.get("code", raw.get("text"))
    if not isinstance(text, str):
        raise DatasetError(f"line {lineno}: record {sid!r} has no string 'code' field")
    label = raw.get("label")
    if label is not None:
        if isinstance(label, bool) or not isinstance(label, int):
            raise DatasetError(f"line {lineno}: record {sid!r} has non-integer label {label!r}")
        if n_classes is not None and not 0 <= label < n_classes:
            raise DatasetError(
                f"record {sid!r} (line {lineno}): label {label} outside 0..{n_classes - 1}"
            )
    language = raw.get("language")
    if language is not None:
        language = str(language)
    return CodeSample(sid, text, label, language)


def iter_dataset(path: str | Path, task: Optional[str] = None) -> Iterator[CodeSample]:
    """Stream records from a JSON Lines file, validating as it goes.

    Blank lines are skipped. Ids must be unique within the file.
    """
    n_classes = num_classes(task) if task is not None else None
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"line {lineno}: malformed JSON ({exc.msg})") from None
            sample = _parse_record(raw, lineno, n_classes)
            if sample.id in seen:
                raise DatasetError(f"line {lineno}: duplicate id {sample.id!r}")
            seen.add(sample.id)
            yield sample


def load_dataset(path: str | Path, task: Optional[str] = None) -> list[CodeSample]:
    """Load a JSON Lines dataset (fields ``id``, ``code``, ``label``, ``language``).

    Args:
        path: file to read.
        task: ``"A"`` (labels 0/1) or ``"B"`` (labels 0..10). ``None`` skips the
            label range check.

    Returns:
        Samples in file order.

    Raises:
        DatasetError: on a malformed line (message carries the line number) or an
            out-of-range label (message names the record id).
    """
    return list(iter_dataset(path, task))


def save_dataset(samples: Iterable[CodeSample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps(s.to_record(), ensure_ascii=False) + "\n")


@dataclass
class DatasetStats:
    """Descriptive statistics over a set of samples.

    Lengths are kept as a histogram per (language, label) cell so that partial
    stats from separate shards merge exactly (``merge`` is associative and
    commutative) and medians stay exact.
    """

    length_hist: dict[tuple[Optional[str], Optional[int]], Counter] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(sum(h.values()) for h in self.length_hist.values())

    def merge(self, other: "DatasetStats") -> "DatasetStats":
        out: dict = {}
        for src in (self.length_hist, other.length_hist):
            for key, hist in src.items():
                out.setdefault(key, Counter()).update(hist)
        return DatasetStats(out)

    def language_counts(self) -> dict[Optional[str], int]:
        counts: Counter = Counter()
        for (lang, _), hist in self.length_hist.items():
            counts[lang] += sum(hist.values())
        return dict(counts)

    def language_percentages(self) -> dict[Optional[str], float]:
        total = self.total
        if total == 0:
            return {}
        return {k: 100.0 * v / total for k, v in self.language_counts().items()}

    def label_counts(self) -> dict[Optional[int], int]:
        counts: Counter = Counter()
        for (_, label), hist in self.length_hist.items():
            counts[label] += sum(hist.values())
        return dict(counts)

    def label_percentages(self) -> dict[Optional[int], float]:
        total = self.total
        if total == 0:
            return {}
        return {k: 100.0 * v / total for k, v in self.label_counts().items()}

    def cell(self, language: Optional[str] = None, label: Optional[int] = None,
             *, any_language: bool = False, any_label: bool = False) -> dict:
        """Count and mean/median/max length for one cell, or a marginal."""
        merged: Counter = Counter()
        for (lang, lab), hist in self.length_hist.items():
            if (any_language or lang == language) and (any_label or lab == label):
                merged.update(hist)
        return _summarize(merged)

    def overall(self) -> dict:
        return self.cell(any_language=True, any_label=True)

    def to_dict(self) -> dict:
        def key(v):
            return "null" if v is None else str(v)

        cells = {
            f"{key(lang)}|{key(lab)}": _summarize(hist)
            for (lang, lab), hist in sorted(self.length_hist.items(), key=lambda kv: (key(kv[0][0]), key(kv[0][1])))
        }
        return {
            "total": self.total,
            "overall": self.overall(),
            "language_counts": {key(k): v for k, v in sorted(self.language_counts().items(), key=lambda kv: key(kv[0]))},
            "language_percentages": {key(k): v for k, v in sorted(self.language_percentages().items(), key=lambda kv: key(kv[0]))},
            "label_counts": {key(k): v for k, v in sorted(self.label_counts().items(), key=lambda kv: key(kv[0]))},
            "label_percentages": {key(k): v for k, v in sorted(self.label_percentages().items(), key=lambda kv: key(kv[0]))},
            "cells": cells,
        }


def _summarize(hist: Counter) -> dict:
    n = sum(hist.values())
    if n == 0:
        return {"count": 0, "mean": 0.0, "median": 0.0, "max": 0}
    total = sum(length * c for length, c in hist.items())
    return {
        "count": n,
        "mean": total / n,
        "median": _hist_median(hist, n),
        "max": max(hist),
    }


def _hist_median(hist: Counter, n: int) -> float:
    lengths = sorted(hist)
    lo_rank, hi_rank = (n - 1) // 2, n // 2
    lo = hi = None
    seen = 0
    for length in lengths:
        seen += hist[length]
        if lo is None and seen > lo_rank:
            lo = length
        if seen > hi_rank:
            hi = length
            break
    return statistics.mean([lo, hi])


def compute_stats(samples: Iterable[CodeSample]) -> DatasetStats:
    """Collect per-(language, label) length histograms.

    Length is the number of Unicode code points in ``text``.
    """
    hist: dict = {}
    for s in samples:
        hist.setdefault((s.language, s.label), Counter())[len(s.text)] += 1
    return DatasetStats(hist)


def format_stats_table(stats: DatasetStats) -> str:
    rows = [("language", "label", "count", "mean", "median", "max")]
    for (lang, lab) in sorted(stats.length_hist, key=lambda k: (str(k[0]), str(k[1]))):
        c = stats.cell(lang, lab)
        rows.append((str(lang), str(lab), f"{c['count']:,}", f"{c['mean']:,.1f}",
                     f"{c['median']:,.1f}", f"{c['max']:,}"))
    o = stats.overall()
    rows.append(("ALL", "", f"{o['count']:,}", f"{o['mean']:,.1f}", f"{o['median']:,.1f}", f"{o['max']:,}"))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) if i < 2 else cell.rjust(w) for i, (cell, w) in enumerate(zip(r, widths)))
             for r in rows]
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines)
