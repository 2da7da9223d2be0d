"""Orchestration: leave-one-language-out folds, OOF scoring, ensembling, end-to-end runs."""

from __future__ import annotations

import dataclasses
import json
import logging
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import calibrate as cal
from .chunking import ChunkConfig, PackConfig, aggregate_chunk_probs, pack_text, plan_chunks, tta_average
from .config import LoloConfig, PipelineConfig
from .corpus import CodeSample
from .langid import detect_language
from .normalize import augment, normalize_code, sample_rng, sample_training_chunk
from .scorers import NativeLinearScorer, Scorer, fit_native

log = logging.getLogger(__name__)


class ScoringError(RuntimeError):
    pass


@dataclass
class FoldPlan:
    held_out: str
    train_ids: list[str]
    holdout_ids: list[str]
    cell_targets: dict[tuple[str, int], int]
    oversampled: dict[tuple[str, int], list[str]] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "held_out": self.held_out,
            "train_ids": self.train_ids,
            "holdout_ids": self.holdout_ids,
            "cell_targets": [[lang, lab, n] for (lang, lab), n in sorted(self.cell_targets.items())],
            "oversampled": [[lang, lab, ids] for (lang, lab), ids in sorted(self.oversampled.items())],
        }


def _draw_cell(ids: list[str], target: int, rng: np.random.Generator) -> tuple[list[str], list[str]]:
    """Take ``target`` ids: a random subset if enough, else all plus draws with replacement."""
    if len(ids) >= target:
        picked = rng.permutation(len(ids))[:target]
        return [ids[i] for i in sorted(picked)], []
    extra = rng.integers(0, len(ids), size=target - len(ids))
    extra_ids = [ids[i] for i in extra]
    return list(ids) + extra_ids, extra_ids


def build_lolo_folds(
    samples: Sequence[CodeSample],
    lolo: LoloConfig = LoloConfig(),
    seed: int = 1337,
) -> list[FoldPlan]:
    """One fold per language; training cells balanced to ``cap // 2`` per (language, label).

    The cap is ``cap_with_dominant`` when the dominant language is among a fold's
    training languages and ``cap_without_dominant`` otherwise. Short cells are
    topped up by sampling with replacement (the extra draws are logged in
    ``FoldPlan.oversampled``).
    """
    languages = list(lolo.languages)
    cells: dict[tuple[str, int], list[str]] = defaultdict(list)
    by_lang: dict[str, list[str]] = defaultdict(list)
    for s in samples:
        if s.language not in languages:
            raise ValueError(f"sample {s.id!r} has language {s.language!r}, expected one of {languages}")
        if s.label not in (0, 1):
            raise ValueError(f"sample {s.id!r} needs a binary label")
        cells[(s.language, s.label)].append(s.id)
        by_lang[s.language].append(s.id)
    for lang in languages:
        if lang not in by_lang:
            raise ValueError(f"language {lang!r} is absent from the training data")

    folds = []
    for k, held in enumerate(languages):
        train_langs = [lang for lang in languages if lang != held]
        cap = lolo.cap_with_dominant if lolo.dominant in train_langs else lolo.cap_without_dominant
        target = cap // 2
        rng = np.random.default_rng([seed, k])
        train_ids: list[str] = []
        targets, oversampled = {}, {}
        for lang in train_langs:
            for label in (0, 1):
                ids = cells.get((lang, label), [])
                if not ids:
                    raise ValueError(f"no samples for language {lang!r} with label {label}")
                drawn, extra = _draw_cell(ids, target, rng)
                train_ids.extend(drawn)
                targets[(lang, label)] = target
                if extra:
                    oversampled[(lang, label)] = extra
        folds.append(FoldPlan(held, train_ids, list(by_lang[held]), targets, oversampled))
    return folds


def prepare_training_texts(
    samples: Sequence[CodeSample],
    cfg: PipelineConfig,
    seed: int,
) -> list[str]:
    """Normalize, optionally augment and chunk-sample training texts.

    Each occurrence of a sample gets its own random stream, so oversampled
    duplicates receive independent augmentations.
    """
    a = cfg.task_a
    seen: dict[str, int] = defaultdict(int)
    out = []
    for s in samples:
        occurrence = seen[s.id]
        seen[s.id] += 1
        rng = sample_rng(seed, f"{s.id}#{occurrence}")
        text = normalize_code(s.text)
        if a.use_augment:
            text = augment(text, a.augment, rng)
        if a.train_chunks:
            text = sample_training_chunk(text, a.chunks.chunk_chars, rng)
        out.append(text)
    return out


def fit_native_binary(samples: Sequence[CodeSample], cfg: PipelineConfig, seed: int) -> NativeLinearScorer:
    texts = prepare_training_texts(samples, cfg, seed)
    train_cfg = dataclasses.replace(cfg.train, seed=seed)
    return fit_native(texts, [s.label for s in samples], 2, cfg.features, train_cfg)


class MeanScorer:
    """Average of several scorers' probability rows (e.g. the fold models)."""

    def __init__(self, scorers: Sequence[Scorer]):
        if not scorers:
            raise ValueError("need at least one scorer")
        ks = {s.num_classes for s in scorers}
        if len(ks) != 1:
            raise ValueError(f"scorers disagree on class count: {sorted(ks)}")
        self.scorers = list(scorers)
        self.num_classes = ks.pop()

    def score_texts(self, texts: Sequence[str]) -> np.ndarray:
        rows = [s.score_texts(texts) for s in self.scorers]
        return np.mean(rows, axis=0) if texts else np.zeros((0, self.num_classes))


def score_chunked(
    scorer: Scorer,
    texts: Sequence[str],
    chunk_cfg: ChunkConfig = ChunkConfig(),
    positive: int = 1,
    plans: Optional[list] = None,
) -> np.ndarray:
    """Chunk each normalized text, score every chunk in one batch, aggregate per text."""
    chunk_texts: list[str] = []
    owners: list[int] = []
    for i, text in enumerate(texts):
        plan = plan_chunks(len(text), chunk_cfg)
        if plans is not None:
            plans.append(plan)
        for piece in plan.slices(text):
            chunk_texts.append(piece)
            owners.append(i)
    probs = scorer.score_texts(chunk_texts)
    per_text: list[list[float]] = [[] for _ in texts]
    for owner, row in zip(owners, probs):
        per_text[owner].append(float(row[positive]))
    return np.array([aggregate_chunk_probs(p) for p in per_text])


@dataclass
class OofRecord:
    id: str
    language: Optional[str]
    score: float
    label: int

    def to_json(self) -> dict:
        return {"id": self.id, "language": self.language, "score": self.score, "label": self.label}


def run_oof(
    folds: Sequence[FoldPlan],
    samples: Sequence[CodeSample],
    fit: Callable[[list[CodeSample], int], Scorer],
    chunk_cfg: ChunkConfig = ChunkConfig(),
) -> tuple[list[OofRecord], list[Scorer]]:
    """Train one scorer per fold on its training ids and score its held-out language.

    ``fit(train_samples, fold_index)`` builds the scorer. Returns the OOF records
    (fold order, then file order) and the fold scorers.
    """
    by_id = {s.id: s for s in samples}
    records: list[OofRecord] = []
    scorers: list[Scorer] = []
    for k, fold in enumerate(folds):
        holdout = set(fold.holdout_ids)
        leaked = [i for i in fold.train_ids if i in holdout or by_id[i].language == fold.held_out]
        assert not leaked, f"fold {fold.held_out}: held-out samples in training ({leaked[:3]})"
        scorer = fit([by_id[i] for i in fold.train_ids], k)
        held = [by_id[i] for i in fold.holdout_ids]
        try:
            scores = score_chunked(scorer, [normalize_code(s.text) for s in held], chunk_cfg)
        except Exception as exc:
            raise ScoringError(f"fold {k} (held out {fold.held_out}): {exc}") from exc
        records.extend(OofRecord(s.id, s.language, float(p), int(s.label)) for s, p in zip(held, scores))
        scorers.append(scorer)
    return records, scorers


def ensemble_predict_many(
    scorers: Sequence[Scorer],
    texts: Sequence[str],
    head_fractions: Sequence[float] = (0.50, 0.60, 0.70),
    pack_cfg: PackConfig = PackConfig(),
) -> np.ndarray:
    """Sandwich-pack each text at every head fraction, score with every model, average.

    Produces ``len(scorers) * len(head_fractions)`` forward passes per text. The
    average uses correctly rounded sums, so the order of models and fractions
    does not change the result.
    """
    if not scorers:
        raise ValueError("need at least one scorer")
    if not head_fractions:
        raise ValueError("need at least one head fraction")
    passes = []
    for fraction in head_fractions:
        packed = [pack_text(t, pack_cfg, fraction) for t in texts]
        for scorer in scorers:
            passes.append(np.asarray(scorer.score_texts(packed), dtype=np.float64))
    k = passes[0].shape[1] if len(texts) else 0
    out = np.zeros((len(texts), k))
    for i in range(len(texts)):
        out[i] = tta_average([p[i] for p in passes])
    return out


def ensemble_predict(scorers: Sequence[Scorer], sample: CodeSample,
                     head_fractions: Sequence[float] = (0.50, 0.60, 0.70),
                     pack_cfg: PackConfig = PackConfig()) -> np.ndarray:
    return ensemble_predict_many(scorers, [normalize_code(sample.text)], head_fractions, pack_cfg)[0]


@dataclass
class Prediction:
    id: str
    score: float
    label: int

    def to_json(self) -> dict:
        return {"id": self.id, "score": self.score, "label": self.label}


def predict_binary(
    scorer: Scorer,
    samples: Sequence[CodeSample],
    thresholds: cal.ThresholdSet,
    chunk_cfg: ChunkConfig = ChunkConfig(),
    detector=detect_language,
    plans: Optional[list] = None,
) -> list[Prediction]:
    texts = [normalize_code(s.text) for s in samples]
    scores = score_chunked(scorer, texts, chunk_cfg, plans=plans)
    return [Prediction(s.id, float(p), cal.apply(thresholds, float(p), detector(t)))
            for s, t, p in zip(samples, texts, scores)]


def predict_multiclass(
    scorers: Sequence[Scorer],
    samples: Sequence[CodeSample],
    head_fractions: Sequence[float] = (0.50, 0.60, 0.70),
    pack_cfg: PackConfig = PackConfig(),
) -> list[Prediction]:
    probs = ensemble_predict_many(scorers, [normalize_code(s.text) for s in samples], head_fractions, pack_cfg)
    labels = probs.argmax(axis=1)
    return [Prediction(s.id, float(p[c]), int(c)) for s, p, c in zip(samples, probs, labels)]


def write_jsonl(path: str | Path, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


@dataclass
class TaskARun:
    folds: list[FoldPlan]
    oof: list[OofRecord]
    difficult: cal.DifficultSet
    difficult_scores: list[float]
    thresholds: cal.ThresholdSet
    scorer: MeanScorer


def run_task_a(train: Sequence[CodeSample], cfg: PipelineConfig = PipelineConfig()) -> TaskARun:
    """LOLO folds -> OOF scores -> difficult set -> calibrated thresholds.

    The returned predictor averages the fold models; the difficult set is
    scored with that same predictor before its thresholds are searched.
    """
    a = cfg.task_a
    folds = build_lolo_folds(train, a.lolo, cfg.seed)
    oof, fold_scorers = run_oof(
        folds, train, lambda fold_samples, k: fit_native_binary(fold_samples, cfg, cfg.seed + k), a.chunks)
    predictor = MeanScorer(fold_scorers)

    normalized = [dataclasses.replace(s, text=normalize_code(s.text)) for s in train]
    size = min(a.calibration.difficult_size, len(normalized))
    train_cfg = dataclasses.replace(cfg.train, seed=cfg.seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        hard = cal.build_difficult_set(normalized, a.calibration.difficult_folds, size, cfg.seed,
                                       cfg.features, train_cfg)
    hard_scores = [float(x) for x in score_chunked(predictor, [s.text for s in hard.samples], a.chunks)]
    scored = [cal.ScoredSample(s, p) for s, p in zip(hard.samples, hard_scores)]
    thresholds = calibrate_thresholds([r.score for r in oof], [r.label for r in oof], scored,
                                      a.calibration.min_group)
    return TaskARun(folds, oof, hard, hard_scores, thresholds, predictor)


def calibrate_thresholds(oof_scores, oof_labels, difficult: Sequence[cal.ScoredSample],
                         min_group: int = cal.MIN_GROUP_SIZE) -> cal.ThresholdSet:
    """Calibrate, falling back to the OOF threshold when the difficult set has one label."""
    if len({d.sample.label for d in difficult}) < 2:
        log.warning("difficult set has %d samples and lacks a label; using the OOF threshold for both stages",
                    len(difficult))
        tau = cal.search_threshold(oof_scores, oof_labels)
        return cal.ThresholdSet(tau, tau, {})
    return cal.calibrate(oof_scores, oof_labels, difficult, min_group=min_group)

