"""Pipeline configuration and its default hyperparameters.

Fields that only matter to external neural scorers (learning-rate schedule,
patience, label smoothing for fine-tuning, ...) are carried through unchanged so
one JSON file can drive both this pipeline and the scorer processes.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .chunking import ChunkConfig, PackConfig
from .linear import TrainConfig
from .normalize import AugmentConfig
from .scorers import FeatureConfig

# Subtask-A neural settings (shared by the three RoBERTa-style encoders) and CodeT5+.
SUBTASK_A_PROFILES: dict[str, dict[str, Any]] = {
    "roberta": {"max_seq_len": 128, "batch_size": 32, "grad_accum": 1, "lr": 2e-5, "epochs": 1,
                "warmup_ratio": 0.06, "weight_decay": 0.01, "label_smoothing": 0.02,
                "chunk_chars": 900, "overlap_chars": 120, "max_chunks": 6, "seeds": [1337]},
    "codet5p": {"max_seq_len": 256, "batch_size": 16, "grad_accum": 2, "lr": 3e-5, "epochs": 1,
                "warmup_ratio": 0.06, "weight_decay": 0.01, "label_smoothing": 0.02,
                "chunk_chars": 1024, "overlap_chars": 150, "max_chunks": 6, "seeds": [1337]},
}

SUBTASK_B_PROFILES: dict[str, dict[str, Any]] = {
    "codebert": {"max_seq_len": 512, "batch_size": 8, "grad_accum": 4, "lr": 2e-5, "epochs": 3,
                 "char_cap": 24_000, "seeds": [42], "head_fractions": [0.5, 0.6, 0.7]},
    "graphcodebert": {"max_seq_len": 512, "batch_size": 8, "grad_accum": 4, "lr": 2e-5, "epochs": 3,
                      "char_cap": 24_000, "seeds": [42], "head_fractions": [0.5, 0.6, 0.7]},
    "unixcoder": {"max_seq_len": 1024, "batch_size": 4, "grad_accum": 8, "lr": 1.5e-5, "epochs": 3,
                  "char_cap": 24_000, "seeds": [42, 43, 44], "head_fractions": [0.5, 0.6, 0.7],
                  "prefix": ["<encoder-only>"]},
    "codet5p": {"max_seq_len": 1024, "batch_size": 16, "grad_accum": 2, "lr": 1.5e-5, "epochs": 1,
                "char_cap": 10_000, "seeds": [42], "head_fractions": [0.6]},
}

for _p in SUBTASK_B_PROFILES.values():
    _p.update({"cb_beta": 0.9995, "early_stop_patience": 1, "lr_scheduler": "cosine"})


@dataclass
class LoloConfig:
    languages: tuple[str, ...] = ("Python", "C++", "Java")
    dominant: str = "Python"
    cap_with_dominant: int = 80_000
    cap_without_dominant: int = 40_000


@dataclass
class CalibrationConfig:
    difficult_size: int = 1000
    difficult_folds: int = 3
    min_group: int = 20


@dataclass
class TaskAConfig:
    chunks: ChunkConfig = field(default_factory=ChunkConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    use_augment: bool = True
    train_chunks: bool = True
    lolo: LoloConfig = field(default_factory=LoloConfig)
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)


@dataclass
class TaskBConfig:
    pack: PackConfig = field(default_factory=PackConfig)
    train_head_fractions: tuple[float, ...] = (0.50, 0.60, 0.70)
    eval_head_fractions: tuple[float, ...] = (0.50, 0.60, 0.70)
    seeds: tuple[int, ...] = (42, 43, 44)
    cb_beta: float = 0.9995
    weight_scheme: str = "effective_number"


@dataclass
class PipelineConfig:
    seed: int = 1337
    features: FeatureConfig = field(default_factory=FeatureConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    task_a: TaskAConfig = field(default_factory=TaskAConfig)
    task_b: TaskBConfig = field(default_factory=TaskBConfig)
    passthrough: dict[str, Any] = field(default_factory=lambda: {
        "subtask_a": SUBTASK_A_PROFILES, "subtask_b": SUBTASK_B_PROFILES})

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


def _merge(obj, overrides: dict, path: str = ""):
    if not dataclasses.is_dataclass(obj):
        raise TypeError(f"cannot merge into {path or 'config'}")
    changes = {}
    names = {f.name: f for f in dataclasses.fields(obj)}
    for key, value in overrides.items():
        if key not in names:
            raise KeyError(f"unknown config field {path + key!r}")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current) and isinstance(value, dict):
            changes[key] = _merge(current, value, f"{path}{key}.")
        elif isinstance(current, tuple) and isinstance(value, list):
            changes[key] = tuple(value)
        else:
            changes[key] = value
    return dataclasses.replace(obj, **changes)


def load_config(path: Optional[str | Path] = None, seed: Optional[int] = None) -> PipelineConfig:
    """Defaults, overridden by a (possibly partial) JSON file and then ``seed``."""
    cfg = PipelineConfig()
    if path is not None:
        cfg = _merge(cfg, json.loads(Path(path).read_text(encoding="utf-8")))
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed)
    return cfg
