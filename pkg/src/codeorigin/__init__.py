"""Detection of AI-generated code: features, linear scorers, chunking, calibration."""

from .calibrate import ThresholdSet, search_threshold
from .chunking import ChunkConfig, PackConfig, plan_chunks, sandwich_pack
from .corpus import CodeSample, compute_stats, load_dataset, save_dataset
from .features import Vocabulary, fit_vocabulary, transform
from .langid import LanguageTag, detect_language
from .linear import LinearModel, TrainConfig, effective_number_weights, train
from .normalize import normalize_code
from .pipeline import run_task_a
from .protocol import ExternalScorer, ProtocolError, score_external

__version__ = "0.1.0"

__all__ = [
    "ChunkConfig", "CodeSample", "ExternalScorer", "LanguageTag", "LinearModel", "PackConfig",
    "ProtocolError", "ThresholdSet", "TrainConfig", "Vocabulary", "compute_stats",
    "detect_language", "effective_number_weights", "fit_vocabulary", "load_dataset", "normalize_code",
    "plan_chunks", "run_task_a", "score_external", "sandwich_pack", "save_dataset", "search_threshold", "train", "transform",
]
