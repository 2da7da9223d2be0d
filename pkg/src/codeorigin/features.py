"""Character n-gram (word-bounded) TF-IDF features built from scratch."""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import CodeSample

VOCAB_FORMAT = "codeorigin-vocabulary"
VOCAB_VERSION = 1


def char_wb_ngrams(text: str, n_min: int = 2, n_max: int = 5) -> Counter:
    """Count character n-grams inside whitespace-delimited words.

    Every word is padded with one space on each side; n-grams never cross into
    a neighbouring word.

    >>> sorted(char_wb_ngrams("ab", 2, 2))
    [' a', 'ab', 'b ']
    """
    return Counter(_gram_list(text, n_min, n_max))


def _gram_list(text: str, n_min: int, n_max: int) -> list[str]:
    if not 1 <= n_min <= n_max:
        raise ValueError(f"need 1 <= n_min <= n_max, got {n_min}, {n_max}")
    grams: list[str] = []
    extend = grams.extend
    for word in text.split():
        padded = f" {word} "
        size = len(padded)
        for n in range(n_min, min(n_max, size) + 1):
            extend([padded[i:i + n] for i in range(size - n + 1)])
    return grams


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray
    values: np.ndarray
    dim: int

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))


@dataclass(frozen=True)
class Vocabulary:
    terms: dict[str, int]
    doc_freq: np.ndarray
    n_docs: int
    n_min: int = 2
    n_max: int = 5
    max_features: int = 100_000
    max_chars: int = 10_000

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def idf(self) -> np.ndarray:
        return np.log((1.0 + self.n_docs) / (1.0 + self.doc_freq)) + 1.0

    def fingerprint(self) -> str:
        """Stable hash of the fitted state; models use it to refuse foreign features."""
        h = hashlib.sha256()
        h.update(json.dumps([self.n_min, self.n_max, self.max_chars, self.n_docs]).encode())
        for term, idx in sorted(self.terms.items(), key=lambda kv: kv[1]):
            h.update(f"{idx}\x00{term}\x00{int(self.doc_freq[idx])}\x01".encode("utf-8"))
        return h.hexdigest()

    def to_json(self) -> dict:
        ordered = sorted(self.terms.items(), key=lambda kv: kv[1])
        return {
            "format": VOCAB_FORMAT,
            "version": VOCAB_VERSION,
            "n_min": self.n_min,
            "n_max": self.n_max,
            "max_features": self.max_features,
            "max_chars": self.max_chars,
            "n_docs": self.n_docs,
            "terms": [[t, i, int(self.doc_freq[i])] for t, i in ordered],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Vocabulary":
        if data.get("format") != VOCAB_FORMAT or data.get("version") != VOCAB_VERSION:
            raise ValueError("not a version-1 codeorigin vocabulary file")
        terms = {t: i for t, i, _ in data["terms"]}
        df = np.zeros(len(terms), dtype=np.int64)
        for _, i, d in data["terms"]:
            df[i] = d
        return cls(terms, df, data["n_docs"], data["n_min"], data["n_max"],
                   data["max_features"], data["max_chars"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _texts(samples: Iterable[CodeSample | str]) -> list[str]:
    return [s if isinstance(s, str) else s.text for s in samples]


def fit_vocabulary(
    samples: Sequence[CodeSample | str],
    n_min: int = 2,
    n_max: int = 5,
    max_features: int = 100_000,
    max_chars: int = 10_000,
) -> Vocabulary:
    """Select the ``max_features`` most frequent n-grams of a corpus.

    Terms are ranked by total corpus count with lexicographic tie-break. Indices
    of the kept terms follow lexicographic order, so the result does not depend
    on document order.
    """
    texts = _texts(samples)
    if not texts:
        raise ValueError("cannot fit a vocabulary on an empty corpus")
    total: Counter = Counter()
    df: Counter = Counter()
    for text in texts:
        grams = _gram_list(text[:max_chars], n_min, n_max)
        total.update(grams)
        df.update(set(grams))
    ranked = sorted(total.items(), key=lambda kv: (-kv[1], kv[0]))[:max_features]
    kept = sorted(t for t, _ in ranked)
    terms = {t: i for i, t in enumerate(kept)}
    doc_freq = np.array([df[t] for t in kept], dtype=np.int64)
    return Vocabulary(terms, doc_freq, len(texts), n_min, n_max, max_features, max_chars)


def _weights(grams: Counter, vocab: Vocabulary, idf: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lookup = vocab.terms.get
    hits = [(j, c) for j, c in ((lookup(t), c) for t, c in grams.items()) if j is not None]
    if not hits:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    arr = np.array(hits, dtype=np.int64)
    arr = arr[np.argsort(arr[:, 0])]
    idx = arr[:, 0]
    w = (1.0 + np.log(arr[:, 1].astype(np.float64))) * idf[idx]
    return idx, w / np.sqrt(np.dot(w, w))


def transform(text: str, vocab: Vocabulary) -> SparseVector:
    """Sublinear-tf, smoothed-idf, L2-normalized vector for one text."""
    grams = char_wb_ngrams(text[:vocab.max_chars], vocab.n_min, vocab.n_max)
    idx, w = _weights(grams, vocab, vocab.idf)
    return SparseVector(idx, w, len(vocab))


def transform_many(texts: Sequence[CodeSample | str], vocab: Vocabulary) -> sp.csr_matrix:
    """Row-stacked :func:`transform` as a CSR matrix."""
    idf = vocab.idf
    indptr = [0]
    indices: list[np.ndarray] = []
    data: list[np.ndarray] = []
    for text in _texts(texts):
        grams = char_wb_ngrams(text[:vocab.max_chars], vocab.n_min, vocab.n_max)
        idx, w = _weights(grams, vocab, idf)
        indices.append(idx)
        data.append(w)
        indptr.append(indptr[-1] + len(idx))
    cat_i = np.concatenate(indices) if indices else np.zeros(0, dtype=np.int64)
    cat_d = np.concatenate(data) if data else np.zeros(0)
    return sp.csr_matrix((cat_d, cat_i, np.asarray(indptr)), shape=(len(indptr) - 1, len(vocab)))

