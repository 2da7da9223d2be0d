"""Character chunking with robust aggregation, sandwich token packing and TTA averaging."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

DELIMITER = "/*<MID_SNIP>*/"
TRAIN_HEAD_FRACTIONS = (0.50, 0.60, 0.70)
EVAL_HEAD_FRACTION = 0.60


@dataclass(frozen=True)
class ChunkConfig:
    chunk_chars: int = 900
    overlap_chars: int = 120
    max_chunks: int = 6

    def __post_init__(self):
        if not self.chunk_chars > self.overlap_chars >= 0:
            raise ValueError("need chunk_chars > overlap_chars >= 0")
        # One window cannot hold both the head and the tail of a long text.
        if self.max_chunks < 2:
            raise ValueError("max_chunks must be >= 2")


ENCODER_CHUNKS = ChunkConfig(900, 120, 6)
LONG_CHUNKS = ChunkConfig(1024, 150, 6)


@dataclass(frozen=True)
class ChunkPlan:
    length: int
    config: ChunkConfig
    spans: tuple[tuple[int, int], ...]

    def slices(self, text: str) -> list[str]:
        return [text[s:e] for s, e in self.spans]

    def to_json(self) -> dict:
        return {"length": self.length, "chunk_chars": self.config.chunk_chars,
                "overlap_chars": self.config.overlap_chars, "max_chunks": self.config.max_chunks,
                "spans": [list(s) for s in self.spans]}


def plan_chunks(length: int, cfg: ChunkConfig = ENCODER_CHUNKS) -> ChunkPlan:
    """Lay out overlapping character windows that always include head and tail.

    Texts no longer than one chunk get a single span. Otherwise the count is
    ``min(max_chunks, ceil((length - overlap) / (chunk - overlap)))`` and starts
    are spread evenly from 0 to ``length - chunk`` (rounded half up).
    """
    if length < 0:
        raise ValueError("length must be >= 0")
    c, o = cfg.chunk_chars, cfg.overlap_chars
    if length <= c:
        return ChunkPlan(length, cfg, ((0, length),))
    n = min(cfg.max_chunks, -(-(length - o) // (c - o)))
    last = length - c
    starts = [(2 * i * last + (n - 1)) // (2 * (n - 1)) for i in range(n)]
    return ChunkPlan(length, cfg, tuple((s, s + c) for s in starts))


def aggregate_chunk_probs(probs: Sequence[float]) -> float:
    """Blend a trimmed mean and a top-2 mean of per-chunk probabilities 50/50.

    With three or more chunks the trimmed mean drops one minimum and one maximum;
    otherwise it is the plain mean. A single chunk is its own top-2 mean.
    """
    s = sorted(float(p) for p in probs)
    if not s:
        raise ValueError("cannot aggregate an empty list of chunk probabilities")
    if any(not 0.0 <= p <= 1.0 for p in s):
        raise ValueError("chunk probabilities must lie in [0, 1]")
    core = s[1:-1] if len(s) >= 3 else s
    trimmed = math.fsum(core) / len(core)
    top2 = math.fsum(s[-2:]) / len(s[-2:])
    return 0.5 * trimmed + 0.5 * top2


class Tokenizer(Protocol):
    def tokenize(self, text: str) -> list[str]: ...

    def encode(self, text: str) -> "Encoding": ...


@dataclass(frozen=True)
class Encoding:
    """Tokens plus the exact separators around them.

    ``gaps[i]`` precedes ``tokens[i]``; ``gaps[-1]`` trails the last token, so
    ``len(gaps) == len(tokens) + 1`` and :meth:`text` reproduces the input.
    """

    tokens: tuple[str, ...]
    gaps: tuple[str, ...] = field(default=("",))

    def text(self) -> str:
        parts = []
        for g, t in zip(self.gaps, self.tokens):
            parts.append(g)
            parts.append(t)
        parts.append(self.gaps[-1])
        return "".join(parts)

    def __len__(self) -> int:
        return len(self.tokens)


class RegexTokenizer:
    """Words (``\\w+``) and runs of punctuation, whitespace recorded as separators."""

    pattern = re.compile(r"\w+|[^\w\s]+")

    def tokenize(self, text: str) -> list[str]:
        return self.pattern.findall(text)

    def encode(self, text: str) -> Encoding:
        tokens, gaps = [], []
        pos = 0
        for m in self.pattern.finditer(text):
            gaps.append(text[pos:m.start()])
            tokens.append(m.group())
            pos = m.end()
        gaps.append(text[pos:])
        return Encoding(tuple(tokens), tuple(gaps))


DEFAULT_TOKENIZER = RegexTokenizer()


def tokenize(text: str) -> list[str]:
    return DEFAULT_TOKENIZER.tokenize(text)


@dataclass(frozen=True)
class PackedInput:
    tokens: tuple[str, ...]
    head: int
    tail: int
    delimiter: tuple[str, ...]
    truncated: bool

    @property
    def head_fraction(self) -> float:
        total = self.head + self.tail
        return self.head / total if total else 1.0


def _split(usable: int, head_fraction: float) -> tuple[int, int]:
    h = int(math.floor(head_fraction * usable + 0.5))
    return h, usable - h


def sandwich_pack(
    tokens: Sequence[str],
    budget: int,
    head_fraction: float = EVAL_HEAD_FRACTION,
    delimiter: Sequence[str] = tuple(tokenize(DELIMITER)),
) -> PackedInput:
    """Keep the first ``h`` and last ``t`` tokens around a delimiter.

    ``h = round(head_fraction * (budget - len(delimiter)))`` and ``t`` takes the
    rest of the budget. Inputs that fit are returned untouched.
    """
    delimiter = tuple(delimiter)
    if budget <= len(delimiter) + 2:
        raise ValueError(f"budget {budget} leaves no room around a {len(delimiter)}-token delimiter")
    if not 0.0 < head_fraction < 1.0:
        raise ValueError("head_fraction must lie in (0, 1)")
    tokens = tuple(tokens)
    if len(tokens) <= budget:
        return PackedInput(tokens, len(tokens), 0, (), False)
    h, t = _split(budget - len(delimiter), head_fraction)
    packed = tokens[:h] + delimiter + tokens[len(tokens) - t:]
    return PackedInput(packed, h, t, delimiter, True)


def cap_chars(text: str, cap: int) -> str:
    """Keep ``cap // 2`` leading and the remaining trailing characters of long texts."""
    if cap <= 0 or len(text) <= cap:
        return text
    head = cap // 2
    return text[:head] + text[len(text) - (cap - head):]


@dataclass(frozen=True)
class PackConfig:
    max_seq_len: int = 512
    special_tokens: int = 2
    char_cap: int = 24_000
    prefix: tuple[str, ...] = ()

    @property
    def budget(self) -> int:
        return self.max_seq_len - self.special_tokens - len(self.prefix)


def pack_text(text: str, cfg: PackConfig, head_fraction: float = EVAL_HEAD_FRACTION,
              tokenizer: Tokenizer = DEFAULT_TOKENIZER) -> str:
    """Char-cap, tokenize, sandwich-pack and render back to text for a scorer.

    Tokens keep their original separators; the delimiter is rendered on its own
    line. A configured prefix (for example a mode token) is prepended.
    """
    enc = tokenizer.encode(cap_chars(text, cfg.char_cap))
    delim = tuple(tokenizer.tokenize(DELIMITER))
    packed = sandwich_pack(enc.tokens, cfg.budget, head_fraction, delim)
    if not packed.truncated:
        body = enc.text()
    else:
        n = len(enc.tokens)
        head = Encoding(enc.tokens[:packed.head], enc.gaps[:packed.head] + ("",)).text()
        tail_start = n - packed.tail
        tail = Encoding(enc.tokens[tail_start:], ("",) + enc.gaps[tail_start + 1:]).text()
        body = f"{head}\n{DELIMITER}\n{tail}"
    if cfg.prefix:
        body = " ".join(cfg.prefix) + " " + body
    return body


def tta_average(distributions: Sequence[Sequence[float]]) -> np.ndarray:
    """Element-wise mean of probability vectors.

    Sums are correctly rounded, so the result does not depend on input order.
    """
    if len(distributions) == 0:
        raise ValueError("need at least one distribution")
    lengths = {len(d) for d in distributions}
    if len(lengths) != 1:
        raise ValueError(f"distributions have mismatched lengths {sorted(lengths)}")
    arr = np.asarray(distributions, dtype=np.float64)
    sums = arr.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-6):
        raise ValueError("every distribution must sum to 1 within 1e-6")
    return np.array([math.fsum(col) for col in arr.T]) / len(arr)
