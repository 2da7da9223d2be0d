"""Text normalization, training-time augmentations and training chunk sampling."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np

TAB_WIDTH = 4
MAX_BLANK_RUN = 2

_FENCE = re.compile(r"^\s*```[\w+#.-]*\s*$")

_BLOCK_COMMENT = re.compile(r"/\*.*?\*/", re.DOTALL)

_LITERAL = re.compile(
    r"""(?P<str>"(?:\\.|[^"\\\n])*"|'(?:\\.|[^'\\\n])*')"""
    r"|(?P<num>(?<![\w.])(?:0[xX][0-9a-fA-F]+|\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)(?!\w))"
)

_IMPORT_LIKE = re.compile(r"^(?:import|from|using|package|use)\b|^#\s*include\b")
_COMMENT_LINE = re.compile(r"^(?:#|//|/\*|\*|--)")
_DOC_DELIM = ('"""', "'''")


def normalize_code(text: str) -> str:
    """Deterministic cleanup applied to every sample.

    Drops markdown fence lines, expands each tab to four spaces, strips trailing
    whitespace and caps runs of blank lines at two. Idempotent.
    """
    out: list[str] = []
    blank_run = 0
    for line in text.split("\n"):
        if _FENCE.match(line):
            continue
        line = line.replace("\t", " " * TAB_WIDTH).rstrip()
        if line:
            blank_run = 0
        else:
            blank_run += 1
            if blank_run > MAX_BLANK_RUN:
                continue
        out.append(line)
    return "\n".join(out)


def _line_comment_start(line: str) -> int:
    """Index of the first ``//`` preceded by an even number of double quotes, or -1."""
    pos = line.find("//")
    while pos != -1:
        if line.count('"', 0, pos) % 2 == 0:
            return pos
        pos = line.find("//", pos + 1)
    return -1


def strip_comments(text: str) -> str:
    """Lexically remove ``/* */`` blocks, ``//`` tails and full-line ``#`` comments."""
    text = _BLOCK_COMMENT.sub("", text)
    kept = []
    for line in text.split("\n"):
        if line.lstrip().startswith("#"):
            continue
        cut = _line_comment_start(line)
        kept.append(line if cut == -1 else line[:cut])
    return "\n".join(kept)


def mask_literals(text: str) -> str:
    """Replace quoted strings with ``<STR>`` and standalone numbers with ``<NUM>``."""

    def repl(m: re.Match) -> str:
        return "<STR>" if m.group("str") is not None else "<NUM>"

    return _LITERAL.sub(repl, text)


def _header_run(lines: list[str]) -> int:
    n = 0
    in_doc = None
    in_block = False
    for line in lines:
        s = line.strip()
        if in_doc is not None:
            if in_doc in s:
                in_doc = None
            n += 1
            continue
        if in_block:
            if "*/" in s:
                in_block = False
            n += 1
            continue
        if not s or _IMPORT_LIKE.match(s) or _COMMENT_LINE.match(s):
            if s.startswith("/*") and "*/" not in s[2:]:
                in_block = True
            n += 1
            continue
        delim = next((d for d in _DOC_DELIM if s.startswith(d)), None)
        if delim is not None:
            if delim not in s[3:]:
                in_doc = delim
            n += 1
            continue
        break
    return n


def drop_header(text: str, max_lines: int = 40) -> str:
    """Remove the leading license/import/docstring block, at most ``max_lines`` lines."""
    if max_lines < 0:
        raise ValueError("max_lines must be >= 0")
    lines = text.split("\n")
    n = min(_header_run(lines), max_lines)
    if n == 0:
        return text
    return "\n".join(lines[n:])


@dataclass(frozen=True)
class AugmentConfig:
    p_comment_strip: float = 0.10
    p_literal_mask: float = 0.15
    p_header_drop: float = 0.10
    header_max_lines: int = 40
    rng_seed: int = 1337

    def __post_init__(self):
        for name in ("p_comment_strip", "p_literal_mask", "p_header_drop"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        if self.header_max_lines < 0:
            raise ValueError("header_max_lines must be >= 0")


def augment(text: str, cfg: AugmentConfig, rng: np.random.Generator) -> str:
    """Apply comment stripping, literal masking and header dropping, each with its own probability.

    Three uniforms are drawn on every call whatever the outcome, so the stream
    position after the call does not depend on the text.
    """
    u = rng.random(3)
    if u[0] < cfg.p_comment_strip:
        text = strip_comments(text)
    if u[1] < cfg.p_literal_mask:
        text = mask_literals(text)
    if u[2] < cfg.p_header_drop:
        text = drop_header(text, cfg.header_max_lines)
    return text


HEAD_BIAS = 0.50
RANDOM_BIAS = 0.30


def sample_training_chunk(text: str, chunk_chars: int, rng: np.random.Generator) -> str:
    """Pick a ``chunk_chars`` window: head 50%, uniform 30%, tail 20%."""
    if chunk_chars <= 0:
        raise ValueError("chunk_chars must be positive")
    slack = len(text) - chunk_chars
    if slack <= 0:
        return text
    u = rng.random()
    if u < HEAD_BIAS:
        start = 0
    elif u < HEAD_BIAS + RANDOM_BIAS:
        start = int(rng.integers(0, slack + 1))
    else:
        start = slack
    return text[start:start + chunk_chars]


def sample_rng(seed: int, sample_id: str) -> np.random.Generator:
    """Per-sample random stream derived from a global seed and the sample id."""
    digest = hashlib.sha256(sample_id.encode("utf-8")).digest()
    return np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, int.from_bytes(digest[:8], "little")])
