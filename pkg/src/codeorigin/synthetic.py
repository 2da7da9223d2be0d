"""Synthetic toy corpus for desk-scale end-to-end runs.

Each toy "language" has its own keywords and punctuation. "AI" samples come
from rigid templates (descriptive snake_case names, uniform spacing, a
boilerplate comment per function); "human" samples use terse names, irregular
spacing and stray comments. The style signal is shared across languages, so a
model trained on some languages can transfer to an unseen one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import CodeSample


@dataclass(frozen=True)
class ToyLanguage:
    name: str
    fn: str
    assign: str
    end: str
    comment: str
    open: str
    close: str
    out: str
    loop: str


TOY_LANGUAGES = {
    "Alpha": ToyLanguage("Alpha", "proc", ":=", ";", "--", "begin", "end", "emit", "repeat"),
    "Beta": ToyLanguage("Beta", "defun", "<-", "", "%%", "{", "}", "show", "loop"),
    "Gamma": ToyLanguage("Gamma", "fun", "=", ".", "//", "do", "od", "write", "each"),
    "Delta": ToyLanguage("Delta", "routine", "=:", "!", "##", "[[", "]]", "put", "cycle"),
}

_AI_NOUNS = ["input_values", "result_total", "current_index", "item_count", "output_buffer",
             "running_sum", "element_value", "max_value", "normalized_score", "record_list"]
_AI_VERBS = ["compute", "calculate", "process", "initialize", "validate", "aggregate"]
_AI_COMMENTS = [
    "Compute the {noun} for the given input.",
    "This function will {verb} the values and return the result.",
    "Initialize the {noun} before processing.",
    "Return the final {noun} to the caller.",
]
_HUMAN_NAMES = ["x", "y", "tmp", "a1", "cnt", "n", "buf", "q", "k2", "res", "zz", "idx"]
_HUMAN_COMMENTS = ["fixme", "hack, dont touch", "TODO?? later", "wtf", "ok", "old version below", "v2"]


def _ai_function(lang: ToyLanguage, rng: np.random.Generator) -> str:
    verb = _AI_VERBS[rng.integers(len(_AI_VERBS))]
    a, b, c = (_AI_NOUNS[i] for i in rng.choice(len(_AI_NOUNS), size=3, replace=False))
    comment = _AI_COMMENTS[rng.integers(len(_AI_COMMENTS))].format(noun=a, verb=verb)
    ind = "    "
    lines = [
        f"{lang.comment} {comment}",
        f"{lang.fn} {verb}_{a}({b}, {c}) {lang.open}",
        f"{ind}{a} {lang.assign} 0{lang.end}",
        f"{ind}{lang.loop} element_value in {b} {lang.open}",
        f"{ind}{ind}{a} {lang.assign} {a} + element_value{lang.end}",
        f"{ind}{lang.close}",
        f"{ind}{lang.out}({a}){lang.end}",
        f"{lang.close}",
    ]
    return "\n".join(lines)


def _human_function(lang: ToyLanguage, rng: np.random.Generator) -> str:
    names = [_HUMAN_NAMES[i] for i in rng.choice(len(_HUMAN_NAMES), size=3, replace=False)]
    ind = " " * int(rng.integers(1, 4))
    sp = lambda: " " if rng.random() < 0.3 else ""  # noqa: E731
    lines = [f"{lang.fn} {names[0]}{int(rng.integers(0, 99))}({names[1]},{names[2]}){sp()}{lang.open}"]
    for _ in range(int(rng.integers(1, 5))):
        r = rng.random()
        if r < 0.4:
            lines.append(f"{ind}{names[0]}{sp()}{lang.assign}{sp()}{names[1]}*{int(rng.integers(2, 9))}{lang.end}")
        elif r < 0.7:
            lines.append(f"{ind}{lang.loop} {names[2]} in {names[1]} {lang.open} {lang.out}({names[2]}) {lang.close}")
        else:
            lines.append(f"{ind}{lang.comment}{_HUMAN_COMMENTS[rng.integers(len(_HUMAN_COMMENTS))]}")
    lines.append(f"{ind}{lang.out}({names[0]}){lang.end}")
    lines.append(lang.close)
    if rng.random() < 0.3:
        lines.insert(1, "")
    return "\n".join(lines)


def make_sample(lang: ToyLanguage, label: int, rng: np.random.Generator, p_mixed: float = 0.10) -> str:
    """One sample; with probability ``p_mixed`` each function flips style with probability 1/2."""
    n_funcs = int(rng.integers(1, 9))
    mixed = rng.random() < p_mixed
    sep = "\n\n" if label == 1 else "\n" * int(rng.integers(1, 4))
    parts = []
    for _ in range(n_funcs):
        style = label if not mixed or rng.random() < 0.5 else 1 - label
        parts.append((_ai_function if style == 1 else _human_function)(lang, rng))
    return sep.join(parts)


def make_corpus(languages=("Alpha", "Beta", "Gamma"), per_language: int = 600, seed: int = 0,
                prefix: str = "s", p_mixed: float = 0.10) -> list[CodeSample]:
    """Balanced toy corpus, ``per_language`` samples per language split evenly by label."""
    rng = np.random.default_rng(seed)
    out = []
    for name in languages:
        lang = TOY_LANGUAGES[name]
        for i in range(per_language):
            label = i % 2
            out.append(CodeSample(f"{prefix}-{name}-{i:05d}", make_sample(lang, label, rng, p_mixed), label, name))
    return out
