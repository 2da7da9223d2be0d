"""Rule-based programming language detector.

Each language owns a table of weighted regex rules. A language's score is the
sum of weights of the rules that fire anywhere in the text; the winner needs at
least ``MIN_HITS`` distinct rule hits, otherwise the result is ``Unknown``.
"""

from __future__ import annotations

import re
from enum import Enum


class LanguageTag(str, Enum):
    PYTHON = "Python"
    CPP = "Cpp"
    JAVA = "Java"
    JAVASCRIPT = "JavaScript"
    GO = "Go"
    PHP = "PHP"
    CSHARP = "CSharp"
    C = "C"
    UNKNOWN = "Unknown"

    @classmethod
    def parse(cls, name: str) -> "LanguageTag":
        """Map dataset spellings (``"C++"``, ``"c#"``, ``"js"``...) to a tag.

        ``Unknown`` is a detector output only and is rejected here.
        """
        key = name.strip().lower()
        tag = _ALIASES.get(key)
        if tag is None:
            raise ValueError(f"unrecognized language {name!r}")
        return tag


_ALIASES = {
    "python": LanguageTag.PYTHON, "py": LanguageTag.PYTHON,
    "cpp": LanguageTag.CPP, "c++": LanguageTag.CPP, "cxx": LanguageTag.CPP,
    "java": LanguageTag.JAVA,
    "javascript": LanguageTag.JAVASCRIPT, "js": LanguageTag.JAVASCRIPT,
    "go": LanguageTag.GO, "golang": LanguageTag.GO,
    "php": LanguageTag.PHP,
    "csharp": LanguageTag.CSHARP, "c#": LanguageTag.CSHARP, "cs": LanguageTag.CSHARP,
    "c": LanguageTag.C,
}

MIN_HITS = 2

_M = re.MULTILINE

_INCLUDE = (r"^\s*#\s*include\s*[<\"]", 2)

_RULES: dict[LanguageTag, list[tuple[str, int]]] = {
    LanguageTag.PYTHON: [
        (r"^\s*(async\s+)?def \w+\s*\(.*\)\s*(->\s*[^:\n]+)?:\s*$", 3),
        (r"^\s*(if|elif|else|for|while|try|except|finally|with|class)\b[^{};\n]*:\s*$", 1),
        (r"\bself\b(?!::)", 1),
        (r"^\s*(from\s+[\w.]+\s+import\b|import\s+[\w.]+(\s+as\s+\w+)?(\s*,\s*[\w.]+)*\s*$)", 2),
        (r"\bprint\(", 1),
        (r"\belif\b", 2),
        (r"__name__|__init__|__main__", 2),
        (r"\b(None|True|False)\b", 1),
        (r"^\s+return\b[^;{}\n]*$", 1),
        (r"\blambda\s+\w*\s*:", 1),
        (r"\bnot in\b|\bis not\b", 2),
        (r"\[[^\]\n]+ for \w+ in [^\]\n]+\]", 2),
        (r"\b(range|input|len)\(", 1),
        (r"\.split\(\)", 1),
    ],
    LanguageTag.CPP: [
        _INCLUDE,
        (r"\bstd::", 3),
        (r"\btemplate\s*<", 3),
        (r"\busing namespace std\b", 3),
        (r"\b(cout|cin|endl|cerr)\b", 2),
        (r"#\s*include\s*<(iostream|vector|string|map|set|algorithm|memory|bits/stdc\+\+\.h|unordered_map|queue)>", 3),
        (r"\bnullptr\b", 2),
        (r"\b(vector|map|set|unique_ptr|shared_ptr)<", 2),
        (r"\bauto\s+\w+\s*=", 1),
        (r"\bint main\s*\(", 1),
        (r"\w::\w", 1),
        (r"\bclass \w+\s*(:\s*public\b[^{]*)?\{", 1),
        (r"\btypename\b", 2),
        (r"^\s*(public|private|protected):\s*$", 2),
        (r"\bvirtual\b|=\s*(default|delete)\s*;", 2),
        (r"\)\s*const\b", 1),
    ],
    LanguageTag.C: [
        _INCLUDE,
        (r"#\s*include\s*<\w+\.h>", 2),
        (r"\bprintf\s*\(", 2),
        (r"\b(malloc|calloc|realloc|free)\s*\(", 2),
        (r"\bscanf\s*\(", 2),
        (r"\bint main\s*\(", 1),
        (r"\bstruct \w+", 1),
        (r"^\s*#\s*define\b", 1),
        (r"\bNULL\b", 1),
        (r"\bchar\s*\*", 1),
    ],
    LanguageTag.JAVA: [
        (r"\bpublic\s+(final\s+|abstract\s+)?class\b", 3),
        (r"\bSystem\.(out|err)\.print", 3),
        (r"\bpublic static void main\s*\(\s*String", 3),
        (r"^\s*import java\.", 3),
        (r"^\s*package [\w.]+;", 2),
        (r"@Override\b", 2),
        (r"\bString\[\]", 1),
        (r"\b(ArrayList|HashMap|HashSet|LinkedList)<", 2),
        (r"\b(private|public|protected)\s+(static\s+)?(final\s+)?[\w<>\[\]]+\s+\w+\s*[(;=]", 1),
        (r"\b(extends|implements)\s+\w+", 1),
        (r"\bfinal\s+\w+", 1),
        (r"\bthrows\s+\w+", 2),
        (r"\bpublic\s+(static\s+)?(final\s+)?[\w<>\[\]]+\s+[a-z]\w*\s*\(", 2),
        (r"\bpublic (interface|enum) [A-Z]\w*\s*\{", 2),
        (r"^\s+[\w<>\[\]]+ [a-z]\w*\([^)]*\);", 1),
        (r"\benum \w+\s*\{\s*[A-Z][A-Z0-9_]*(\s*,\s*[A-Z][A-Z0-9_]*)*\s*\}", 1),
        (r"\b(Thread\.sleep|Integer\.parseInt|Arrays\.|Collections\.)", 2),
        (r"\bcatch\s*\(\s*\w*Exception \w+\)", 1),
    ],
    LanguageTag.GO: [
        (r"^\s*package \w+\s*$", 3),
        (r"\bfunc\s+(\(\s*\w+\s+\*?\w+\s*\)\s*)?\w+\s*\(", 3),
        (r":=", 2),
        (r"^\s*import\s*\(\s*$|^\s*import\s+\"", 2),
        (r"\bfmt\.", 3),
        (r"\bchan\b|\bgo func\b|\bdefer\b", 2),
        (r"\berr != nil\b", 3),
        (r"\[\]\w+\{", 1),
        (r"\bfunc\s*\(", 1),
        (r"^\s*type \w+ (struct|interface)\s*\{", 3),
        (r"\b(float64|float32|int64|int32|uint8|rune)\b", 1),
    ],
    LanguageTag.PHP: [
        (r"<\?php", 5),
        (r"\$\w+", 1),
        (r"\becho\b", 1),
        (r"\?>", 2),
        (r"\bfunction\s+\w+\s*\(\s*(\??\w+\s+)?\$", 2),
        (r"\$this->", 3),
        (r"\barray\s*\(", 2),
        (r"\bforeach\s*\(\s*\$\w+\s+as\b", 3),
        (r"^\s*namespace \w+(\\\w+)+;", 2),
        (r"^\s*use \w+(\\\w+)+;", 2),
    ],
    LanguageTag.CSHARP: [
        (r"^\s*using System\b", 3),
        (r"^\s*namespace [\w.]+", 2),
        (r"\bConsole\.Write", 3),
        (r"\bstatic (async )?(void|int|Task) Main\b", 3),
        (r"\{\s*get;\s*(private\s+)?(set;)?\s*\}", 3),
        (r"\bforeach\s*\(\s*var\b", 2),
        (r"\bstring\s+\w+\s*[=;)]", 1),
        (r"\bvar \w+\s*=\s*new\b", 1),
        (r"\b(List|Dictionary|IEnumerable|Task)<", 1),
        (r"\.(Length|Count)\b", 1),
        (r"\basync Task\b|\bawait\b", 1),
        (r"\bpublic\s+(static\s+)?(class|interface|void|string|int|bool)\b", 1),
        (r"\binterface I[A-Z]\w*", 2),
        # Java generics cannot take primitive type arguments.
        (r"\b(List|Dictionary|IEnumerable|HashSet)<(string|int|bool|double)\b", 2),
        (r"\breadonly\b", 1),
        (r"\bpublic\s+(static\s+)?(async\s+)?[\w<>\[\]]+\s+[A-Z]\w*\s*\(", 1),
    ],
    LanguageTag.JAVASCRIPT: [
        (r"\bfunction\b", 2),
        (r"=>", 1),
        (r"\bconsole\.", 3),
        (r"\b(const|let)\s+\w+\s*=", 2),
        (r"\bvar \w+\s*=", 1),
        (r"\brequire\(", 2),
        (r"\bmodule\.exports\b|^\s*export\s+(default|const|function|class)\b", 3),
        (r"\b(document|window)\.", 3),
        (r"===|!==", 2),
        (r"\bundefined\b", 2),
        (r"\.then\(", 1),
        (r"^\s*import .* from ['\"]", 3),
        (r"['\"][\w./-]+\.js['\"]", 2),
        (r"^\s*\w+:[ \t]+['\"\d\[{]", 1),
    ],
}

_COMPILED = {
    lang: [(re.compile(pat, _M), w) for pat, w in rules] for lang, rules in _RULES.items()
}

# Order fixes the tie-break between equal scores.
_ORDER = [
    LanguageTag.PYTHON, LanguageTag.JAVA, LanguageTag.CPP, LanguageTag.C, LanguageTag.GO,
    LanguageTag.PHP, LanguageTag.CSHARP, LanguageTag.JAVASCRIPT,
]

_CPP_MARKERS = re.compile(
    r"std::|\btemplate\b|\bclass |\bnew |\busing namespace std\b|\b(cout|cin)\b|#\s*include\s*<iostream>"
)


def score_languages(text: str) -> dict[LanguageTag, tuple[int, int]]:
    """Return ``{language: (score, hits)}`` for every known language."""
    out = {}
    for lang in _ORDER:
        score = hits = 0
        for rx, w in _COMPILED[lang]:
            if rx.search(text):
                score += w
                hits += 1
        out[lang] = (score, hits)
    return out


def detect_language(text: str) -> LanguageTag:
    """Best-scoring language, or ``LanguageTag.UNKNOWN`` under two rule hits."""
    scores = score_languages(text)
    best = max(_ORDER, key=lambda lang: (scores[lang][0], -_ORDER.index(lang)))
    score, hits = scores[best]
    if score == 0 or hits < MIN_HITS:
        return LanguageTag.UNKNOWN
    if best in (LanguageTag.C, LanguageTag.CPP):
        return LanguageTag.CPP if _CPP_MARKERS.search(text) else LanguageTag.C
    return best
