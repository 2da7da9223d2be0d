import shlex
import sys
from pathlib import Path

import numpy as np
import pytest

STUB = Path(__file__).parent / "stubs" / "stub_scorer.py"


def stub_command(mode: str = "echo") -> str:
    return f"{shlex.quote(sys.executable)} {shlex.quote(str(STUB))} {mode}"


class CountingScorer:
    """In-process scorer returning a fixed distribution and counting texts scored."""

    def __init__(self, probs, calls_per_batch=True):
        self.probs = np.asarray(probs, dtype=np.float64)
        self.num_classes = len(self.probs)
        self.calls = 0
        self.texts: list[str] = []

    def score_texts(self, texts):
        self.calls += 1
        self.texts.extend(texts)
        return np.tile(self.probs, (len(texts), 1))


@pytest.fixture
def stub_cmd():
    return stub_command


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("tests.test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n, (ok, detail) in sorted(acceptance.RESULTS.items()):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {detail}")
