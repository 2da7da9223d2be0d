"""Line-delimited JSON protocol (v1) for out-of-process scorers.

Framing: one UTF-8 JSON object per ``\\n``-terminated line.

Parent -> child::

    {"v": 1, "classes": K}                 handshake, sent once
    {"uid": "...", "text": "..."}          one line per request
    <blank line>                           end of batch

Child -> parent::

    {"ok": true}                           handshake reply
    {"uid": "...", "probs": [p_0, ..., p_K-1]}
    <blank line>                           after the last response of a batch

Responses may come in any order; they are matched by uid. Each ``probs`` must
have K entries summing to 1 within 1e-6. The child exits 0 when its stdin closes.
"""

from __future__ import annotations

import io
import json
import math
import shlex
import subprocess
import sys
import threading
from typing import Callable, Iterable, Optional, Sequence, TextIO

import numpy as np

PROTOCOL_VERSION = 1
SUM_TOLERANCE = 1e-6


class ProtocolError(RuntimeError):
    """A scorer violated the wire protocol; the message names the uid or line."""


def _validate_probs(uid: str, probs, num_classes: int) -> list[float]:
    if not isinstance(probs, list) or len(probs) != num_classes:
        raise ProtocolError(f"uid {uid!r}: expected {num_classes} probabilities, got {probs!r}")
    out = []
    for p in probs:
        if isinstance(p, bool) or not isinstance(p, (int, float)) or not math.isfinite(p) or p < 0:
            raise ProtocolError(f"uid {uid!r}: invalid probability {p!r}")
        out.append(float(p))
    if abs(math.fsum(out) - 1.0) > SUM_TOLERANCE:
        raise ProtocolError(f"uid {uid!r}: probabilities sum to {math.fsum(out)!r}, not 1")
    return out


class ExternalScorer:
    """Parent side of the protocol, owning one child process.

    Use as a context manager; ``score`` may be called for many batches.
    """

    def __init__(self, command: str | Sequence[str], num_classes: int, timeout: Optional[float] = None):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.num_classes = num_classes
        self.timeout = timeout
        self.proc: Optional[subprocess.Popen] = None
        self._stdin: Optional[io.TextIOWrapper] = None
        self._stdout: Optional[io.TextIOWrapper] = None
        self._counter = 0

    def __enter__(self) -> "ExternalScorer":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def start(self) -> None:
        try:
            self.proc = subprocess.Popen(self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
        except OSError as exc:
            raise ProtocolError(f"cannot start scorer {self.command!r}: {exc}") from None
        # Exact framing: UTF-8, "\n" line ends, no newline translation.
        self._stdin = io.TextIOWrapper(self.proc.stdin, encoding="utf-8", newline="\n")
        self._stdout = io.TextIOWrapper(self.proc.stdout, encoding="utf-8", newline="\n")
        try:
            self._write_line({"v": PROTOCOL_VERSION, "classes": self.num_classes})
            line = self._read_line("handshake")
            try:
                reply = json.loads(line)
            except json.JSONDecodeError:
                raise ProtocolError(f"malformed handshake reply: {line!r}") from None
            if reply != {"ok": True}:
                raise ProtocolError(f"scorer rejected handshake: {line!r}")
        except BaseException:
            self._abort()
            raise

    def close(self) -> None:
        if self.proc is None:
            return
        proc, self.proc = self.proc, None
        try:
            self._stdin.close()
        except OSError:
            pass
        try:
            code = proc.wait(timeout=self.timeout or 30)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()
            raise ProtocolError("scorer did not exit after stdin was closed") from None
        finally:
            self._stdout.close()
        if code != 0:
            raise ProtocolError(f"scorer exited with status {code}")

    def _abort(self) -> None:
        proc, self.proc = self.proc, None
        if proc is not None:
            proc.kill()
            proc.wait()
            for stream in (self._stdin, self._stdout):
                try:
                    stream.close()
                except (OSError, ValueError):
                    pass

    def _write_line(self, obj) -> None:
        try:
            self._stdin.write(json.dumps(obj, ensure_ascii=False) + "\n")
            self._stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"scorer process closed its input ({exc})") from None

    def _read_line(self, context: str) -> str:
        try:
            line = self._stdout.readline()
        except UnicodeDecodeError:
            raise ProtocolError(f"scorer sent invalid UTF-8 during {context}") from None
        if line == "":
            code = self.proc.poll()
            raise ProtocolError(f"scorer process ended during {context} (exit status {code})")
        return line.rstrip("\n")

    def score(self, requests: Iterable[tuple[str, str]]) -> dict[str, np.ndarray]:
        """Score ``(uid, text)`` pairs; returns ``{uid: probs}`` for exactly those uids.

        Raises:
            ProtocolError: on a malformed line, unknown/duplicate/missing uid, a
                probability vector of the wrong size or sum, or child exit.
        """
        if self.proc is None:
            raise ProtocolError("scorer not started")
        reqs = list(requests)
        uids = [u for u, _ in reqs]
        if len(set(uids)) != len(uids):
            raise ValueError("request uids must be unique within a batch")
        pending = set(uids)
        errors: list[BaseException] = []
        stdin = self._stdin

        def feed():
            try:
                for uid, text in reqs:
                    stdin.write(json.dumps({"uid": uid, "text": text}, ensure_ascii=False) + "\n")
                stdin.write("\n")
                stdin.flush()
            except (BrokenPipeError, OSError, ValueError) as exc:
                errors.append(exc)

        writer = threading.Thread(target=feed, daemon=True)
        writer.start()
        out: dict[str, np.ndarray] = {}
        try:
            while True:
                line = self._read_line("batch")
                if line.strip() == "":
                    break
                try:
                    msg = json.loads(line)
                except json.JSONDecodeError:
                    raise ProtocolError(f"malformed response line: {line[:200]!r}") from None
                if not isinstance(msg, dict) or "uid" not in msg or "probs" not in msg:
                    raise ProtocolError(f"response line lacks uid/probs: {line[:200]!r}")
                uid = str(msg["uid"])
                if uid in out:
                    raise ProtocolError(f"duplicate response for uid {uid!r}")
                if uid not in pending:
                    raise ProtocolError(f"response for unknown uid {uid!r}")
                out[uid] = np.asarray(_validate_probs(uid, msg["probs"], self.num_classes))
                pending.discard(uid)
        except BaseException:
            # The stream is out of sync now; the child cannot be reused.
            self._abort()
            raise
        finally:
            writer.join(timeout=self.timeout)
        if pending:
            missing = sorted(pending)
            raise ProtocolError(f"no response for uid {missing[0]!r} ({len(missing)} missing)")
        if errors:
            raise ProtocolError(f"failed writing requests: {errors[0]}")
        return out

    def score_texts(self, texts: Sequence[str]) -> np.ndarray:
        base = self._counter
        self._counter += len(texts)
        uids = [f"r{base + i}" for i in range(len(texts))]
        res = self.score(zip(uids, texts))
        if not uids:
            return np.zeros((0, self.num_classes))
        return np.vstack([res[u] for u in uids])


def score_external(command: str | Sequence[str], requests: Iterable[tuple[str, str]],
                   num_classes: int) -> dict[str, np.ndarray]:
    """Start a scorer, send one batch, and shut it down.

    Returns:
        Mapping from uid to its probability row.

    Raises:
        ProtocolError: On any framing, handshake, validation or exit failure.
    """
    with ExternalScorer(command, num_classes) as scorer:
        return scorer.score(requests)


def serve(score_fn: Callable[[list[str]], Sequence[Sequence[float]]],
          stdin: TextIO = sys.stdin, stdout: TextIO = sys.stdout) -> int:
    """Child side: answer protocol batches with ``score_fn(texts) -> prob rows``."""
    header = stdin.readline()
    try:
        hello = json.loads(header)
    except json.JSONDecodeError:
        return 2
    if hello.get("v") != PROTOCOL_VERSION:
        stdout.write(json.dumps({"ok": False, "error": "unsupported version"}) + "\n")
        stdout.flush()
        return 2
    stdout.write('{"ok": true}\n')
    stdout.flush()
    batch: list[tuple[str, str]] = []
    for line in stdin:
        if line.strip():
            req = json.loads(line)
            batch.append((req["uid"], req["text"]))
            continue
        probs = score_fn([t for _, t in batch]) if batch else []
        for (uid, _), row in zip(batch, probs):
            stdout.write(json.dumps({"uid": uid, "probs": [float(p) for p in row]}) + "\n")
        stdout.write("\n")
        stdout.flush()
        batch = []
    return 0
