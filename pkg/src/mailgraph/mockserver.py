"""Scripted mail-server mock for protocol tests.

A scenario file holds one connection's dialogue, one step per line:

    S: <text>     server sends <text> (the token <TAG> is replaced by
                  the tag of the most recent tagged client command)
    C: <pattern>  the next client line must match <pattern>; the token
                  <TAG> matches any IMAP tag, * any single argument

Steps play strictly in order; a mismatch records a failure naming the
scenario line number and closes the connection. When a transcript runs
out the connection is closed, which doubles as fault injection for
mid-fetch connection drops. Every client line is recorded so tests can
audit that no mutating command was ever issued.
"""
from __future__ import annotations

import socket
import threading
from dataclasses import dataclass
from pathlib import Path

MUTATING_COMMANDS = ("STORE", "EXPUNGE", "DELE", "APPEND", "COPY", "MOVE", "CREATE", "DELETE", "RENAME")


@dataclass
class Step:
    kind: str  # "S" | "C"
    text: str
    lineno: int


def load_transcript(path: str | Path) -> list[Step]:
    steps = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("S:"):
            kind, text = "S", line[2:]
        elif line.startswith("C:"):
            kind, text = "C", line[2:]
        else:
            raise ValueError(f"{path}:{lineno}: transcript lines must start with 'S:' or 'C:'")
        if text.startswith(" "):
            text = text[1:]
        steps.append(Step(kind, text, lineno))
    return steps


def pattern_matches(pattern: str, actual: str) -> bool:
    expected = pattern.split()
    got = actual.split()
    if len(expected) != len(got):
        return False
    for p, a in zip(expected, got):
        if p in ("<TAG>", "*"):
            continue
        if p != a:
            return False
    return True


class ScriptedServer:
    """Plays one transcript per accepted connection, in order."""

    def __init__(self, transcripts: list[str | Path], host: str = "127.0.0.1"):
        self.scripts = [(Path(p), load_transcript(p)) for p in transcripts]
        self.failures: list[str] = []
        self.client_lines: list[str] = []
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, 0))
        self._sock.listen(len(self.scripts) or 1)
        self.host, self.port = self._sock.getsockname()
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._closed = False

    def __enter__(self) -> "ScriptedServer":
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()

    def stop(self) -> None:
        if not self._closed:
            self._closed = True
            try:
                self._sock.close()
            except OSError:
                pass
        self._thread.join(timeout=5)

    def assert_clean(self) -> None:
        """Fail if any client line mismatched its expected pattern."""
        if self.failures:
            raise AssertionError("mock server transcript mismatches:\n" + "\n".join(self.failures))

    def mutating_client_lines(self) -> list[str]:
        found = []
        for line in self.client_lines:
            words = line.upper().split()
            if any(cmd in words for cmd in MUTATING_COMMANDS):
                found.append(line)
        return found

    def _run(self) -> None:
        for path, steps in self.scripts:
            try:
                conn, _ = self._sock.accept()
            except OSError:
                return
            try:
                self._serve(conn, path, steps)
            finally:
                try:
                    conn.shutdown(socket.SHUT_RDWR)
                except OSError:
                    pass
                conn.close()

    def _serve(self, conn: socket.socket, path: Path, steps: list[Step]) -> None:
        conn.settimeout(10)
        rfile = conn.makefile("rb")
        tag = "*"
        for step in steps:
            if step.kind == "S":
                payload = step.text.replace("<TAG>", tag)
                try:
                    conn.sendall(payload.encode("utf-8") + b"\r\n")
                except OSError:
                    self.failures.append(f"{path.name}:{step.lineno}: send failed")
                    return
                continue
            try:
                raw = rfile.readline()
            except OSError:
                raw = b""
            if not raw:
                self.failures.append(
                    f"{path.name}:{step.lineno}: connection closed, expected {step.text!r}"
                )
                return
            line = raw.rstrip(b"\r\n").decode("utf-8", "replace")
            self.client_lines.append(line)
            if not pattern_matches(step.text, line):
                self.failures.append(
                    f"{path.name}:{step.lineno}: expected {step.text!r}, got {line!r}"
                )
                return
            first = line.split(None, 1)[0] if line.split() else "*"
            tag = first
