#!/usr/bin/env python3
"""
console.py - Console output shared by lab.py, verify.py and export.py

All writes take print_lock and flush, so lines from worker threads never
interleave. ERROR and FAIL lines go to stderr.
"""

import sys
import threading
from typing import Dict, List

print_lock = threading.Lock()

# tags routed to stderr
STDERR_TAGS = ("FAIL", "ERROR")


def _tagged(tag: str, msg: str) -> str:
    return f"  {tag:<4} {msg}"


def _write(lines: List[str], to_stderr: bool = False):
    stream = sys.stderr if to_stderr else sys.stdout
    with print_lock:
        for line in lines:
            stream.write(line + "\n")
        stream.flush()


def log(level: str, msg: str):
    if level == "ERROR":
        _write([f"ERROR: {msg}"], to_stderr=True)
    else:
        _write([f"  {msg}"])


def section(title: str):
    _write([f"=== {title} ==="])


def pass_msg(msg: str):
    _write([_tagged("OK", msg)])


def info_msg(msg: str):
    _write([_tagged("INFO", msg)])


def warn_msg(msg: str):
    _write([_tagged("WARN", msg)])


def fail_msg(msg: str):
    _write([_tagged("FAIL", msg)], to_stderr=True)


class CheckLog:
    """Buffered report lines for one check, printed in one piece by emit()."""

    def __init__(self, name: str):
        self.name = name
        self.output_lines: List[str] = []
        self.counts = {"WARN": 0, "FAIL": 0}
        self.data: Dict[str, object] = {}

    def _record(self, tag: str, msg: str):
        self.output_lines.append(_tagged(tag, msg))
        if tag in self.counts:
            self.counts[tag] += 1

    @property
    def errors(self) -> int:
        return self.counts["FAIL"]

    @property
    def warnings(self) -> int:
        return self.counts["WARN"]

    @property
    def passed(self) -> bool:
        return self.errors == 0

    def pass_msg(self, msg: str):
        self._record("OK", msg)

    def info_msg(self, msg: str):
        self._record("INFO", msg)

    def warn_msg(self, msg: str):
        self._record("WARN", msg)

    def fail_msg(self, msg: str):
        self._record("FAIL", msg)

    def emit(self):
        # one lock for the whole block so parallel checks print contiguously
        with print_lock:
            for line in self.output_lines:
                stream = sys.stderr if line.split(None, 1)[0] in STDERR_TAGS else sys.stdout
                stream.write(line + "\n")
                stream.flush()


def summary(errors: int, warnings: int) -> int:
    """Print the closing block and return the exit code."""
    _write(["", "=== Summary ===", f"  Errors:   {errors}", f"  Warnings: {warnings}",
            "FAILED" if errors else "PASSED"])
    return 1 if errors else 0
