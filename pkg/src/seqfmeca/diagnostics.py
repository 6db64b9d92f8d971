"""Diagnostics shared by the parser, the validator and the worksheet checks."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable


class Level(str, Enum):
    ERROR = "error"
    WARNING = "warning"
    INFO = "info"


@dataclass(frozen=True, order=True)
class SourceSpan:
    """1-based line/column span; start inclusive, end exclusive."""

    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.start_line}:{self.start_col}"

    def slice(self, text: str) -> str:
        """Return the characters of ``text`` covered by this span."""
        lines = text.replace("\r\n", "\n").split("\n")
        if self.start_line == self.end_line:
            line = lines[self.start_line - 1] if self.start_line <= len(lines) else ""
            return line[self.start_col - 1:self.end_col - 1]
        out = [lines[self.start_line - 1][self.start_col - 1:]]
        for n in range(self.start_line, self.end_line - 1):
            out.append(lines[n])
        if self.end_line <= len(lines):
            out.append(lines[self.end_line - 1][:self.end_col - 1])
        return "\n".join(out)

    def to_json(self) -> dict:
        return {
            "file": self.file,
            "start": [self.start_line, self.start_col],
            "end": [self.end_line, self.end_col],
        }


@dataclass(frozen=True)
class Diagnostic:
    severity: Level
    code: str
    location: str
    text: str
    span: SourceSpan | None = None

    @property
    def is_error(self) -> bool:
        return self.severity is Level.ERROR

    def format(self) -> str:
        where = str(self.span) if self.span is not None else self.location
        return f"{where}: {self.severity.value}[{self.code}]: {self.text}"

    def to_json(self) -> dict:
        out = {
            "severity": self.severity.value,
            "code": self.code,
            "location": self.location,
            "text": self.text,
        }
        if self.span is not None:
            out["span"] = self.span.to_json()
        return out


def error(code: str, location: str, text: str, span: SourceSpan | None = None) -> Diagnostic:
    return Diagnostic(Level.ERROR, code, location, text, span)


def warning(code: str, location: str, text: str, span: SourceSpan | None = None) -> Diagnostic:
    return Diagnostic(Level.WARNING, code, location, text, span)


def info(code: str, location: str, text: str, span: SourceSpan | None = None) -> Diagnostic:
    return Diagnostic(Level.INFO, code, location, text, span)


def has_errors(diags: Iterable[Diagnostic]) -> bool:
    return any(d.is_error for d in diags)


def dumps(diags: Iterable[Diagnostic]) -> str:
    return json.dumps(
        {"schema_version": 1, "kind": "diagnostics", "diagnostics": [d.to_json() for d in diags]},
        indent=2,
    ) + "\n"
