"""Diagnostics shared by the parser, type checks, and the CLI report."""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import Loc


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str      # stable machine-readable kind, e.g. "syntax", "dimension-mismatch"
    message: str
    loc: Loc | None = None
    file: str | None = None
    expected: tuple[str, ...] = field(default=())

    def render(self) -> str:
        where = ""
        if self.file is not None:
            where += self.file + ":"
        if self.loc is not None:
            where += f"{self.loc.line}:{self.loc.col}: "
        elif where:
            where += " "
        extra = ""
        if self.expected:
            extra = f" (expected {', '.join(self.expected)})"
        return f"{where}{self.severity}[{self.code}]: {self.message}{extra}"

    def with_file(self, file: str) -> "Diagnostic":
        return Diagnostic(self.severity, self.code, self.message, self.loc, file, self.expected)


def has_errors(diags) -> bool:
    return any(d.severity == "error" for d in diags)
