"""Shared exception types and source-position diagnostics."""

from __future__ import annotations

from dataclasses import dataclass


class ParmodelError(Exception):
    """Base class for all toolkit errors."""


class TopologyError(ParmodelError):
    """Raised when a topology specification cannot be realized as a graph."""


class EvalError(ParmodelError):
    """Raised when an expression cannot be evaluated to a finite non-negative number."""


class SimulationError(ParmodelError):
    """Raised when a run cannot complete (unmatched messages, bad expressions)."""


@dataclass(frozen=True)
class Diagnostic:
    """One parser or validator finding, anchored to a 1-based source position."""

    severity: str  # "error" | "warning"
    message: str
    line: int = 1
    column: int = 1

    def render(self, path: str = "<model>") -> str:
        return f"{self.severity.upper()} {path}:{self.line}:{self.column} {self.message}"


def error(message: str, line: int = 1, column: int = 1) -> Diagnostic:
    return Diagnostic("error", message, line, column)


def warning(message: str, line: int = 1, column: int = 1) -> Diagnostic:
    return Diagnostic("warning", message, line, column)
