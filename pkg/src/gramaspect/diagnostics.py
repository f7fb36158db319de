"""Diagnostics shared by every stage of the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class SourceSpan:
    """A region of a source file, 1-based lines and columns."""

    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.start_line}:{self.start_col}"


@dataclass
class Diagnostic:
    code: str
    message: str
    severity: str = "error"
    span: SourceSpan | None = None
    path: str | None = None

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def location(self, default_file: str = "<input>") -> str:
        if self.span is not None:
            return str(self.span)
        return f"{default_file}:0:0"

    def format(self, default_file: str = "<input>") -> str:
        text = self.message
        if self.path is not None and self.path not in text:
            text = f"{text} (at {self.path})"
        return f"{self.severity.upper()} {self.code} {self.location(default_file)} {text}"

    def to_json(self, default_file: str = "<input>") -> dict:
        out = {"severity": self.severity, "code": self.code, "message": self.message}
        if self.span is not None:
            out["file"] = self.span.file
            out["line"] = self.span.start_line
            out["col"] = self.span.start_col
        else:
            out["file"] = default_file
        if self.path is not None:
            out["path"] = self.path
        return out


class DialectError(Exception):
    """Raised when an operation fails; carries one or more diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic] | Diagnostic):
        if isinstance(diagnostics, Diagnostic):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(f"{d.code}: {d.message}" for d in self.diagnostics))

    @property
    def codes(self) -> list[str]:
        return [d.code for d in self.diagnostics]


def error(code: str, message: str, span: SourceSpan | None = None, path: str | None = None) -> DialectError:
    return DialectError(Diagnostic(code, message, "error", span, path))


@dataclass
class Report:
    """Ordered collection of non-fatal findings."""

    findings: list[Diagnostic] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.findings)

    def __len__(self) -> int:
        return len(self.findings)

    def __iter__(self):
        return iter(self.findings)

    def add(self, code: str, message: str, severity: str = "error", path: str | None = None) -> None:
        self.findings.append(Diagnostic(code, message, severity, None, path))

    def codes(self) -> list[str]:
        return [f.code for f in self.findings]

    @property
    def has_errors(self) -> bool:
        return any(f.is_error for f in self.findings)
