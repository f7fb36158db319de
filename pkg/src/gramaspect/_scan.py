"""Character scanner used by the grammar and aspect readers."""

from __future__ import annotations

import bisect
import re

from .diagnostics import DialectError, Diagnostic, SourceSpan

_WS = re.compile(r"(?:\s+|//[^\n]*)*")
IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
RULE_NAME = re.compile(r"[a-z][a-zA-Z0-9_]*\Z")
TOKEN_NAME = re.compile(r"[A-Z][A-Z0-9_]*\Z")
_LITERAL_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", "'": "'", '"': '"'}


class Scanner:
    """Scans ``text[start:end]``; spans are reported against the whole text."""

    def __init__(self, text: str, file: str = "<input>", start: int = 0, end: int | None = None):
        self.text = text
        self.file = file
        self.pos = start
        self.end = len(text) if end is None else end
        self._line_starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def line_col(self, offset: int) -> tuple[int, int]:
        line = bisect.bisect_right(self._line_starts, offset) - 1
        return line + 1, offset - self._line_starts[line] + 1

    def span(self, start: int, end: int | None = None) -> SourceSpan:
        end = self.pos if end is None else end
        sl, sc = self.line_col(start)
        el, ec = self.line_col(max(start, end))
        return SourceSpan(self.file, sl, sc, el, ec)

    def fail(self, message: str, code: str = "E_SYNTAX", at: int | None = None) -> DialectError:
        at = self.pos if at is None else at
        at = min(at, len(self.text))
        return DialectError(Diagnostic(code, message, "error", self.span(at, at)))

    def skip(self) -> None:
        m = _WS.match(self.text, self.pos, self.end)
        self.pos = m.end()

    def at_end(self) -> bool:
        self.skip()
        return self.pos >= self.end

    def peek(self, s: str) -> bool:
        self.skip()
        return self.text.startswith(s, self.pos) and self.pos + len(s) <= self.end

    def accept(self, s: str) -> bool:
        if self.peek(s):
            self.pos += len(s)
            return True
        return False

    def expect(self, s: str, what: str | None = None) -> None:
        if not self.accept(s):
            raise self.fail(f"expected {what or repr(s)}, found {self.describe()}")

    def match(self, pattern: re.Pattern) -> str | None:
        self.skip()
        m = pattern.match(self.text, self.pos, self.end)
        if m is None:
            return None
        self.pos = m.end()
        return m.group(0)

    def peek_ident(self) -> str | None:
        self.skip()
        m = IDENT.match(self.text, self.pos, self.end)
        return m.group(0) if m else None

    def describe(self) -> str:
        self.skip()
        if self.pos >= self.end:
            return "end of input"
        m = IDENT.match(self.text, self.pos, self.end)
        if m:
            return repr(m.group(0))
        return repr(self.text[self.pos])

    def quoted(self) -> str:
        """Read a quoted string (``'...'`` or ``"..."``) and return its decoded text."""
        self.skip()
        start = self.pos
        quote = self.text[self.pos]
        i = self.pos + 1
        out = []
        while True:
            if i >= self.end or self.text[i] == "\n":
                raise self.fail("unterminated string", at=start)
            c = self.text[i]
            if c == quote:
                break
            if c == "\\":
                if i + 1 >= self.end:
                    raise self.fail("unterminated string", at=start)
                esc = self.text[i + 1]
                if esc not in _LITERAL_ESCAPES:
                    raise self.fail(f"unknown escape \\{esc}", at=i)
                out.append(_LITERAL_ESCAPES[esc])
                i += 2
                continue
            out.append(c)
            i += 1
        self.pos = i + 1
        return "".join(out)


def quote_literal(text: str, quote: str = "'") -> str:
    out = []
    for c in text:
        if c == "\\":
            out.append("\\\\")
        elif c == quote:
            out.append("\\" + quote)
        elif c == "\n":
            out.append("\\n")
        elif c == "\t":
            out.append("\\t")
        elif c == "\r":
            out.append("\\r")
        else:
            out.append(c)
    return quote + "".join(out) + quote
