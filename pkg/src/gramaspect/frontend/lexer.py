"""Longest-match lexer driven by a grammar's token block and literals."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .._scan import Scanner
from ..diagnostics import DialectError, Diagnostic
from ..grammar import Grammar, Literal


@dataclass(frozen=True)
class Token:
    name: str  # token name, or the literal text for literals
    lexeme: str
    start: int
    end: int
    literal: bool = False
    skipped: bool = False

    @property
    def terminal(self) -> tuple[bool, str]:
        return (self.literal, self.name)

    def __str__(self) -> str:
        if self.literal:
            return repr(self.lexeme)
        return f"{self.name} {self.lexeme!r}"


def grammar_literals(g: Grammar) -> list[str]:
    return sorted({n.text for n, _ in g.walk() if isinstance(n, Literal)})


class Lexer:
    def __init__(self, g: Grammar):
        self.literals = grammar_literals(g)
        self.defs = [(td.name, re.compile(td.pattern), td.skip) for td in g.token_defs]

    def tokenize(self, text: str, keep_skipped: bool = False, file: str = "<input>") -> list[Token]:
        tokens = []
        pos = 0
        while pos < len(text):
            best = None  # (length, priority, token)
            for lit in self.literals:
                if text.startswith(lit, pos):
                    cand = (len(lit), 0, Token(lit, lit, pos, pos + len(lit), literal=True))
                    if best is None or cand[:2] > best[:2]:
                        best = cand
            for order, (name, rx, skip) in enumerate(self.defs):
                m = rx.match(text, pos)
                if m is None or m.end() == pos:
                    continue
                length = m.end() - pos
                # literal beats named on equal length, then declaration order
                if best is None or length > best[0]:
                    best = (length, -1 - order, Token(name, m.group(0), pos, m.end(), skipped=skip))
            if best is None:
                sc = Scanner(text, file)
                line, col = sc.line_col(pos)
                raise DialectError(Diagnostic("E_LEX", f"no token matches {text[pos]!r} at line {line}, column {col}",
                                              "error", sc.span(pos, pos + 1)))
            tok = best[2]
            if keep_skipped or not tok.skipped:
                tokens.append(tok)
            pos = tok.end
        return tokens


def tokenize(g: Grammar, text: str, keep_skipped: bool = False, file: str = "<input>") -> list[Token]:
    return Lexer(g).tokenize(text, keep_skipped, file)
