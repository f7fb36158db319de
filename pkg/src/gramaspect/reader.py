"""Reader for ``.gram`` grammar files.

File layout::

    tokens {
        INT : /[0-9]+/ ;
        WS  : /[ \\t\\n]+/ skip ;
    }

    sum : mult ('+' mult)* ;
    factor
        : INT
        : '(' sum ')'
        ;

Rule names are lowercase, token names uppercase.  Each production starts
with ``:`` (``|`` is accepted as a synonym after the first one) and a bare
``:`` is an empty production.  ``//`` starts a line comment.
"""

from __future__ import annotations

import re

from ._scan import RULE_NAME, TOKEN_NAME, Scanner
from .diagnostics import DialectError, Diagnostic
from .grammar import (
    Grammar,
    Group,
    Literal,
    Production,
    Repetition,
    Rule,
    RuleRef,
    Term,
    TokenDef,
    TokenRef,
)

_REPS = {"*": Repetition.STAR, "+": Repetition.PLUS, "?": Repetition.OPT}
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def validate_pattern(pattern: str) -> str | None:
    """Return an error message if ``pattern`` is outside the supported regex subset."""
    if not pattern:
        return "empty pattern"
    i = 0
    in_class = False
    class_start = 0
    while i < len(pattern):
        c = pattern[i]
        if c == "\\":
            if i + 1 >= len(pattern):
                return "trailing backslash"
            nxt = pattern[i + 1]
            if not in_class and (nxt.isdigit() or nxt in "kgAZbB"):
                return f"unsupported escape \\{nxt}"
            i += 2
            continue
        if in_class:
            if c == "]" and i > class_start:
                in_class = False
        elif c == "[":
            in_class = True
            class_start = i + 1
            if pattern[class_start:class_start + 1] == "^":
                class_start += 1
        elif c == "(" and pattern[i + 1:i + 2] == "?":
            return "extension groups '(?...)' are not supported"
        elif c in "{}":
            return "counted repetition is not supported"
        elif c in "^$":
            return "anchors are not supported"
        i += 1
    try:
        compiled = re.compile(pattern)
    except re.error as exc:
        return str(exc)
    if compiled.fullmatch(""):
        return "pattern matches the empty string"
    return None


class GrammarReader:
    """Recursive-descent reader; also parses aspect fragments against an existing grammar."""

    def __init__(self, scanner: Scanner, grammar: Grammar):
        self.s = scanner
        self.g = grammar

    # -- top level

    def read_file(self) -> Grammar:
        s = self.s
        if s.peek_ident() == "tokens":
            save = s.pos
            s.match(_NAME)
            if s.peek("{"):
                self.read_tokens_block()
            else:
                s.pos = save
        while not s.at_end():
            self.g.rules.append(self.read_rule())
        return self.g

    def read_tokens_block(self) -> None:
        s = self.s
        s.expect("{")
        while not s.accept("}"):
            if s.at_end():
                raise s.fail("expected '}' closing the tokens block, found end of input")
            self.g.token_defs.append(self.read_token_def())

    def read_token_def(self) -> TokenDef:
        s = self.s
        s.skip()
        start = s.pos
        name = s.match(_NAME)
        if name is None or not TOKEN_NAME.match(name):
            raise s.fail(f"expected an uppercase token name, found {_found(s, name, start)}", at=start)
        s.expect(":")
        pattern = self.read_regex()
        skip = False
        if s.peek_ident() == "skip":
            s.match(_NAME)
            skip = True
        s.expect(";")
        return TokenDef(name, pattern, skip, self.g.new_id(), s.span(start))

    def read_regex(self) -> str:
        s = self.s
        s.skip()
        start = s.pos
        if not s.peek("/"):
            raise s.fail(f"expected a /regex/ pattern, found {s.describe()}")
        i = start + 1
        while True:
            if i >= s.end or s.text[i] == "\n":
                raise s.fail("unterminated regex", at=start)
            c = s.text[i]
            if c == "\\":
                i += 2
                continue
            if c == "/":
                break
            i += 1
        pattern = s.text[start + 1:i]
        s.pos = i + 1
        problem = validate_pattern(pattern)
        if problem:
            raise s.fail(f"invalid token pattern /{pattern}/: {problem}", code="E_BAD_REGEX", at=start)
        return pattern

    def read_rule(self) -> Rule:
        s = self.s
        s.skip()
        start = s.pos
        name = s.match(_NAME)
        if name is None or not RULE_NAME.match(name):
            raise s.fail(f"expected a lowercase rule name, found {_found(s, name, start)}", at=start)
        rule_id = self.g.new_id()
        if not s.peek(":"):
            raise s.fail(f"expected ':' starting a production of {name!r}, found {s.describe()}")
        productions = self.read_productions(first_separators=(":",))
        s.expect(";", "';' ending rule " + repr(name))
        return Rule(name, productions, rule_id, s.span(start))

    def read_productions(self, first_separators=(":",)) -> list[Production]:
        s = self.s
        productions = []
        separators = first_separators
        while True:
            s.skip()
            start = s.pos
            if not any(s.accept(sep) for sep in separators):
                break
            separators = (":", "|")
            pid = self.g.new_id()
            terms = self.read_terms(stop=(";", ":", "|"))
            productions.append(Production(terms, pid, s.span(start)))
        return productions

    def read_terms(self, stop: tuple[str, ...]) -> list[Term]:
        s = self.s
        terms = []
        while not s.at_end() and not any(s.peek(x) for x in stop):
            terms.append(self.read_term())
        return terms

    def read_term(self) -> Term:
        s = self.s
        s.skip()
        start = s.pos
        if s.accept("("):
            gid = self.g.new_id()
            body = self.read_terms(stop=(")", ";", ":", "|"))
            if not body:
                raise s.fail("empty group", at=start)
            s.expect(")")
            rep = self.read_rep()
            return Group(body, rep, gid, s.span(start))
        if s.peek("'") or s.peek('"'):
            text = s.quoted()
            if not text:
                raise s.fail("empty literal", at=start)
            term: Term = Literal(text, self.g.new_id(), s.span(start))
        else:
            name = s.match(_NAME)
            if name is None:
                raise s.fail(f"expected a term, found {s.describe()}")
            if TOKEN_NAME.match(name):
                term = TokenRef(name, self.g.new_id(), s.span(start))
            elif RULE_NAME.match(name):
                term = RuleRef(name, self.g.new_id(), s.span(start))
            else:
                raise s.fail(f"{name!r} is neither a token name (UPPERCASE) nor a rule name (lowercase)", at=start)
        rep = self.read_rep()
        if rep is Repetition.ONE:
            return term
        # X* is shorthand for (X)*
        return Group([term], rep, self.g.new_id(), s.span(start))

    def read_rep(self) -> Repetition:
        s = self.s
        # repetition suffix must follow immediately
        if s.pos < s.end and s.text[s.pos] in _REPS:
            c = s.text[s.pos]
            s.pos += 1
            return _REPS[c]
        return Repetition.ONE


def _found(s: Scanner, name: str | None, start: int) -> str:
    if name is not None:
        return repr(name)
    s.pos = start
    return s.describe()


def parse_grammar(text: str, file: str = "<input>") -> Grammar:
    """Parse grammar source text; raises DialectError with E_SYNTAX/E_BAD_REGEX."""
    reader = GrammarReader(Scanner(text, file), Grammar())
    try:
        return reader.read_file()
    except RecursionError:
        raise DialectError(Diagnostic("E_SYNTAX", "nesting too deep", "error", reader.s.span(reader.s.pos))) from None


def read_grammar_file(path) -> Grammar:
    with open(path, encoding="utf-8") as fh:
        return parse_grammar(fh.read(), str(path))


# ---------------------------------------------------------------- fragments

def _fragment_reader(g: Grammar, scanner: Scanner) -> GrammarReader:
    return GrammarReader(scanner, g)


def parse_term_fragment(g: Grammar, scanner: Scanner) -> list[Term]:
    """Nonempty term sequence; new nodes take ids from ``g``."""
    r = _fragment_reader(g, scanner)
    terms = r.read_terms(stop=(";", ":", "|"))
    if not scanner.at_end():
        raise scanner.fail(f"unexpected {scanner.describe()} in term fragment", code="E_FRAGMENT_KIND")
    if not terms:
        raise scanner.fail("term fragment is empty", code="E_FRAGMENT_KIND")
    return terms


def parse_production_fragment(g: Grammar, scanner: Scanner) -> list[Production]:
    """One or more ``: terms`` productions."""
    r = _fragment_reader(g, scanner)
    if not scanner.peek(":"):
        raise scanner.fail("production fragment must start with ':'", code="E_FRAGMENT_KIND")
    prods = r.read_productions()
    if not scanner.at_end():
        raise scanner.fail(f"unexpected {scanner.describe()} in production fragment", code="E_FRAGMENT_KIND")
    return prods


def parse_rule_fragment(g: Grammar, scanner: Scanner) -> list[Rule]:
    """One or more complete rule definitions."""
    r = _fragment_reader(g, scanner)
    rules = []
    while not scanner.at_end():
        name = scanner.peek_ident()
        if name is None or not RULE_NAME.match(name):
            raise scanner.fail(f"rule fragment must contain rule definitions, found {scanner.describe()}",
                               code="E_FRAGMENT_KIND")
        rules.append(r.read_rule())
    if not rules:
        raise scanner.fail("rule fragment is empty", code="E_FRAGMENT_KIND")
    return rules
