"""Test helpers: a small random grammar generator and a brute-force derivability oracle.

The oracle works on the original grammar (groups included) by enumerating
every bounded-length string each rule derives.  It shares no code with
desugaring or the Earley parser.
"""

from __future__ import annotations

import itertools
import random
from pathlib import Path

from gramaspect.frontend.lexer import Token
from gramaspect.grammar import (
    Grammar,
    Group,
    Literal,
    Production,
    Repetition,
    Rule,
    RuleRef,
    TokenDef,
    TokenRef,
)

DATA = Path(__file__).parent / "data"

TOKENS = {"A": "a", "B": "b", "C": "c"}
LITERALS = ["+", "(", ")"]


def read(name: str) -> str:
    return (DATA / name).read_text(encoding="utf-8")


def random_grammar(rng: random.Random, max_rules: int = 8, max_depth: int = 3,
                   tokens=("A", "B", "C"), literals=("+", "(", ")")) -> Grammar:
    g = Grammar()
    for name in tokens:
        g.token_defs.append(TokenDef(name, TOKENS[name], False, g.new_id()))
    names = [f"r{i}" for i in range(rng.randint(1, max_rules))]

    def term(depth: int):
        roll = rng.random()
        if roll < 0.35:
            return TokenRef(rng.choice(tokens), g.new_id())
        if roll < 0.5 and literals:
            return Literal(rng.choice(literals), g.new_id())
        if roll < 0.8 or depth >= max_depth:
            return RuleRef(rng.choice(names), g.new_id())
        gid = g.new_id()
        body = [term(depth + 1) for _ in range(rng.randint(1, 2))]
        return Group(body, rng.choice(list(Repetition)), gid)

    for name in names:
        rid = g.new_id()
        prods = []
        for _ in range(rng.randint(1, 3)):
            pid = g.new_id()
            prods.append(Production([term(1) for _ in range(rng.randint(0, 3))], pid))
        g.rules.append(Rule(name, prods, rid))
    return g


def terminal_alphabet(g: Grammar) -> list[tuple[bool, str]]:
    """Terminals the grammar mentions, as (is_literal, name) pairs."""
    found = set()
    for node, _ in g.walk():
        if isinstance(node, TokenRef):
            found.add((False, node.name))
        elif isinstance(node, Literal):
            found.add((True, node.text))
    return sorted(found)


def words(alphabet, max_len: int):
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


def as_tokens(word) -> list[Token]:
    out = []
    pos = 0
    for is_lit, name in word:
        lexeme = name if is_lit else TOKENS.get(name, name.lower())
        out.append(Token(name, lexeme, pos, pos + len(lexeme), literal=is_lit))
        pos += len(lexeme)
    return out


class Oracle:
    """Enumerates, per rule, every terminal string of length <= ``max_len`` it derives.

    Languages are kept bucketed by length and grown to a fixpoint; groups are
    expanded directly (``*`` as a bounded Kleene closure).  Acceptance is
    then set membership.
    """

    def __init__(self, g: Grammar, max_len: int = 6):
        self.g = g
        self.max_len = max_len
        self.lang: dict[str, dict[int, set]] = {r.name: {} for r in g.rules}
        changed = True
        while changed:
            changed = False
            for rule in g.rules:
                current = self.lang[rule.name]
                for p in rule.productions:
                    for n, ws in self.seq(p.terms).items():
                        bucket = current.setdefault(n, set())
                        before = len(bucket)
                        bucket |= ws
                        changed |= len(bucket) != before

    def accepts(self, start: str, word) -> bool:
        word = tuple(word)
        return word in self.lang.get(start, {}).get(len(word), ())

    def concat(self, xs: dict[int, set], ys: dict[int, set]) -> dict[int, set]:
        out: dict[int, set] = {}
        for la, wa in xs.items():
            for lb, wb in ys.items():
                if la + lb <= self.max_len and wa and wb:
                    out.setdefault(la + lb, set()).update(a + b for a in wa for b in wb)
        return out

    def seq(self, terms) -> dict[int, set]:
        result: dict[int, set] = {0: {()}}
        for t in terms:
            result = self.concat(result, self.term(t))
        return result

    def term(self, t) -> dict[int, set]:
        if isinstance(t, TokenRef):
            return {1: {((False, t.name),)}}
        if isinstance(t, Literal):
            return {1: {((True, t.text),)}}
        if isinstance(t, RuleRef):
            return self.lang.get(t.name, {})
        body = self.seq(t.body)
        if t.rep is Repetition.ONE:
            return body
        if t.rep is Repetition.OPT:
            return _union({0: {()}}, body)
        star = self.star(body)
        if t.rep is Repetition.STAR:
            return star
        return self.concat(body, star)

    def star(self, body: dict[int, set]) -> dict[int, set]:
        closure: dict[int, set] = {0: {()}}
        while True:
            grown = _union(closure, self.concat(closure, body))
            if _size(grown) == _size(closure):
                return closure
            closure = grown


def _union(a: dict[int, set], b: dict[int, set]) -> dict[int, set]:
    out = {n: set(ws) for n, ws in a.items()}
    for n, ws in b.items():
        out.setdefault(n, set()).update(ws)
    return out


def _size(lang: dict[int, set]) -> int:
    return sum(len(ws) for ws in lang.values())
