"""Earley parser over the desugared form of a grammar.

Repetition groups are lowered to synthetic rules first; their nodes are
spliced back out of the resulting tree so children line up with the
original grammar.  Every spliced child remembers which group(s) it came
from, which the AST builder uses for list collection.

When a span has several derivations the tree prefers, at each node, the
lowest production index and then the shortest first-child span.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Union

from .._scan import Scanner
from ..diagnostics import DialectError, Diagnostic
from ..grammar import Grammar, Literal, RuleRef, TokenRef, desugar_groups
from .lexer import Token


@dataclass
class Leaf:
    token: Token
    term: int | None = None
    groups: tuple[int, ...] = ()

    @property
    def span(self) -> tuple[int, int]:
        return (self.token.start, self.token.end)


@dataclass
class RuleNode:
    rule: str
    rule_id: int
    production_id: int
    production_index: int
    children: list[ParseNode] = field(default_factory=list)
    span: tuple[int, int] = (0, 0)
    term: int | None = None
    groups: tuple[int, ...] = ()
    # group terms of this production that were spliced in, including empty ones
    spliced_groups: tuple[int, ...] = ()


ParseNode = Union[Leaf, RuleNode]


def leaves(node: ParseNode) -> list[Token]:
    if isinstance(node, Leaf):
        return [node.token]
    out = []
    for c in node.children:
        out.extend(leaves(c))
    return out


def count_nodes(node: ParseNode) -> int:
    if isinstance(node, Leaf):
        return 1
    return 1 + sum(count_nodes(c) for c in node.children)


@dataclass
class _Prod:
    lhs: str
    rhs: tuple  # ("N", name) | ("T", (is_literal, name))
    index: int  # position within its rule
    node: object
    terms: list


class Parser:
    """Compiled parser for one grammar; reusable across inputs."""

    def __init__(self, g: Grammar):
        self.grammar = g
        self.lowered = desugar_groups(g)
        self.prods: list[_Prod] = []
        self.by_lhs: dict[str, list[int]] = defaultdict(list)
        self.rules = {r.name: r for r in self.lowered.rules}
        for rule in self.lowered.rules:
            for pi, prod in enumerate(rule.productions):
                rhs = []
                for t in prod.terms:
                    if isinstance(t, RuleRef):
                        rhs.append(("N", t.name))
                    elif isinstance(t, TokenRef):
                        rhs.append(("T", (False, t.name)))
                    elif isinstance(t, Literal):
                        rhs.append(("T", (True, t.text)))
                self.by_lhs[rule.name].append(len(self.prods))
                self.prods.append(_Prod(rule.name, tuple(rhs), pi, prod, prod.terms))
        self.nullable = self._nullable()
        self.warnings: list[Diagnostic] = []

    def _nullable(self) -> set[str]:
        nullable: set[str] = set()
        changed = True
        while changed:
            changed = False
            for p in self.prods:
                if p.lhs not in nullable and all(k == "N" and s in nullable for k, s in p.rhs):
                    nullable.add(p.lhs)
                    changed = True
        return nullable

    # ------------------------------------------------------------ recognition

    def _chart(self, tokens: list[Token], start: str):
        n = len(tokens)
        sets: list[dict] = [dict() for _ in range(n + 1)]
        waiting: list[dict[str, list]] = [defaultdict(list) for _ in range(n + 1)]
        done: dict[tuple[str, int, int], set[int]] = defaultdict(set)

        def add(k: int, item: tuple[int, int, int], agenda: list | None) -> None:
            if item in sets[k]:
                return
            sets[k][item] = None
            p, dot, _ = item
            rhs = self.prods[p].rhs
            if dot < len(rhs) and rhs[dot][0] == "N":
                waiting[k][rhs[dot][1]].append(item)
            if agenda is not None:
                agenda.append(item)

        for p in self.by_lhs.get(start, ()):
            add(0, (p, 0, 0), None)
        for k in range(n + 1):
            agenda = list(sets[k])
            i = 0
            while i < len(agenda):
                p, dot, origin = agenda[i]
                i += 1
                prod = self.prods[p]
                if dot < len(prod.rhs):
                    kind, sym = prod.rhs[dot]
                    if kind == "N":
                        for q in self.by_lhs.get(sym, ()):
                            add(k, (q, 0, k), agenda)
                        if sym in self.nullable:
                            add(k, (p, dot + 1, origin), agenda)
                    elif k < n and tokens[k].terminal == sym:
                        add(k + 1, (p, dot + 1, origin), None)
                else:
                    done[(prod.lhs, origin, k)].add(prod.index)
                    for q, qdot, qorigin in list(waiting[origin].get(prod.lhs, ())):
                        add(k, (q, qdot + 1, qorigin), agenda)
        return sets, done

    def _check_start(self, start: str) -> None:
        rule = self.grammar.rule(start)
        if rule is None:
            raise DialectError(Diagnostic("E_NO_START", f"start rule {start!r} does not exist"))

    def recognize(self, tokens: list[Token], start: str) -> bool:
        self._check_start(start)
        _, done = self._chart(tokens, start)
        return (start, 0, len(tokens)) in done

    def parse(self, tokens: list[Token], start: str, text: str | None = None, file: str = "<input>") -> RuleNode:
        self._check_start(start)
        self.warnings = []
        sets, done = self._chart(tokens, start)
        n = len(tokens)
        if (start, 0, n) not in done:
            furthest = max(k for k in range(n + 1) if sets[k])
            if furthest >= n:
                where = f"token {n + 1} (end of input)"
                found = "end of input"
            else:
                where = f"token {furthest + 1}"
                found = str(tokens[furthest])
            span = None
            if text is not None:
                at = tokens[furthest].start if furthest < n else len(text)
                span = Scanner(text, file).span(at, tokens[furthest].end if furthest < n else at)
            raise DialectError(Diagnostic("E_PARSE", f"syntax error at {where}: unexpected {found}", "error", span))
        builder = _TreeBuilder(self, tokens, done)
        tree = builder.build(start)
        if builder.count(start, 0, n) > 1:
            self.warnings.append(Diagnostic("W_AMBIGUOUS", f"input has several derivations from {start!r}; "
                                            "chose lowest production index, shortest first child", "warning"))
        return tree


class _TreeBuilder:
    def __init__(self, parser: Parser, tokens: list[Token], done):
        self.p = parser
        self.tokens = tokens
        self.done = done
        self.memo: dict = {}
        self.split_fail: set = set()
        self.guard_hits = 0
        self.counts: dict = {}

    # choose one derivation per (symbol, i, j)

    def derive(self, name: str, i: int, j: int, stack: set):
        key = (name, i, j)
        if key in self.memo:
            return self.memo[key]
        if key in stack:
            self.guard_hits += 1
            return None
        stack.add(key)
        result = None
        for local in sorted(self.done.get(key, ())):
            pidx = self.p.by_lhs[name][local]
            kids = self.split(pidx, 0, i, j, stack)
            if kids is not None:
                result = (pidx, kids)
                break
        stack.discard(key)
        if result is not None:
            self.memo[key] = result
        return result

    def split(self, pidx: int, t: int, k: int, j: int, stack: set):
        rhs = self.p.prods[pidx].rhs
        if t == len(rhs):
            return [] if k == j else None
        fkey = (pidx, t, k, j)
        if fkey in self.split_fail:
            return None
        hits = self.guard_hits
        kind, sym = rhs[t]
        result = None
        if kind == "T":
            if k < j and self.tokens[k].terminal == sym:
                rest = self.split(pidx, t + 1, k + 1, j, stack)
                if rest is not None:
                    result = [("T", k)] + rest
        else:
            for e in range(k, j + 1):
                if (sym, k, e) not in self.done:
                    continue
                if self.derive(sym, k, e, stack) is None:
                    continue
                rest = self.split(pidx, t + 1, e, j, stack)
                if rest is not None:
                    result = [("N", sym, k, e)] + rest
                    break
        if result is None and hits == self.guard_hits:
            self.split_fail.add(fkey)
        return result

    # count derivations, saturating at 2

    def count(self, name: str, i: int, j: int, stack: set | None = None) -> int:
        stack = set() if stack is None else stack
        key = (name, i, j)
        if key in self.counts:
            return self.counts[key]
        if key in stack:
            # a completed item reachable from itself derives its span in unboundedly many ways
            self.guard_hits += 1
            return 2 if key in self.done else 0
        stack.add(key)
        hits = self.guard_hits
        total = 0
        for local in self.done.get(key, ()):
            pidx = self.p.by_lhs[name][local]
            total += self._count_seq(pidx, 0, i, j, stack)
            if total >= 2:
                break
        stack.discard(key)
        total = min(total, 2)
        if hits == self.guard_hits or total >= 2:
            self.counts[key] = total
        return total

    def _count_seq(self, pidx: int, t: int, k: int, j: int, stack: set) -> int:
        rhs = self.p.prods[pidx].rhs
        if t == len(rhs):
            return 1 if k == j else 0
        kind, sym = rhs[t]
        if kind == "T":
            if k < j and self.tokens[k].terminal == sym:
                return self._count_seq(pidx, t + 1, k + 1, j, stack)
            return 0
        total = 0
        for e in range(k, j + 1):
            if (sym, k, e) not in self.done:
                continue
            left = self.count(sym, k, e, stack)
            if left:
                total += left * self._count_seq(pidx, t + 1, e, j, stack)
            if total >= 2:
                return 2
        return total

    # materialise the chosen derivation, splicing synthetic rules

    def _offset(self, k: int) -> int:
        if k < len(self.tokens):
            return self.tokens[k].start
        return self.tokens[-1].end if self.tokens else 0

    def build(self, start: str) -> RuleNode:
        if self.derive(start, 0, len(self.tokens), set()) is None:
            raise DialectError(Diagnostic("E_PARSE", "no acyclic derivation found"))
        return self._node(start, 0, len(self.tokens))

    def _children(self, name: str, i: int, j: int):
        pidx, kids = self.memo[(name, i, j)]
        prod = self.p.prods[pidx]
        origins = self.p.lowered.origins
        children: list[ParseNode] = []
        spliced: list[int] = []
        for term, kid in zip(prod.terms, kids):
            term_id = origins.get(term.id, term.id)
            if kid[0] == "T":
                children.append(Leaf(self.tokens[kid[1]], term_id))
                continue
            _, sub, k, e = kid
            sub_rule = self.p.rules[sub]
            if sub_rule.synthetic:
                inner, inner_spliced = self._children(sub, k, e)
                if sub == name:
                    children.extend(inner)
                    spliced.extend(inner_spliced)
                else:
                    gid = sub_rule.origin
                    spliced.append(gid)
                    for c in inner:
                        c.groups = (gid,) + c.groups
                    children.extend(inner)
            else:
                node = self._node(sub, k, e)
                node.term = term_id
                children.append(node)
        return children, spliced

    def _node(self, name: str, i: int, j: int) -> RuleNode:
        pidx, _ = self.memo[(name, i, j)]
        prod = self.p.prods[pidx]
        rule = self.p.rules[name]
        children, spliced = self._children(name, i, j)
        return RuleNode(name, rule.id, prod.node.id, prod.index, children,
                        (self._offset(i), self._offset(i) if i == j else self.tokens[j - 1].end),
                        spliced_groups=tuple(dict.fromkeys(spliced)))


def parse_input(g: Grammar, start: str, tokens: list[Token], warnings: list | None = None) -> RuleNode:
    """Parse a token list; appends W_AMBIGUOUS to ``warnings`` when relevant."""
    parser = Parser(g)
    tree = parser.parse(tokens, start)
    if warnings is not None:
        warnings.extend(parser.warnings)
    return tree
