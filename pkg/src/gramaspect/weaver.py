"""Pointcut matching and advice application.

Each aspect file is applied in two phases: every block is matched against a
snapshot of the incoming grammar and its action targets resolved, then the
resolved actions are applied in order to a working copy.  Material inserted
by an aspect is never re-matched by that same aspect.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Union

from .aspects import Action, AddDirective, MatchBlock, MetaBlock, SyntacticAspect, TermPattern
from .diagnostics import DialectError, Diagnostic, SourceSpan
from .grammar import (
    GRAMMAR_PATH,
    Grammar,
    Group,
    Literal,
    Node,
    Production,
    Rule,
    RuleRef,
    Term,
    TokenRef,
    check_well_formed,
    kind_of,
    term_label,
)
from .reader import parse_production_fragment, parse_rule_fragment, parse_term_fragment

Block = Union[MatchBlock, MetaBlock]


@dataclass
class MatchResult:
    block_index: int
    rule_id: int
    production_id: int
    bindings: dict[str, int]
    # (first, last+1) term positions covered by each top-level pattern element
    element_spans: list[tuple[int, int]] = field(default_factory=list)


@dataclass
class TraceRecord:
    aspect: str
    block: int
    verb: str
    target_id: int
    target_path: str
    created: list[int] = field(default_factory=list)
    new_paths: list[str] = field(default_factory=list)
    removed: list[int] = field(default_factory=list)
    removed_paths: list[str] = field(default_factory=list)
    # pre-application paths of every removed id
    old_paths: dict[int, str] = field(default_factory=dict, repr=False)

    def to_json(self) -> dict:
        return {
            "aspect": self.aspect,
            "block": self.block,
            "verb": self.verb,
            "target_path": self.target_path,
            "new_paths": self.new_paths,
            "removed_paths": self.removed_paths,
        }


@dataclass
class WeaveTrace:
    records: list[TraceRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def extend(self, other: Iterable[TraceRecord]) -> None:
        self.records.extend(other)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.to_json(), sort_keys=True) + "\n" for r in self.records)

    def removed_ids(self) -> set[int]:
        return {i for r in self.records for i in r.removed}

    def created_ids(self) -> set[int]:
        return {i for r in self.records for i in r.created}


# ---------------------------------------------------------------- matching

def _match_terms(elems: list[TermPattern], terms: list[Term], ti: int, binds: dict[str, int],
                 spans: list[tuple[int, int]] | None) -> bool:
    if not elems:
        return ti == len(terms)
    e, rest = elems[0], elems[1:]
    if e.kind == "gap":
        # non-greedy: shortest gap first
        for k in range(ti, len(terms) + 1):
            if spans is not None:
                spans.append((ti, k))
            if _match_terms(rest, terms, k, binds, spans):
                return True
            if spans is not None:
                spans.pop()
        return False
    if ti >= len(terms) or not _match_one(e, terms[ti], binds):
        return False
    added = e.binder is not None
    if added:
        binds[e.binder] = terms[ti].id
    if spans is not None:
        spans.append((ti, ti + 1))
    if _match_terms(rest, terms, ti + 1, binds, spans):
        return True
    if spans is not None:
        spans.pop()
    if added:
        del binds[e.binder]
    return False


def _match_one(e: TermPattern, term: Term, binds: dict[str, int]) -> bool:
    if e.kind == "any":
        return True
    if e.kind == "token":
        return isinstance(term, TokenRef) and term.name == e.value
    if e.kind == "rule":
        return isinstance(term, RuleRef) and term.name == e.value
    if e.kind == "literal":
        return isinstance(term, Literal) and term.text == e.value
    if e.kind == "group":
        if not isinstance(term, Group) or term.rep is not e.rep:
            return False
        inner = dict(binds)
        if not _match_terms(e.body, term.body, 0, inner, None):
            return False
        binds.update(inner)
        return True
    return False


def match_pointcut(g: Grammar, block: Block, block_index: int = 0) -> list[MatchResult]:
    """All productions matched by ``block``, in rule order then production order."""
    results = []
    for rule in g.rules:
        if rule.synthetic or (block.selector != "*" and rule.name != block.selector):
            continue
        for prod in rule.productions:
            binds: dict[str, int] = {}
            spans: list[tuple[int, int]] = []
            if _match_terms(block.pattern.elements, prod.terms, 0, binds, spans):
                binds["rule"] = rule.id
                binds["grammar"] = g.id
                if block.binder:
                    binds[block.binder] = prod.id
                results.append(MatchResult(block_index, rule.id, prod.id, binds, spans))
    return results


def _occurrences(terms: list[Term], label: str) -> list[Term]:
    found = []
    for t in terms:
        if not isinstance(t, Group) and term_label(t) == label:
            found.append(t)
        if isinstance(t, Group):
            found.extend(_occurrences(t.body, label))
    return found


def resolve_reference(g: Grammar, match: MatchResult, name: str, span: SourceSpan | None = None) -> int:
    """NodeId for ``@name``: a binding, else the unique matching term of the production."""
    if name in match.bindings:
        return match.bindings[name]
    prod = g.node(match.production_id)
    hits = _occurrences(prod.terms, name)
    path = g.path_of(prod)
    if len(hits) == 1:
        return hits[0].id
    if not hits:
        raise DialectError(Diagnostic("E_UNKNOWN_REF", f"@{name} is neither bound nor found in {path}",
                                      "error", span, path))
    raise DialectError(Diagnostic("E_AMBIGUOUS_REF",
                                  f"@{name} occurs {len(hits)} times in {path}; bind it with $v=",
                                  "error", span, path))


# ---------------------------------------------------------------- application

def _locate(g: Grammar, node_id: int) -> tuple[list, int, Node] | None:
    """(container list, index, owner) of a rule, production or term."""
    for ri, rule in enumerate(g.rules):
        if rule.id == node_id:
            return g.rules, ri, g
        for pi, prod in enumerate(rule.productions):
            if prod.id == node_id:
                return rule.productions, pi, rule
            hit = _locate_term(prod.terms, node_id, prod)
            if hit:
                return hit
    return None


def _locate_term(terms: list[Term], node_id: int, owner: Node):
    for i, t in enumerate(terms):
        if t.id == node_id:
            return terms, i, owner
        if isinstance(t, Group):
            hit = _locate_term(t.body, node_id, t)
            if hit:
                return hit
    return None


def subtree_ids(node: Node) -> list[int]:
    ids = [node.id]
    if isinstance(node, Grammar):
        for r in node.rules:
            ids.extend(subtree_ids(r))
    elif isinstance(node, Rule):
        for p in node.productions:
            ids.extend(subtree_ids(p))
    elif isinstance(node, Production):
        for t in node.terms:
            ids.extend(subtree_ids(t))
    elif isinstance(node, Group):
        for t in node.body:
            ids.extend(subtree_ids(t))
    return ids


def _parse_fragment(g: Grammar, action: Action, kind: str) -> list:
    scanner = action.fragment.scanner()
    if kind == "term":
        return parse_term_fragment(g, scanner)
    if kind == "production":
        return parse_production_fragment(g, scanner)
    return parse_rule_fragment(g, scanner)


class _Applier:
    def __init__(self, work: Grammar, aspect_name: str, snapshot_paths: dict[int, str]):
        self.g = work
        self.aspect = aspect_name
        self.snapshot_paths = snapshot_paths
        self.after_anchor: dict[int, int] = {}
        self.grammar_before = 0

    def _fail(self, code: str, message: str, action: Action | None, target_id: int) -> DialectError:
        path = self.snapshot_paths.get(target_id)
        span = action.span if action is not None else None
        return DialectError(Diagnostic(code, message, "error", span, path))

    def apply(self, block_index: int, action: Action, target_id: int) -> TraceRecord:
        g = self.g
        record = TraceRecord(self.aspect, block_index, action.verb, target_id,
                             self.snapshot_paths.get(target_id, "?"))
        if target_id == g.id:
            return self._apply_grammar(action, record)
        loc = _locate(g, target_id)
        if loc is None:
            raise self._fail("E_CONFLICT", f"@{action.target} was already replaced or removed by an earlier action",
                             action, target_id)
        container, idx, owner = loc
        node = container[idx]
        kind = kind_of(node)
        if action.verb == "remove":
            record.removed = subtree_ids(node)
            del container[idx]
            if isinstance(owner, Rule) and not container:
                raise self._fail("E_EMPTY_RULE", f"removing {record.target_path} leaves rule {owner.name!r} empty",
                                 action, target_id)
            if isinstance(owner, Group) and not container:
                raise self._fail("E_EMPTY_GROUP", f"removing {record.target_path} leaves a group empty",
                                 action, target_id)
            return record
        try:
            new = _parse_fragment(g, action, kind)
        except DialectError as exc:
            d = exc.diagnostics[0]
            if d.code == "E_FRAGMENT_KIND":
                d.message = f"fragment for @{action.target} ({kind} target): {d.message}"
            raise
        record.created = [n.id for n in new]
        if action.verb == "instead":
            record.removed = subtree_ids(node)
            container[idx:idx + 1] = new
        elif action.verb == "before":
            container[idx:idx] = new
        else:
            anchor = self.after_anchor.get(target_id, target_id)
            pos = next((i for i, n in enumerate(container) if n.id == anchor), idx)
            container[pos + 1:pos + 1] = new
            self.after_anchor[target_id] = new[-1].id
        return record

    def _apply_grammar(self, action: Action, record: TraceRecord) -> TraceRecord:
        if action.verb in ("remove", "instead"):
            raise self._fail("E_BAD_TARGET", f"cannot {action.verb} the grammar itself", action, self.g.id)
        new = _parse_fragment(self.g, action, "grammar")
        record.created = [n.id for n in new]
        if action.verb == "before":
            self.g.rules[self.grammar_before:self.grammar_before] = new
            self.grammar_before += len(new)
        else:
            self.g.rules.extend(new)
        return record

    def add(self, block_index: int, directive: AddDirective) -> TraceRecord:
        record = TraceRecord(self.aspect, block_index, "add", self.g.id, GRAMMAR_PATH)
        scanner = directive.fragment.scanner()
        new = parse_rule_fragment(self.g, scanner)
        record.created = [r.id for r in new]
        self.g.rules.extend(new)
        return record


def apply_action(g: Grammar, m: MatchResult, a: Action, aspect_name: str = "<aspect>") -> tuple[Grammar, list[TraceRecord]]:
    """Apply one action for one match to a copy of ``g``."""
    target = resolve_reference(g, m, a.target, a.span)
    work = g.copy()
    paths = {n.id: p for n, p in g.walk()}
    applier = _Applier(work, aspect_name, paths)
    record = applier.apply(m.block_index, a, target)
    record.old_paths = {i: paths[i] for i in record.removed if i in paths}
    record.removed_paths = list(record.old_paths.values())
    _finish_records(work, [record])
    return work, [record]


def _finish_records(g: Grammar, records: list[TraceRecord]) -> None:
    paths = {n.id: p for n, p in g.walk()}
    for r in records:
        r.created = [i for i in r.created if i in paths]
        r.new_paths = [paths[i] for i in r.created]


def _resolve_block(snapshot: Grammar, block: MatchBlock, bi: int):
    matches = match_pointcut(snapshot, block, bi)
    if not matches and not block.optional:
        raise DialectError(Diagnostic("E_NO_MATCH", f"block {bi} ({block.selector}) matched nothing",
                                      "error", block.span))
    resolved = []
    for m in matches:
        for a in block.actions:
            resolved.append((bi, a, resolve_reference(snapshot, m, a.target, a.span)))
    return resolved


def weave_one(g: Grammar, aspect: SyntacticAspect) -> tuple[Grammar, list[TraceRecord]]:
    snapshot = g
    steps = []
    errors: list[Diagnostic] = []
    for bi, d in enumerate(aspect.directives):
        if isinstance(d, AddDirective):
            steps.append((bi, d, None))
            continue
        try:
            steps.extend(_resolve_block(snapshot, d, bi))
        except DialectError as exc:
            errors.extend(exc.diagnostics)
    exclusive: dict[int, list[Action]] = {}
    for bi, a, target in steps:
        if target is not None and a.verb in ("instead", "remove"):
            exclusive.setdefault(target, []).append(a)
    paths = {n.id: p for n, p in snapshot.walk()}
    for target, actions in exclusive.items():
        if len(actions) > 1:
            verbs = " and ".join(a.verb for a in actions)
            errors.append(Diagnostic("E_CONFLICT", f"{paths.get(target, target)} is targeted by {verbs}",
                                     "error", actions[1].span, paths.get(target)))
    if errors:
        raise DialectError(errors)
    work = snapshot.copy()
    applier = _Applier(work, aspect.name, paths)
    records = []
    for bi, item, target in steps:
        if isinstance(item, AddDirective):
            records.append(applier.add(bi, item))
        else:
            records.append(applier.apply(bi, item, target))
    for r in records:
        # material inserted earlier in this file and removed again never existed outside it
        r.removed = [i for i in r.removed if i in paths]
        r.old_paths = {i: paths[i] for i in r.removed}
        r.removed_paths = list(r.old_paths.values())
    _finish_records(work, records)
    problems = [d for d in check_well_formed(work) if d.is_error]
    if problems:
        for d in problems:
            d.message = f"after weaving {aspect.name}: {d.message}"
        raise DialectError(problems)
    return work, records


def weave(g: Grammar, aspects: list[SyntacticAspect]) -> tuple[Grammar, WeaveTrace]:
    """Apply aspects in order, each against the result of the previous one."""
    trace = WeaveTrace()
    for aspect in aspects:
        g, records = weave_one(g, aspect)
        trace.extend(records)
    return g, trace
