"""Grammar object model.

A grammar is a list of rules, each rule a nonempty list of productions,
each production a sequence of terms.  Every object carries a NodeId that is
unique within the grammar and never reused; equality (``==``) is structural
and ignores ids and source spans.

Objects are addressed textually by ObjectPath::

    factor            the rule
    factor.p0         its first production
    sum.p0.t1.t0      first term inside the group at position 1
    $grammar          the grammar root
"""

from __future__ import annotations

import copy
import enum
import re
from dataclasses import dataclass, field
from typing import Iterator, Union

from ._scan import quote_literal
from .diagnostics import Diagnostic, SourceSpan, error

GRAMMAR_PATH = "$grammar"


class Repetition(enum.Enum):
    ONE = ""
    STAR = "*"
    PLUS = "+"
    OPT = "?"


def _id_field():
    return field(default=0, compare=False)


def _span_field():
    return field(default=None, compare=False, repr=False)


@dataclass
class TokenRef:
    name: str
    id: int = _id_field()
    span: SourceSpan | None = _span_field()


@dataclass
class Literal:
    text: str
    id: int = _id_field()
    span: SourceSpan | None = _span_field()


@dataclass
class RuleRef:
    name: str
    id: int = _id_field()
    span: SourceSpan | None = _span_field()


@dataclass
class Group:
    body: list[Term]
    rep: Repetition = Repetition.ONE
    id: int = _id_field()
    span: SourceSpan | None = _span_field()


Term = Union[TokenRef, Literal, RuleRef, Group]


@dataclass
class Production:
    terms: list[Term] = field(default_factory=list)
    id: int = _id_field()
    span: SourceSpan | None = _span_field()


@dataclass
class Rule:
    name: str
    productions: list[Production]
    id: int = _id_field()
    span: SourceSpan | None = _span_field()
    synthetic: bool = False
    # for synthetic rules: NodeId of the group they were generated from
    origin: int | None = field(default=None, compare=False)


@dataclass
class TokenDef:
    name: str
    pattern: str
    skip: bool = False
    id: int = _id_field()
    span: SourceSpan | None = _span_field()


Node = Union["Grammar", Rule, Production, TokenRef, Literal, RuleRef, Group, TokenDef]


@dataclass
class Grammar:
    rules: list[Rule] = field(default_factory=list)
    token_defs: list[TokenDef] = field(default_factory=list)
    id: int = _id_field()
    next_id: int = field(default=1, compare=False)
    # desugared grammars only: cloned term id -> id of the term it was copied from
    origins: dict[int, int] = field(default_factory=dict, compare=False, repr=False)

    def new_id(self) -> int:
        nid = self.next_id
        self.next_id += 1
        return nid

    def rule(self, name: str) -> Rule | None:
        for r in self.rules:
            if r.name == name:
                return r
        return None

    def token_def(self, name: str) -> TokenDef | None:
        for t in self.token_defs:
            if t.name == name:
                return t
        return None

    def walk(self) -> Iterator[tuple[Node, str]]:
        """Yield every addressable node with its ObjectPath, in document order."""
        yield self, GRAMMAR_PATH
        for rule in self.rules:
            yield rule, rule.name
            for pi, prod in enumerate(rule.productions):
                ppath = f"{rule.name}.p{pi}"
                yield prod, ppath
                yield from _walk_terms(prod.terms, ppath)

    def index(self) -> dict[int, tuple[Node, str]]:
        return {node.id: (node, path) for node, path in self.walk()}

    def node(self, node_id: int) -> Node | None:
        entry = self.index().get(node_id)
        return entry[0] if entry else None

    def path_of(self, node: Node | int) -> str:
        target = node if isinstance(node, int) else node.id
        for n, path in self.walk():
            if n.id == target:
                return path
        raise error("E_BAD_PATH", f"node {target} is not part of the grammar")

    def resolve(self, path: str) -> Node:
        return resolve_path(self, path)

    def copy(self) -> Grammar:
        return copy.deepcopy(self)

    def all_ids(self) -> list[int]:
        ids = [n.id for n, _ in self.walk()]
        ids.extend(t.id for t in self.token_defs)
        return ids


def _walk_terms(terms: list[Term], prefix: str) -> Iterator[tuple[Node, str]]:
    for ti, term in enumerate(terms):
        path = f"{prefix}.t{ti}"
        yield term, path
        if isinstance(term, Group):
            yield from _walk_terms(term.body, path)


def kind_of(node: Node) -> str:
    """Coarse kind used by fragments and the metadata schema."""
    if isinstance(node, Grammar):
        return "grammar"
    if isinstance(node, Rule):
        return "rule"
    if isinstance(node, Production):
        return "production"
    if isinstance(node, TokenDef):
        return "tokendef"
    return "term"


def term_label(term: Term) -> str:
    """Name a term is referred to by in aspects: token/rule name or quoted literal."""
    if isinstance(term, (TokenRef, RuleRef)):
        return term.name
    if isinstance(term, Literal):
        return quote_literal(term.text)
    return "(" + " ".join(term_label(t) for t in term.body) + ")" + term.rep.value


# ---------------------------------------------------------------- paths

_PATH_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_%]*)(?:\.p(\d+)((?:\.t\d+)*))?\Z")


def resolve_path(g: Grammar, path: str) -> Node:
    if path == GRAMMAR_PATH:
        return g
    m = _PATH_RE.match(path)
    if not m:
        raise error("E_BAD_PATH", f"malformed object path {path!r}", path=path)
    rule = g.rule(m.group(1))
    if rule is None:
        raise error("E_BAD_PATH", f"no rule named {m.group(1)!r}", path=path)
    if m.group(2) is None:
        return rule
    pi = int(m.group(2))
    if pi >= len(rule.productions):
        raise error("E_BAD_PATH", f"production index {pi} out of range", path=path)
    node: Node = rule.productions[pi]
    terms = node.terms
    for seg in m.group(3).split(".t")[1:]:
        ti = int(seg)
        if terms is None or ti >= len(terms):
            raise error("E_BAD_PATH", f"term index {ti} out of range", path=path)
        node = terms[ti]
        terms = node.body if isinstance(node, Group) else None
    return node


# ---------------------------------------------------------------- checking

def check_well_formed(g: Grammar) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    rule_names = set()
    for ri, rule in enumerate(g.rules):
        if rule.name in rule_names:
            diags.append(Diagnostic("E_DUP_RULE", f"duplicate rule {rule.name!r}", "error", rule.span, rule.name))
        rule_names.add(rule.name)
        if not rule.productions:
            diags.append(Diagnostic("E_EMPTY_RULE", f"rule {rule.name!r} has no productions", "error", rule.span, rule.name))
    token_names = set()
    for td in g.token_defs:
        if td.name in token_names:
            diags.append(Diagnostic("E_DUP_TOKEN", f"duplicate token {td.name!r}", "error", td.span))
        token_names.add(td.name)
    for node, path in g.walk():
        if isinstance(node, RuleRef) and node.name not in rule_names:
            diags.append(Diagnostic("E_UNDEF_RULE", f"reference to undefined rule {node.name!r}", "error", node.span, path))
        elif isinstance(node, TokenRef) and node.name not in token_names:
            diags.append(Diagnostic("E_UNDEF_TOKEN", f"reference to undefined token {node.name!r}", "error", node.span, path))
    return diags


# ---------------------------------------------------------------- printing

def format_term(term: Term) -> str:
    if isinstance(term, Literal):
        return quote_literal(term.text)
    if isinstance(term, Group):
        return "(" + " ".join(format_term(t) for t in term.body) + ")" + term.rep.value
    return term.name


def format_production(prod: Production) -> str:
    body = " ".join(format_term(t) for t in prod.terms)
    return f": {body}" if body else ":"


def format_rule(rule: Rule) -> str:
    if len(rule.productions) == 1:
        body = " ".join(format_term(t) for t in rule.productions[0].terms)
        return f"{rule.name} : {body} ;\n" if body else f"{rule.name} : ;\n"
    lines = [rule.name]
    lines.extend("    " + format_production(p) for p in rule.productions)
    lines.append("    ;")
    return "\n".join(lines) + "\n"


def format_token_def(td: TokenDef) -> str:
    suffix = " skip" if td.skip else ""
    return f"{td.name} : /{td.pattern}/{suffix} ;"


def pretty_print(g: Grammar) -> str:
    parts = []
    if g.token_defs:
        block = ["tokens {"]
        block.extend("    " + format_token_def(td) for td in g.token_defs)
        block.append("}")
        parts.append("\n".join(block) + "\n")
        if g.rules:
            parts.append("\n")
    parts.extend(format_rule(r) for r in g.rules)
    return "".join(parts)


# ---------------------------------------------------------------- desugaring

def desugar_groups(g: Grammar) -> Grammar:
    """Replace every repetition group by a reference to a synthetic rule.

    Star ``(b)*`` becomes ``r%gK : | r%gK b``; Plus ``r%gK : b | r%gK b``;
    Opt ``r%gK : | b``; a plain group ``r%gK : b``.  ``K`` counts groups in
    creation order over the whole grammar.  Untouched nodes keep their ids;
    cloned terms are recorded in ``origins``.
    """
    out = g.copy()
    counter = [0]
    synthetic: list[Rule] = []

    def origin(tid: int) -> int:
        return out.origins.get(tid, tid)

    def clone(term: Term) -> Term:
        new = copy.deepcopy(term)
        new.id = out.new_id()
        out.origins[new.id] = origin(term.id)
        return new

    def lower(terms: list[Term], owner: str) -> list[Term]:
        lowered = []
        for term in terms:
            if isinstance(term, Group):
                lowered.append(lower_group(term, owner))
            else:
                lowered.append(term)
        return lowered

    def lower_group(grp: Group, owner: str) -> RuleRef:
        name = f"{owner}%g{counter[0]}"
        counter[0] += 1
        rule = Rule(name, [], out.new_id(), grp.span, synthetic=True, origin=origin(grp.id))
        synthetic.append(rule)
        template = lower(grp.body, owner)

        def body() -> list[Term]:
            return [clone(t) for t in template]

        def self_ref() -> RuleRef:
            return RuleRef(name, out.new_id())

        if grp.rep is Repetition.STAR:
            shapes = [[], [self_ref()] + body()]
        elif grp.rep is Repetition.PLUS:
            shapes = [body(), [self_ref()] + body()]
        elif grp.rep is Repetition.OPT:
            shapes = [[], body()]
        else:
            shapes = [body()]
        rule.productions = [Production(terms, out.new_id()) for terms in shapes]
        ref = RuleRef(name, out.new_id(), grp.span)
        out.origins[ref.id] = origin(grp.id)
        return ref

    for rule in list(out.rules):
        for prod in rule.productions:
            prod.terms = lower(prod.terms, rule.name)
    out.rules.extend(synthetic)
    return out


def has_groups(g: Grammar) -> bool:
    return any(isinstance(n, Group) for n, _ in g.walk())
