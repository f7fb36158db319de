"""Readers for syntactical aspects (``.gaspect``) and metadata aspects (``.maspect``).

A block selects productions of a rule (or ``*`` for every rule) with an
anchored production pattern, then lists actions on the matched objects::

    factor
      $production=|: REAL
        @REAL.instead = << INT >>
        @production.after = <<: ID >>
      ;

Pattern elements: ``NAME`` (token), ``name`` (rule), ``'lit'``, ``_`` (any
single term), ``..`` (any run of terms, possibly empty) and ``( ... )rep``
for groups; any element except ``..`` may be bound with ``$v=``.  A leading
``?`` makes a block optional.  ``add << rules >>`` appends whole rules.

Metadata aspects use the same blocks with assignments instead of actions::

    factor $p=|: INT @p.meta["ast.node"] = "NumberLiteral" ;
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from ._scan import RULE_NAME, TOKEN_NAME, Scanner, quote_literal
from .diagnostics import DialectError, Diagnostic, SourceSpan
from .grammar import Repetition

VERBS = ("before", "after", "instead", "remove")
IMPLICIT_BINDERS = ("rule", "grammar")

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT = re.compile(r"-?[0-9]+(?![0-9A-Za-z_.])")
_REPS = {"*": Repetition.STAR, "+": Repetition.PLUS, "?": Repetition.OPT}


@dataclass
class TermPattern:
    kind: str  # token | literal | rule | any | gap | group
    value: str | None = None
    body: list[TermPattern] = field(default_factory=list)
    rep: Repetition = Repetition.ONE
    binder: str | None = None
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass
class ProductionPattern:
    elements: list[TermPattern] = field(default_factory=list)


@dataclass
class Fragment:
    text: str
    source: str = field(default="", compare=False, repr=False)
    file: str = field(default="<input>", compare=False, repr=False)
    start: int = field(default=0, compare=False, repr=False)
    end: int = field(default=0, compare=False, repr=False)

    def scanner(self) -> Scanner:
        if not self.source:
            return Scanner(self.text, self.file)
        return Scanner(self.source, self.file, self.start, self.end)

    @property
    def span(self) -> SourceSpan:
        return self.scanner().span(self.start, self.end)


@dataclass
class Action:
    target: str
    verb: str
    fragment: Fragment | None = None
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass
class MatchBlock:
    selector: str
    pattern: ProductionPattern
    actions: list[Action] = field(default_factory=list)
    binder: str | None = None
    optional: bool = False
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass
class AddDirective:
    fragment: Fragment
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass
class SyntacticAspect:
    directives: list[Union[MatchBlock, AddDirective]] = field(default_factory=list)
    name: str = field(default="<aspect>", compare=False)


@dataclass(frozen=True)
class Identifier:
    """Bare-word metadata value, kept distinct from strings."""

    name: str

    def __str__(self) -> str:
        return self.name


MetaValue = Union[str, int, bool, Identifier]


@dataclass
class MetaAssignment:
    target: str
    key: str
    value: MetaValue
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass
class MetaBlock:
    selector: str
    pattern: ProductionPattern
    assignments: list[MetaAssignment] = field(default_factory=list)
    binder: str | None = None
    optional: bool = False
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass
class MetadataAspect:
    blocks: list[MetaBlock] = field(default_factory=list)
    name: str = field(default="<metadata>", compare=False)


def same_value(a: MetaValue, b: MetaValue) -> bool:
    # bool is an int subclass, so compare types too
    return type(a) is type(b) and a == b


def format_value(v: MetaValue) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Identifier):
        return v.name
    return quote_literal(v, '"')


# ---------------------------------------------------------------- reader

class _AspectReader:
    def __init__(self, text: str, file: str):
        self.s = Scanner(text, file)
        self.text = text
        self.file = file

    def read_syntactic(self) -> SyntacticAspect:
        s = self.s
        aspect = SyntacticAspect(name=self.file)
        while not s.at_end():
            start = s.pos
            if s.peek_ident() == "add":
                save = s.pos
                s.match(_NAME)
                if s.peek("<<"):
                    frag = self.read_fragment()
                    s.accept(";")
                    aspect.directives.append(AddDirective(frag, s.span(start)))
                    continue
                s.pos = save
            aspect.directives.append(self.read_block(meta=False))
        return aspect

    def read_metadata(self) -> MetadataAspect:
        s = self.s
        aspect = MetadataAspect(name=self.file)
        while not s.at_end():
            aspect.blocks.append(self.read_block(meta=True))
        return aspect

    def read_block(self, meta: bool):
        s = self.s
        s.skip()
        start = s.pos
        optional = s.accept("?")
        if s.accept("*"):
            selector = "*"
        else:
            s.skip()
            at = s.pos
            name = s.match(_NAME)
            if name is None or not RULE_NAME.match(name):
                raise s.fail(f"expected a rule selector or '*', found {self._found(name, at)}", at=at)
            selector = name
        binder = None
        if s.peek("$"):
            binder = self.read_binder()
        s.expect("|:", "'|:' introducing a production pattern")
        pattern = ProductionPattern(self.read_pattern_elements(stop=("@", ";")))
        names = _binders(pattern.elements)
        if binder is not None:
            names.append(binder)
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise s.fail(f"binder ${sorted(dup)[0]} bound twice in one block", at=start)
        items = []
        while s.peek("@"):
            items.append(self.read_assignment() if meta else self.read_action())
        s.expect(";", "';' ending the block")
        if not items:
            what = "assignment" if meta else "action"
            raise s.fail(f"block has no {what}s", at=start)
        if meta:
            return MetaBlock(selector, pattern, items, binder, optional, s.span(start))
        return MatchBlock(selector, pattern, items, binder, optional, s.span(start))

    def read_binder(self) -> str:
        s = self.s
        s.skip()
        at = s.pos
        s.expect("$")
        name = s.match(_NAME) if s.pos < s.end and s.text[s.pos] != " " else None
        if name is None:
            raise s.fail("expected a binder name after '$'", at=at)
        if name in IMPLICIT_BINDERS:
            raise s.fail(f"${name} is an implicit binding and cannot be rebound", at=at)
        s.expect("=")
        return name

    def read_pattern_elements(self, stop: tuple[str, ...]) -> list[TermPattern]:
        s = self.s
        elems = []
        while not s.at_end() and not any(s.peek(x) for x in stop):
            elems.append(self.read_pattern_element())
        return elems

    def read_pattern_element(self) -> TermPattern:
        s = self.s
        s.skip()
        start = s.pos
        binder = self.read_binder() if s.peek("$") else None
        s.skip()
        if s.accept(".."):
            if binder is not None:
                raise s.fail("a gap '..' cannot be bound", at=start)
            return TermPattern("gap", span=s.span(start))
        if s.accept("("):
            body = self.read_pattern_elements(stop=(")", "@", ";"))
            if not body:
                raise s.fail("empty group pattern", at=start)
            s.expect(")")
            rep = Repetition.ONE
            if s.pos < s.end and s.text[s.pos] in _REPS:
                rep = _REPS[s.text[s.pos]]
                s.pos += 1
            return TermPattern("group", body=body, rep=rep, binder=binder, span=s.span(start))
        if s.peek("'") or s.peek('"'):
            text = s.quoted()
            if not text:
                raise s.fail("empty literal", at=start)
            return TermPattern("literal", text, binder=binder, span=s.span(start))
        at = s.pos
        name = s.match(_NAME)
        if name == "_":
            return TermPattern("any", binder=binder, span=s.span(start))
        if name is not None and TOKEN_NAME.match(name):
            return TermPattern("token", name, binder=binder, span=s.span(start))
        if name is not None and RULE_NAME.match(name):
            return TermPattern("rule", name, binder=binder, span=s.span(start))
        raise s.fail(f"expected a term pattern, found {self._found(name, at)}", at=at)

    def read_reference(self) -> str:
        s = self.s
        s.skip()
        at = s.pos
        s.expect("@")
        if s.pos < s.end and s.text[s.pos] in "'\"":
            return quote_literal(s.quoted())
        m = _NAME.match(s.text, s.pos, s.end)
        if m is None:
            raise s.fail("expected a reference after '@'", at=at)
        s.pos = m.end()
        return m.group(0)

    def read_action(self) -> Action:
        s = self.s
        s.skip()
        start = s.pos
        target = self.read_reference()
        s.expect(".")
        verb_at = s.pos
        verb = s.match(_NAME)
        if verb not in VERBS:
            raise s.fail(f"unknown advice {verb!r}; expected one of {', '.join(VERBS)}", at=verb_at)
        fragment = None
        if s.accept("="):
            fragment = self.read_fragment()
        if verb == "remove" and fragment is not None:
            raise s.fail("'remove' takes no fragment", code="E_VERB_ARITY", at=start)
        if verb != "remove" and fragment is None:
            raise s.fail(f"'{verb}' requires a << fragment >>", code="E_VERB_ARITY", at=start)
        return Action(target, verb, fragment, s.span(start))

    def read_fragment(self) -> Fragment:
        s = self.s
        s.skip()
        at = s.pos
        s.expect("<<", "'<<' opening a fragment")
        close = self.text.find(">>", s.pos, s.end)
        if close < 0:
            raise s.fail("unterminated fragment, expected '>>'", at=at)
        raw = self.text[s.pos:close]
        if not raw.strip():
            raise s.fail("fragment is empty", code="E_FRAGMENT_EMPTY", at=at)
        frag = Fragment(raw.strip(), self.text, self.file, s.pos, close)
        s.pos = close + 2
        return frag

    def read_assignment(self) -> MetaAssignment:
        s = self.s
        s.skip()
        start = s.pos
        target = self.read_reference()
        s.expect(".")
        at = s.pos
        if s.match(_NAME) != "meta":
            raise s.fail("expected '.meta[\"key\"]'", at=at)
        s.expect("[")
        s.skip()
        if not (s.peek('"') or s.peek("'")):
            raise s.fail(f"expected a quoted metadata key, found {s.describe()}")
        key_at = s.pos
        key = s.quoted()
        if not key:
            raise s.fail("metadata key is empty", at=key_at)
        s.expect("]")
        s.expect("=")
        value = self.read_value()
        return MetaAssignment(target, key, value, s.span(start))

    def read_value(self) -> MetaValue:
        s = self.s
        s.skip()
        at = s.pos
        if s.peek('"') or s.peek("'"):
            try:
                return s.quoted()
            except DialectError as exc:
                raise s.fail(exc.diagnostics[0].message, code="E_BAD_VALUE", at=at) from None
        m = _INT.match(s.text, s.pos, s.end)
        if m:
            s.pos = m.end()
            return int(m.group(0))
        m = _NAME.match(s.text, s.pos, s.end)
        end = m.end() if m else s.pos
        if m and (end >= s.end or s.text[end] not in ".0123456789"):
            s.pos = end
            if m.group(0) == "true":
                return True
            if m.group(0) == "false":
                return False
            return Identifier(m.group(0))
        bad = re.match(r"[^\s;@]*", s.text[s.pos:s.end]).group(0) or s.describe()
        raise s.fail(f"invalid metadata value {bad!r}; expected string, integer, boolean or identifier",
                     code="E_BAD_VALUE", at=at)

    def _found(self, name: str | None, at: int) -> str:
        if name is not None:
            return repr(name)
        self.s.pos = at
        return self.s.describe()


def _binders(elements: list[TermPattern]) -> list[str]:
    out = []
    for e in elements:
        if e.binder:
            out.append(e.binder)
        out.extend(_binders(e.body))
    return out


def _guard(fn, file: str):
    try:
        return fn()
    except RecursionError:
        raise DialectError(Diagnostic("E_SYNTAX", "nesting too deep", "error",
                                      SourceSpan(file, 1, 1, 1, 1))) from None


def parse_syntactic_aspect(text: str, file: str = "<aspect>") -> SyntacticAspect:
    return _guard(_AspectReader(text, file).read_syntactic, file)


def parse_metadata_aspect(text: str, file: str = "<metadata>") -> MetadataAspect:
    return _guard(_AspectReader(text, file).read_metadata, file)


def read_syntactic_aspect_file(path) -> SyntacticAspect:
    with open(path, encoding="utf-8") as fh:
        return parse_syntactic_aspect(fh.read(), str(path))


def read_metadata_aspect_file(path) -> MetadataAspect:
    with open(path, encoding="utf-8") as fh:
        return parse_metadata_aspect(fh.read(), str(path))


# ---------------------------------------------------------------- debug form

def format_pattern_element(e: TermPattern) -> str:
    prefix = f"${e.binder}=" if e.binder else ""
    if e.kind == "gap":
        body = ".."
    elif e.kind == "any":
        body = "_"
    elif e.kind == "literal":
        body = quote_literal(e.value)
    elif e.kind == "group":
        body = "(" + " ".join(format_pattern_element(x) for x in e.body) + ")" + e.rep.value
    else:
        body = e.value
    return prefix + body


def _format_head(block) -> str:
    head = ("?" if block.optional else "") + block.selector
    binder = f" ${block.binder}=" if block.binder else " "
    elems = " ".join(format_pattern_element(e) for e in block.pattern.elements)
    return f"{head}{binder}|: {elems}".rstrip()


def _format_ref(target: str) -> str:
    return "@" + target


def format_syntactic_aspect(aspect: SyntacticAspect) -> str:
    out = []
    for d in aspect.directives:
        if isinstance(d, AddDirective):
            out.append(f"add << {d.fragment.text} >>\n")
            continue
        lines = [_format_head(d)]
        for a in d.actions:
            if a.fragment is None:
                lines.append(f"    {_format_ref(a.target)}.{a.verb}")
            else:
                lines.append(f"    {_format_ref(a.target)}.{a.verb} = << {a.fragment.text} >>")
        lines.append("    ;")
        out.append("\n".join(lines) + "\n")
    return "".join(out)


def format_metadata_aspect(aspect: MetadataAspect) -> str:
    out = []
    for b in aspect.blocks:
        lines = [_format_head(b)]
        for a in b.assignments:
            lines.append(f"    {_format_ref(a.target)}.meta[{quote_literal(a.key, chr(34))}] = {format_value(a.value)}")
        lines.append("    ;")
        out.append("\n".join(lines) + "\n")
    return "".join(out)
