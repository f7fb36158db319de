"""Metadata attached to grammar objects, its migration across weaving, and integrity checks."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

from .aspects import Identifier, MetadataAspect, MetaValue, format_value, same_value
from .diagnostics import DialectError, Diagnostic, Report
from .grammar import Grammar, Group, Production, kind_of
from .weaver import WeaveTrace, match_pointcut, resolve_reference

# reserved AST schema: key -> (value type, allowed node kind)
AST_SCHEMA = {
    "ast.node": (str, "production"),
    "ast.role": (str, "term"),
    "ast.skip": (bool, "term"),
    "ast.list": (bool, "group"),
}


@dataclass
class MetadataStore:
    entries: dict[int, dict[str, MetaValue]] = field(default_factory=dict)
    provenance: dict[tuple[int, str], tuple[str, int]] = field(default_factory=dict)

    def get(self, node_id: int, key: str, default=None):
        return self.entries.get(node_id, {}).get(key, default)

    def keys_of(self, node_id: int) -> dict[str, MetaValue]:
        return self.entries.get(node_id, {})

    def put(self, node_id: int, key: str, value: MetaValue, source: tuple[str, int] = ("<api>", 0)) -> None:
        old = self.entries.get(node_id, {}).get(key)
        if old is not None and not same_value(old, value):
            raise DialectError(Diagnostic(
                "E_META_CONFLICT",
                f"{key!r} already set to {format_value(old)}, cannot set {format_value(value)}"))
        self.entries.setdefault(node_id, {})[key] = value
        self.provenance.setdefault((node_id, key), source)

    def count(self) -> int:
        return sum(len(v) for v in self.entries.values())

    def copy(self) -> MetadataStore:
        return copy.deepcopy(self)

    def pairs(self):
        for nid in sorted(self.entries):
            for key in sorted(self.entries[nid]):
                yield nid, key, self.entries[nid][key]

    def same_as(self, other: MetadataStore) -> bool:
        mine, theirs = list(self.pairs()), list(other.pairs())
        return len(mine) == len(theirs) and all(
            a[:2] == b[:2] and same_value(a[2], b[2]) for a, b in zip(mine, theirs))


def apply_metadata_aspect(g: Grammar, store: MetadataStore, aspect: MetadataAspect) -> MetadataStore:
    """Write every assignment of ``aspect`` into a copy of ``store``."""
    out = store.copy()
    paths = {n.id: p for n, p in g.walk()}
    errors: list[Diagnostic] = []
    for bi, block in enumerate(aspect.blocks):
        matches = match_pointcut(g, block, bi)
        if not matches and not block.optional:
            errors.append(Diagnostic("E_NO_MATCH", f"block {bi} ({block.selector}) matched nothing",
                                     "error", block.span))
            continue
        for m in matches:
            for a in block.assignments:
                try:
                    target = resolve_reference(g, m, a.target, a.span)
                    out.put(target, a.key, a.value, (aspect.name, bi))
                except DialectError as exc:
                    for d in exc.diagnostics:
                        d.span = d.span or a.span
                        d.path = d.path or paths.get(m.production_id)
                    errors.extend(exc.diagnostics)
    if errors:
        raise DialectError(errors)
    return out


def migrate(store: MetadataStore, trace: WeaveTrace) -> tuple[MetadataStore, Report]:
    """Follow the weave trace: replaced nodes hand entries to their first replacement."""
    out = store.copy()
    report = Report()
    for rec in trace:
        moved_from = None
        if rec.verb == "instead" and rec.created and rec.target_id in out.entries:
            moved_from = rec.target_id
            entries = out.entries.pop(rec.target_id)
            first = rec.created[0]
            for key, value in entries.items():
                source = out.provenance.pop((rec.target_id, key), ("<migrated>", rec.block))
                out.entries.setdefault(first, {})[key] = value
                out.provenance[(first, key)] = source
            if len(rec.created) > 1:
                report.add("N_MIGRATE_SPLIT",
                           f"{rec.target_path} was replaced by {len(rec.created)} nodes; "
                           f"metadata moved to the first ({rec.new_paths[0]})", "notice", rec.target_path)
        for rid in rec.removed:
            if rid == moved_from or rid not in out.entries:
                continue
            path = rec.old_paths.get(rid, f"#{rid}")
            for key in sorted(out.entries.pop(rid)):
                out.provenance.pop((rid, key), None)
                report.add("W_META_DROPPED", f"{key!r} on {path} dropped: node {rec.verb}d by {rec.aspect}",
                           "warning", path)
    return out, report


def _term_kind(node) -> str:
    return "group" if isinstance(node, Group) else kind_of(node)


def check_integrity(g: Grammar, store: MetadataStore) -> Report:
    report = Report()
    index = g.index()
    for nid, key, value in store.pairs():
        if nid not in index:
            report.add("E_DANGLING", f"{key!r} is attached to node #{nid}, which no longer exists")
            continue
        node, path = index[nid]
        if not key.startswith("ast."):
            continue
        if key not in AST_SCHEMA:
            report.add("W_UNKNOWN_AST_KEY", f"unknown reserved key {key!r} on {path}", "warning", path)
            continue
        vtype, where = AST_SCHEMA[key]
        if type(value) is not vtype:
            report.add("E_SCHEMA", f"{key} on {path} must be a {vtype.__name__}, got {format_value(value)}",
                       path=path)
        kind = _term_kind(node)
        ok = kind == where or (where == "term" and kind == "group")
        if not ok:
            report.add("E_SCHEMA", f"{key} is only allowed on {where}s, {path} is a {kind}", path=path)
    for node, path in g.walk():
        if isinstance(node, Production):
            _check_roles(node.terms, path, store, report)
        elif isinstance(node, Group):
            _check_roles(node.body, path, store, report)
    return report


def _check_roles(terms, path: str, store: MetadataStore, report: Report) -> None:
    seen: dict[str, int] = {}
    for t in terms:
        role = store.get(t.id, "ast.role")
        if isinstance(role, str):
            seen[role] = seen.get(role, 0) + 1
    for role, n in seen.items():
        if n > 1:
            report.add("W_DUP_ROLE", f"role {role!r} is used by {n} siblings in {path}", "warning", path)


def dump_metadata(g: Grammar, store: MetadataStore) -> dict[str, dict]:
    """ObjectPath -> {key: value}; entries on vanished nodes are left out."""
    index = g.index()
    out: dict[str, dict] = {}
    for nid, key, value in store.pairs():
        if nid in index:
            out.setdefault(index[nid][1], {})[key] = value.name if isinstance(value, Identifier) else value
    return {p: dict(sorted(out[p].items())) for p in sorted(out)}


def dump_metadata_json(g: Grammar, store: MetadataStore) -> str:
    return json.dumps(dump_metadata(g, store), indent=2, sort_keys=True) + "\n"
