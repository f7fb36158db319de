"""Metadata-driven AST construction from parse trees.

Reserved keys read from the metadata store:

``ast.node`` (production)  label of the node built for that production
``ast.role`` (term)        role name of the child; default is the token name
                           lowercased or the rule name
``ast.skip`` (term)        drop the child
``ast.list`` (group)       collect the group's items into one list child,
                           role ``ast.role`` of the group or ``items``

Literals are dropped unless they carry an explicit ``ast.role``.  Children
whose role equals that of a list child are merged into the list, in input
order.  A node whose only child is a one-item list is replaced by that
item, and a production without ``ast.node`` whose only child is a single
value is replaced by that value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from ..metadata import MetadataStore
from .earley import Leaf, ParseNode, RuleNode

DEFAULT_LIST_ROLE = "items"


@dataclass
class AstNode:
    label: str
    children: list[tuple[str, AstValue]] = field(default_factory=list)
    span: tuple[int, int] = (0, 0)

    def child(self, role: str):
        for r, v in self.children:
            if r == role:
                return v
        raise KeyError(role)


AstValue = Union[AstNode, str, list]


def count_ast(value: AstValue) -> int:
    if isinstance(value, AstNode):
        return 1 + sum(count_ast(v) for _, v in value.children)
    if isinstance(value, list):
        return sum(count_ast(v) for v in value)
    return 1


class _Slot:
    __slots__ = ("role", "values", "is_list", "order")

    def __init__(self, role: str, values: list, is_list: bool, order: int):
        self.role = role
        self.values = values
        self.is_list = is_list
        self.order = order


def build_ast(tree: ParseNode, store: MetadataStore) -> AstValue:
    if isinstance(tree, Leaf):
        return tree.token.lexeme
    return _build(tree, store)


def _is_true(store: MetadataStore, node_id: int | None, key: str) -> bool:
    return node_id is not None and store.get(node_id, key) is True


def _build(node: RuleNode, store: MetadataStore) -> AstValue:
    slots: list[_Slot] = []
    lists: dict[int, _Slot] = {}

    def list_slot(gid: int, order: int) -> _Slot:
        if gid not in lists:
            role = store.get(gid, "ast.role")
            lists[gid] = _Slot(role if isinstance(role, str) else DEFAULT_LIST_ROLE, [], True, order)
            slots.append(lists[gid])
        return lists[gid]

    for order, child in enumerate(node.children):
        if _is_true(store, child.term, "ast.skip") or any(_is_true(store, g, "ast.skip") for g in child.groups):
            continue
        role = store.get(child.term, "ast.role") if child.term is not None else None
        if isinstance(child, Leaf):
            if child.token.literal and not isinstance(role, str):
                continue
            value: AstValue = child.token.lexeme
            default_role = child.token.name.lower()
        else:
            value = _build(child, store)
            default_role = child.rule
        role = role if isinstance(role, str) else default_role
        gid = next((g for g in child.groups if _is_true(store, g, "ast.list")), None)
        if gid is not None:
            list_slot(gid, order).values.append(value)
        else:
            slots.append(_Slot(role, [value], False, order))
    for gid in node.spliced_groups:
        if _is_true(store, gid, "ast.list"):
            list_slot(gid, len(node.children))

    slots = _merge_roles(slots)
    label = store.get(node.production_id, "ast.node")
    if len(slots) == 1:
        only = slots[0]
        if only.is_list and len(only.values) == 1:
            return only.values[0]
        if not only.is_list and not isinstance(label, str):
            return only.values[0]
    if not isinstance(label, str):
        label = node.rule
    children = [(s.role, list(s.values) if s.is_list else s.values[0]) for s in slots]
    return AstNode(label, children, node.span)


def _merge_roles(slots: list[_Slot]) -> list[_Slot]:
    list_roles = {s.role for s in slots if s.is_list}
    if not list_roles:
        return slots
    merged: dict[str, _Slot] = {}
    out: list[_Slot] = []
    for s in sorted(slots, key=lambda s: s.order):
        if s.role in list_roles:
            target = merged.get(s.role)
            if target is None:
                target = merged[s.role] = _Slot(s.role, [], True, s.order)
                out.append(target)
            target.values.extend(s.values)
        else:
            out.append(s)
    return out
