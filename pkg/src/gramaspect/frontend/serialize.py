"""JSON and s-expression renderings of parse trees and ASTs."""

from __future__ import annotations

import json

from .astbuild import AstNode, AstValue
from .earley import Leaf, ParseNode


def tree_to_json(node: ParseNode) -> dict:
    if isinstance(node, Leaf):
        tok = node.token
        return {"kind": "literal" if tok.literal else "token", "label": tok.name,
                "text": tok.lexeme, "span": list(node.span)}
    return {"kind": "rule", "label": node.rule, "production": node.production_index,
            "span": list(node.span), "children": [tree_to_json(c) for c in node.children]}


def tree_to_sexpr(node: ParseNode) -> str:
    if isinstance(node, Leaf):
        tok = node.token
        if tok.literal:
            return json.dumps(tok.lexeme)
        return f"({tok.name} {json.dumps(tok.lexeme)})"
    inner = " ".join(tree_to_sexpr(c) for c in node.children)
    return f"({node.rule} {inner})" if inner else f"({node.rule})"


def ast_to_json(value: AstValue):
    if isinstance(value, AstNode):
        return {"kind": "node", "label": value.label, "span": list(value.span),
                "children": [{"role": r, "value": ast_to_json(v)} for r, v in value.children]}
    if isinstance(value, list):
        return [ast_to_json(v) for v in value]
    return value


def ast_to_sexpr(value: AstValue) -> str:
    if isinstance(value, AstNode):
        parts = [value.label] + [f":{r} {ast_to_sexpr(v)}" for r, v in value.children]
        return "(" + " ".join(parts) + ")"
    if isinstance(value, list):
        return "[" + " ".join(ast_to_sexpr(v) for v in value) + "]"
    return json.dumps(value)


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"
