"""Runtime front-end: lexer, Earley parser and AST builder for woven grammars."""

from .astbuild import AstNode, build_ast
from .earley import Leaf, Parser, RuleNode, leaves, parse_input
from .lexer import Lexer, Token, tokenize

__all__ = ["AstNode", "Leaf", "Lexer", "Parser", "RuleNode", "Token", "build_ast", "leaves",
           "parse_input", "tokenize"]
