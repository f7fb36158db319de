"""Language dialects from grammar aspects.

Syntactical aspects rewrite a grammar with pattern-matched before/after/
instead/remove advice; metadata aspects attach name-value pairs to grammar
objects that follow them through weaving.  The woven grammar can be run
directly as a syntax checker with a metadata-driven AST builder.
"""

from .aspects import parse_metadata_aspect, parse_syntactic_aspect
from .diagnostics import DialectError, Diagnostic
from .grammar import Grammar, check_well_formed, desugar_groups, pretty_print, resolve_path
from .metadata import MetadataStore, apply_metadata_aspect, check_integrity, migrate
from .reader import parse_grammar
from .weaver import apply_action, match_pointcut, weave

__all__ = [
    "DialectError",
    "Diagnostic",
    "Grammar",
    "MetadataStore",
    "apply_action",
    "apply_metadata_aspect",
    "check_integrity",
    "check_well_formed",
    "desugar_groups",
    "match_pointcut",
    "migrate",
    "parse_grammar",
    "parse_metadata_aspect",
    "parse_syntactic_aspect",
    "pretty_print",
    "resolve_path",
    "weave",
]
