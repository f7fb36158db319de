"""Command-line entry point: ``gramaspect {weave,check,parse,print,match}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .aspects import read_metadata_aspect_file, read_syntactic_aspect_file
from .diagnostics import DialectError, Diagnostic
from .frontend.astbuild import build_ast
from .frontend.earley import Parser
from .frontend.lexer import tokenize
from .frontend.serialize import ast_to_json, ast_to_sexpr, dumps_json, tree_to_json, tree_to_sexpr
from .grammar import Grammar, check_well_formed, pretty_print
from .metadata import MetadataStore, apply_metadata_aspect, check_integrity, dump_metadata_json, migrate
from .reader import read_grammar_file
from .weaver import WeaveTrace, match_pointcut, weave_one

EXIT_OK = 0
EXIT_ERRORS = 1
EXIT_USAGE = 2


class _Phase(argparse.Action):
    """Collect -a/-m files in command-line order."""

    def __call__(self, parser, namespace, values, option_string=None):
        phases = list(getattr(namespace, "phases", None) or [])
        phases.append((self.const, values))
        namespace.phases = phases


class _Usage(Exception):
    pass


class _Session:
    def __init__(self, args):
        self.args = args
        self.errors = 0
        self.warnings = 0

    def emit(self, diags, default_file: str = "<input>") -> None:
        for d in diags:
            if d.is_error:
                self.errors += 1
            elif d.severity == "warning":
                self.warnings += 1
            if self.args.diag_json:
                line = json.dumps(d.to_json(default_file), sort_keys=True)
            else:
                line = d.format(default_file)
            print(line, file=sys.stderr)

    def status(self) -> int:
        if self.errors or (self.args.strict and self.warnings):
            return EXIT_ERRORS
        return EXIT_OK


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise _Usage(f"no such file: {path}")
    return p


def _load_grammar(session: _Session, path: str) -> Grammar:
    g = read_grammar_file(_existing(path))
    problems = check_well_formed(g)
    if problems:
        raise DialectError(problems)
    return g


def _apply_phases(session: _Session, g: Grammar, store: MetadataStore, phases, migrate_meta: bool = True):
    trace = WeaveTrace()
    for kind, path in phases:
        if kind == "m":
            store = apply_metadata_aspect(g, store, read_metadata_aspect_file(_existing(path)))
            continue
        g, records = weave_one(g, read_syntactic_aspect_file(_existing(path)))
        trace.extend(records)
        if migrate_meta:
            step = WeaveTrace(records)
            store, report = migrate(store, step)
            session.emit(report, path)
    return g, store, trace


def cmd_weave(session: _Session, args) -> None:
    g = _load_grammar(session, args.base)
    phases = args.phases or []
    if not any(kind == "a" for kind, _ in phases):
        raise _Usage("weave needs at least one -a ASPECT")
    for _, path in phases:
        _existing(path)
    g, store, trace = _apply_phases(session, g, MetadataStore(), phases, migrate_meta=not args.no_migrate)
    Path(args.output).write_text(pretty_print(g), encoding="utf-8")
    if args.emit_trace:
        Path(args.emit_trace).write_text(trace.to_jsonl(), encoding="utf-8")
    if store.count() or any(kind == "m" for kind, _ in phases):
        session.emit(check_integrity(g, store), args.output)
    if args.dump_meta:
        Path(args.dump_meta).write_text(dump_metadata_json(g, store), encoding="utf-8")


def cmd_check(session: _Session, args) -> None:
    g = read_grammar_file(_existing(args.grammar))
    problems = check_well_formed(g)
    session.emit(problems, args.grammar)
    if any(d.is_error for d in problems):
        return
    g, store, _ = _apply_phases(session, g, MetadataStore(), args.phases or [])
    session.emit(check_integrity(g, store), args.grammar)
    if args.dump_meta:
        Path(args.dump_meta).write_text(dump_metadata_json(g, store), encoding="utf-8")


def cmd_parse(session: _Session, args) -> None:
    if len(args.files) > 2:
        raise _Usage("parse takes GRAMMAR and at most one INPUT")
    args.grammar = args.files[0]
    args.input = args.files[1] if len(args.files) > 1 else None
    g = _load_grammar(session, args.grammar)
    g, store, _ = _apply_phases(session, g, MetadataStore(), args.phases or [])
    if args.input in (None, "-"):
        text, source = sys.stdin.read(), "<stdin>"
    else:
        text, source = _existing(args.input).read_text(encoding="utf-8"), args.input
    tokens = tokenize(g, text, file=source)
    parser = Parser(g)
    tree = parser.parse(tokens, args.start, text, source)
    for w in parser.warnings:
        if args.strict_ambiguity:
            w.severity = "error"
    session.emit(parser.warnings, source)
    if args.ast:
        report = check_integrity(g, store)
        session.emit(report, args.grammar)
        if report.has_errors:
            return
        value = build_ast(tree, store)
        out = dumps_json(ast_to_json(value)) if args.format == "json" else ast_to_sexpr(value) + "\n"
    else:
        out = dumps_json(tree_to_json(tree)) if args.format == "json" else tree_to_sexpr(tree) + "\n"
    sys.stdout.write(out)


def cmd_print(session: _Session, args) -> None:
    g = read_grammar_file(_existing(args.grammar))
    sys.stdout.write(pretty_print(g))


def cmd_match(session: _Session, args) -> None:
    g = _load_grammar(session, args.grammar)
    phases = [p for p in (args.phases or []) if p[0] == "a"]
    if not phases:
        raise _Usage("match needs at least one -a ASPECT")
    for _, path in phases:
        aspect = read_syntactic_aspect_file(_existing(path))
        blocks = [(bi, d) for bi, d in enumerate(aspect.directives) if hasattr(d, "pattern")]
        for bi, block in blocks:
            matches = match_pointcut(g, block, bi)
            if not matches and not block.optional:
                session.emit([Diagnostic("E_NO_MATCH", f"block {bi} ({block.selector}) matched nothing",
                                         "error", block.span)], path)
            for m in matches:
                binds = " ".join(f"${k}={g.path_of(v)}" for k, v in sorted(m.bindings.items())
                                 if k not in ("rule", "grammar"))
                line = f"{path} block {bi}: {g.path_of(m.production_id)}"
                print(f"{line} {binds}".rstrip())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--diag-json", action="store_true", help="diagnostics as JSON lines")
    common.add_argument("--strict", action="store_true", help="treat warnings as errors")

    def phases(p, syntactic=True, metadata=True):
        if syntactic:
            p.add_argument("-a", "--aspect", action=_Phase, const="a", dest="phases", metavar="ASPECT",
                           help="syntactical aspect (.gaspect); repeatable")
        if metadata:
            p.add_argument("-m", "--meta", action=_Phase, const="m", dest="phases", metavar="META",
                           help="metadata aspect (.maspect); repeatable")

    parser = argparse.ArgumentParser(prog="gramaspect", description="Create language dialects by weaving grammar aspects.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weave", parents=[common], help="apply aspects to a grammar")
    p.add_argument("base")
    phases(p)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--emit-trace", metavar="TRACE.jsonl")
    p.add_argument("--no-migrate", action="store_true", help="do not migrate metadata across weaving")
    p.add_argument("--dump-meta", metavar="META.json")
    p.set_defaults(func=cmd_weave)

    p = sub.add_parser("check", parents=[common], help="well-formedness and metadata integrity")
    p.add_argument("grammar")
    phases(p, syntactic=False)
    p.add_argument("--dump-meta", metavar="META.json")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("parse", parents=[common], help="parse input with a grammar")
    # GRAMMAR [INPUT]; a single positional list so INPUT may follow the options
    p.add_argument("files", nargs="+", metavar="GRAMMAR [INPUT | -]")
    p.add_argument("--start", required=True)
    p.add_argument("--ast", action="store_true", help="print the AST instead of the parse tree")
    p.add_argument("--format", choices=("json", "sexpr"), default="sexpr")
    p.add_argument("--strict-ambiguity", action="store_true")
    phases(p, syntactic=False)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("print", parents=[common], help="print a grammar in canonical form")
    p.add_argument("grammar")
    p.set_defaults(func=cmd_print)

    p = sub.add_parser("match", parents=[common], help="list pointcut matches without applying them")
    p.add_argument("grammar")
    phases(p, metadata=False)
    p.add_argument("--dry-run", action="store_true", default=True)
    p.set_defaults(func=cmd_match)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
        # argparse cannot take a positional after options; let `parse` pick up its INPUT here
        if extra and args.command == "parse" and all(x == "-" or not x.startswith("-") for x in extra):
            args.files.extend(extra)
        elif extra:
            parser.error(f"unrecognized arguments: {' '.join(extra)}")
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    session = _Session(args)
    try:
        args.func(session, args)
    except _Usage as exc:
        print(f"gramaspect: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DialectError as exc:
        session.emit(exc.diagnostics, getattr(args, "grammar", None) or getattr(args, "base", "<input>"))
        return EXIT_ERRORS
    except OSError as exc:
        print(f"gramaspect: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return session.status()


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
