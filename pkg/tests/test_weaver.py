import json
import random

import pytest

from gramaspect.aspects import SyntacticAspect, parse_syntactic_aspect
from gramaspect.diagnostics import DialectError
from gramaspect.grammar import TokenRef, check_well_formed, format_production, pretty_print
from gramaspect.reader import parse_grammar
from gramaspect.weaver import apply_action, match_pointcut, resolve_reference, subtree_ids, weave

from support import random_grammar, read


def aspect(text: str, name: str = "t.gaspect"):
    return parse_syntactic_aspect(text, name)


def factor_rule(g):
    return pretty_print(g).split("\n\n", 1)[1].split("factor", 1)[1]


# ---------------------------------------------------------------- matching

def test_intvars_block_matches_once(arith, intvars):
    block = intvars.directives[0]
    (m,) = match_pointcut(arith, block)
    assert m.production_id == arith.resolve("factor.p0").id
    assert m.bindings["production"] == m.production_id
    assert m.bindings["rule"] == arith.resolve("factor").id
    assert resolve_reference(arith, m, "REAL") == arith.resolve("factor.p0.t0").id


def test_gap_matches_every_production(arith):
    block = aspect("* |: .. @rule.remove ;").directives[0]
    got = [arith.path_of(m.production_id) for m in match_pointcut(arith, block)]
    assert got == ["sum.p0", "mult.p0", "factor.p0", "factor.p1"]


def test_absent_token_matches_nothing(arith):
    assert match_pointcut(arith, aspect("* |: INT @INT.remove ;").directives[0]) == []


def test_gap_is_non_greedy():
    g = parse_grammar("tokens { A : /a/ ; } r : A A A ;")
    block = aspect("r |: .. $x=A .. @x.remove ;").directives[0]
    (m,) = match_pointcut(g, block)
    assert g.path_of(m.bindings["x"]) == "r.p0.t0"
    assert m.element_spans == [(0, 0), (0, 1), (1, 3)]


def test_group_pattern_binds_inside(arith):
    block = aspect("sum |: mult ($op='+' ..)* @op.remove ;").directives[0]
    (m,) = match_pointcut(arith, block)
    assert arith.path_of(m.bindings["op"]) == "sum.p0.t1.t0"


def test_group_pattern_requires_same_repetition(arith):
    assert match_pointcut(arith, aspect("sum |: mult ('+' mult)+ @rule.remove ;").directives[0]) == []


def test_literal_and_rule_patterns(arith):
    block = aspect("factor |: '(' $s=sum ')' @s.remove ;").directives[0]
    (m,) = match_pointcut(arith, block)
    assert arith.path_of(m.bindings["s"]) == "factor.p1.t1"


@pytest.mark.parametrize("seed", range(10))
def test_match_determinism(seed):
    g = random_grammar(random.Random(seed))
    block = aspect("* $p=|: .. $x=_ .. @x.remove ;").directives[0]
    assert match_pointcut(g, block) == match_pointcut(g, block)
    assert match_pointcut(g, block) == match_pointcut(g.copy(), block)


def test_ambiguous_reference(arith):
    block = aspect("factor |: '(' sum ')' @sum.remove ;").directives[0]
    (m,) = match_pointcut(arith, block)
    g = parse_grammar("tokens { A : /a/ ; } r : A A ;")
    (m2,) = match_pointcut(g, aspect("r |: .. @A.remove ;").directives[0])
    with pytest.raises(DialectError) as exc:
        resolve_reference(g, m2, "A")
    assert exc.value.codes == ["E_AMBIGUOUS_REF"]
    with pytest.raises(DialectError) as exc:
        weave(g, [aspect("r |: .. @A.remove ;")])
    assert exc.value.codes == ["E_AMBIGUOUS_REF"]
    assert resolve_reference(arith, m, "sum") == arith.resolve("factor.p1.t1").id


def test_unknown_reference(arith):
    with pytest.raises(DialectError) as exc:
        weave(arith, [aspect("factor |: REAL @INT.remove ;")])
    assert exc.value.codes == ["E_UNKNOWN_REF"]


# ---------------------------------------------------------------- apply_action

def test_apply_instead_on_intvars_match(arith, intvars):
    block = intvars.directives[0]
    (m,) = match_pointcut(arith, block)
    real_id = arith.resolve("factor.p0.t0").id
    out, (rec,) = apply_action(arith, m, block.actions[0])
    assert "    : INT\n" in factor_rule(out)
    assert out.node(real_id) is None
    assert rec.removed == [real_id] and len(rec.created) == 1
    assert isinstance(out.node(rec.created[0]), TokenRef)
    assert rec.new_paths == ["factor.p0.t0"]
    # input untouched
    assert arith.resolve("factor.p0.t0").name == "REAL"


def test_apply_after_on_production(arith, intvars):
    block = intvars.directives[0]
    (m,) = match_pointcut(arith, block)
    out, (rec,) = apply_action(arith, m, block.actions[1])
    assert [format_production(p) for p in out.rule("factor").productions] == [": REAL", ": ID", ": '(' sum ')'"]
    assert rec.new_paths == ["factor.p1"]


def test_untouched_nodes_keep_ids(arith, intvars):
    block = intvars.directives[0]
    (m,) = match_pointcut(arith, block)
    out, _ = apply_action(arith, m, block.actions[0])
    before = {n.id for n, _ in arith.walk()}
    after = {n.id for n, _ in out.walk()}
    assert before - after == {arith.resolve("factor.p0.t0").id}


def test_remove_all_productions_is_empty_rule(arith):
    blk = aspect("factor $p=|: .. @p.remove ;").directives[0]
    m0, m1 = match_pointcut(arith, blk)
    g1, _ = apply_action(arith, m1, blk.actions[0])
    (m0,) = match_pointcut(g1, blk)
    with pytest.raises(DialectError) as exc:
        apply_action(g1, m0, blk.actions[0])
    assert exc.value.codes == ["E_EMPTY_RULE"]
    with pytest.raises(DialectError) as exc:
        weave(arith, [aspect("factor $p=|: .. @p.remove ;")])
    assert exc.value.codes == ["E_EMPTY_RULE"]


def test_fragment_kind_mismatch(arith):
    with pytest.raises(DialectError) as exc:
        weave(arith, [aspect("factor |: REAL @REAL.instead = << : INT >> ;")])
    assert exc.value.codes == ["E_FRAGMENT_KIND"]
    with pytest.raises(DialectError) as exc:
        weave(arith, [aspect("factor $p=|: REAL @p.after = << x : INT ; >> ;")])
    assert exc.value.codes == ["E_FRAGMENT_KIND"]


def test_instead_production_and_rule(arith):
    g, _ = weave(arith, [aspect("factor $p=|: REAL @p.instead = << : INT : ID >> ;")])
    assert [format_production(p) for p in g.rule("factor").productions] == [": INT", ": ID", ": '(' sum ')'"]
    g, _ = weave(arith, [aspect("factor |: REAL @rule.instead = << factor : INT ; >> ;")])
    assert pretty_print(g).endswith("factor : INT ;\n")


def test_grammar_target(arith):
    g, trace = weave(arith, [aspect("factor |: REAL @grammar.before = << top : sum ; >> ;")])
    assert g.rules[0].name == "top"
    assert trace.records[0].new_paths == ["top"]
    with pytest.raises(DialectError) as exc:
        weave(arith, [aspect("factor |: REAL @grammar.remove ;")])
    assert exc.value.codes == ["E_BAD_TARGET"]


def test_removing_last_group_member_is_error(arith):
    with pytest.raises(DialectError) as exc:
        weave(arith, [aspect("sum |: mult ($a='+' $b=mult)* @a.remove @b.remove ;")])
    assert exc.value.codes == ["E_EMPTY_GROUP"]


# ---------------------------------------------------------------- weave

def test_intvars_weave(arith, intvars):
    g, trace = weave(arith, [intvars])
    assert pretty_print(g) == read("dialect.golden.gram")
    lines = [json.loads(line) for line in trace.to_jsonl().splitlines()]
    assert lines == [
        {"aspect": "intvars.gaspect", "block": 0, "verb": "instead", "target_path": "factor.p0.t0",
         "new_paths": ["factor.p0.t0"], "removed_paths": ["factor.p0.t0"]},
        {"aspect": "intvars.gaspect", "block": 0, "verb": "after", "target_path": "factor.p0",
         "new_paths": ["factor.p1"], "removed_paths": []},
    ]


def test_weave_identity(arith):
    g, trace = weave(arith, [])
    assert g == arith and len(trace) == 0
    g, trace = weave(arith, [SyntacticAspect([])])
    assert g == arith and len(trace) == 0


def test_conflict_reported_once(arith):
    with pytest.raises(DialectError) as exc:
        weave(arith, [aspect(read("conflict.gaspect"))])
    assert exc.value.codes == ["E_CONFLICT"]


def test_instead_plus_remove_conflict(arith):
    with pytest.raises(DialectError) as exc:
        weave(arith, [aspect("factor |: $r=REAL @r.instead = << INT >> ; factor |: REAL @REAL.remove ;")])
    assert exc.value.codes == ["E_CONFLICT"]


def test_before_and_after_on_same_node_is_fine(arith):
    g, _ = weave(arith, [aspect("factor |: $r=REAL @r.before = << ID >> @r.after = << INT >> ;")])
    assert format_production(g.rule("factor").productions[0]) == ": ID REAL INT"


def test_no_match(arith):
    with pytest.raises(DialectError) as exc:
        weave(arith, [aspect(read("nomatch.gaspect"))])
    assert exc.value.codes == ["E_NO_MATCH"]


def test_optional_block_may_match_nothing(arith):
    g, trace = weave(arith, [aspect("?factor |: INT @INT.remove ;")])
    assert g == arith and len(trace) == 0


def test_after_insertions_accumulate_in_order(arith):
    g, _ = weave(arith, [aspect("factor $p=|: REAL @p.after = << : ID >> @p.after = << : INT >> ;")])
    assert [format_production(p) for p in g.rule("factor").productions] == [
        ": REAL", ": ID", ": INT", ": '(' sum ')'"]
    g, _ = weave(arith, [aspect("factor $p=|: REAL @p.before = << : ID >> @p.before = << : INT >> ;")])
    assert [format_production(p) for p in g.rule("factor").productions] == [
        ": ID", ": INT", ": REAL", ": '(' sum ')'"]


def test_snapshot_semantics(arith):
    # the second block cannot see the INT inserted by the first
    text = "factor |: $r=REAL @r.instead = << INT >> ; factor |: INT @INT.remove ;"
    with pytest.raises(DialectError) as exc:
        weave(arith, [aspect(text)])
    assert exc.value.codes == ["E_NO_MATCH"]
    g, _ = weave(arith, [aspect(text.replace("factor |: INT", "?factor |: INT"))])
    assert format_production(g.rule("factor").productions[0]) == ": INT"
    # a later aspect file does see it
    g, _ = weave(arith, [aspect("factor |: $r=REAL @r.instead = << INT >> ;"),
                         aspect("factor |: INT @INT.instead = << ID >> ;")])
    assert format_production(g.rule("factor").productions[0]) == ": ID"


def test_block_order_does_not_change_matches(arith):
    a = "factor $p=|: REAL @p.after = << : ID >> ;"
    b = "* |: .. $t=REAL .. @t.instead = << INT >> ;"
    g1, _ = weave(arith, [aspect(a + b)])
    g2, _ = weave(arith, [aspect(b + a)])
    assert g1 == g2


def test_add_directive(arith):
    g, trace = weave(arith, [aspect("add << num : INT | REAL ; >> factor |: $r=REAL @r.instead = << num >> ;")])
    assert g.rules[-1].name == "num"
    assert check_well_formed(g) == []
    assert [r.verb for r in trace] == ["add", "instead"]


def test_undefined_rule_in_fragment(arith):
    with pytest.raises(DialectError) as exc:
        weave(arith, [aspect("factor |: $r=REAL @r.instead = << nosuch >> ;")])
    assert exc.value.codes == ["E_UNDEF_RULE"]


def test_weave_does_not_mutate_input(arith, intvars):
    before = pretty_print(arith)
    ids = arith.all_ids()
    weave(arith, [intvars])
    assert pretty_print(arith) == before and arith.all_ids() == ids


def test_effect_counting(arith):
    a = aspect("* |: .. $t=_ .. @t.instead = << ID >> ;")
    with pytest.raises(DialectError):
        # several terms per production: a plain _ is fine, conflicts come only from shared targets
        weave(arith, [aspect("* |: .. $t=_ .. @t.instead = << ID >> @t.remove ;")])
    g, trace = weave(arith, [a])
    n_matches = len(match_pointcut(arith, a.directives[0]))
    assert sum(r.verb == "instead" for r in trace) == n_matches == 4


# ---------------------------------------------------------------- properties on random inputs

_VERBS = ["instead = << A >>", "before = << B >>", "after = << C '+' >>", "remove"]


def random_aspect(rng: random.Random, g) -> str:
    blocks = []
    for _ in range(rng.randint(1, 3)):
        rule = rng.choice([r for r in g.rules if not r.synthetic])
        prod = rng.choice(rule.productions)
        if prod.terms and rng.random() < 0.7:
            pos = rng.randrange(len(prod.terms))
            pattern = " ".join(["_"] * pos + ["$t=_", ".."])
            blocks.append(f"?{rule.name} |: {pattern} @t.{rng.choice(_VERBS)} ;")
        else:
            verb = rng.choice(["after = << : A >>", "before = << : B B >>", "instead = << : C >>"])
            blocks.append(f"?{rule.name} $p=|: .. @p.{verb} ;")
    return "\n".join(blocks)


def woven_cases(n: int):
    rng = random.Random(4242)
    cases = []
    while len(cases) < n:
        g = random_grammar(rng)
        text = random_aspect(rng, g)
        try:
            out, trace = weave(g, [aspect(text)])
        except DialectError as exc:
            assert set(exc.codes) <= {"E_CONFLICT", "E_EMPTY_RULE", "E_EMPTY_GROUP"}, exc.codes
            continue
        cases.append((g, text, out, trace))
    return cases


CASES = woven_cases(40)


@pytest.mark.parametrize("case", range(len(CASES)))
def test_trace_soundness(case):
    g, _, out, trace = CASES[case]
    before = {n.id for n, _ in g.walk()}
    after = {n.id for n, _ in out.walk()}
    assert trace.removed_ids() <= before
    assert trace.created_ids() <= after
    assert all(r.target_id in before for r in trace)


@pytest.mark.parametrize("case", range(len(CASES)))
def test_frame_property(case):
    g, _, out, trace = CASES[case]
    before = {n.id: n for n, _ in g.walk()}
    after = {n.id: n for n, _ in out.walk()}
    touched = trace.removed_ids() | {i for c in trace.created_ids() for i in subtree_ids(after[c])}
    assert set(before) - touched == set(after) - touched
    for nid, node in before.items():
        if nid in touched:
            continue
        if set(subtree_ids(node)) == set(subtree_ids(after[nid])):
            assert node == after[nid]


@pytest.mark.parametrize("case", range(0, len(CASES), 4))
def test_weave_determinism(case):
    g, text, out, trace = CASES[case]
    again, trace2 = weave(g, [aspect(text)])
    assert again == out and pretty_print(again) == pretty_print(out)
    assert trace.to_jsonl() == trace2.to_jsonl()
    assert check_well_formed(out) == []
