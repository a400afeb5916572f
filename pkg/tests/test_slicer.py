import random

import pytest

from rwslice.engine import RewriteTheory, Rule, run
from rwslice.labeling import LabelSupply, label_step
from rwslice.slicer import (
    InvalidCriterion,
    ReplayFailure,
    SlicingCriterion,
    check_soundness,
    concretizes,
    origin_positions,
    relevant_positions,
    slice_term,
    trace_slice,
)
from rwslice.terms import (
    BULLET_TERM,
    Position,
    PositionOutOfRange,
    Signature,
    Term,
    Variable,
    positions,
    pretty,
)
from rwslice.theoryfile import parse_term

from genutil import soundness_case


def P(text):
    return Position.parse(text)


def T(text, sig=None, variables=None):
    return parse_term(text, sig, variables or set(), allow_bullet=True)


@pytest.fixture
def step_theory():
    sig = Signature()
    for name, arity in [("f", 2), ("g", 2), ("d", 2), ("s", 1), ("h", 1), ("a", 0), ("b", 0), ("c", 0), ("j", 1)]:
        sig.declare(name, arity)
    r = Rule("r", T("f(g(x,y),a)", sig, {"x", "y"}), T("d(s(y),y)", sig, {"x", "y"}))
    return RewriteTheory(sig, rules=[r])


@pytest.fixture
def labeled_step(step_theory):
    trace = run(T("d(f(g(a,h(b)),a),a)", step_theory.signature), step_theory, 1)
    return trace, label_step(trace.steps[0], step_theory, LabelSupply())


def independent_origin_scan(ls, w):
    """The origin relation recomputed directly from the two labelings."""
    out = set()
    path_labels = [ls.after_labeling[p] for p in w.prefixes() if p in ls.after_labeling]
    for v, lv in ls.before_labeling.items():
        if any(lv <= lp for lp in path_labels):
            out.add(v)
    return out


def test_origin_positions_golden(labeled_step):
    _, ls = labeled_step
    assert origin_positions(ls, P("1.2")) == {P("1.1.2"), P("1"), P("1.1"), P("1.2"), P("^")}


def test_origin_positions_context_only(labeled_step):
    _, ls = labeled_step
    # a context position traces back to exactly its own prefixes in the context
    assert origin_positions(ls, P("2")) == {P("^"), P("2")}


def test_origin_positions_out_of_range(labeled_step):
    _, ls = labeled_step
    with pytest.raises(PositionOutOfRange):
        origin_positions(ls, P("3.7"))


def test_origin_positions_collapsing_brute_force():
    sig = Signature()
    sig.declare("f", 3)
    sig.declare("h", 2)
    sig.declare("a", 0)
    sig.declare("b", 0)
    rule = Rule("fxyx", T("f(x,y,x)", sig, {"x", "y"}), Term(Variable("y")))
    th = RewriteTheory(sig, rules=[rule])
    trace = run(T("h(f(a,b,a),b)", sig), th, 1)
    ls = label_step(trace.steps[0], th, LabelSupply())
    got = origin_positions(ls, P("1"))
    assert got == independent_origin_scan(ls, P("1"))
    assert got == {P("^"), P("1"), P("1.1"), P("1.2"), P("1.3")}


def test_origin_monotonic_in_position(labeled_step):
    _, ls = labeled_step
    for w in positions(ls.step.after):
        for prefix in w.prefixes():
            assert origin_positions(ls, prefix) <= origin_positions(ls, w)


def test_relevant_positions_empty_criterion(labeled_step):
    trace, ls = labeled_step
    sets = relevant_positions(trace, [ls], frozenset())
    assert sets == [frozenset(), frozenset()]


def test_relevant_positions_single_step(labeled_step):
    trace, ls = labeled_step
    sets = relevant_positions(trace, [ls], SlicingCriterion.of({P("1.2")}))
    assert sets[1] == {P("1.2")}
    assert sets[0] == {P("1.1.2"), P("1"), P("1.1"), P("1.2"), P("^")}


def test_relevant_positions_two_step_chain():
    sig = Signature()
    for name, arity in [("f", 1), ("g", 1), ("m", 1), ("a", 0), ("b", 0)]:
        sig.declare(name, arity)
    r1 = Rule("r1", T("f(x)", sig, {"x"}), T("b", sig))
    r2 = Rule("r2", T("g(b)", sig), T("m(a)", sig))
    th = RewriteTheory(sig, [], [r1, r2])
    trace = run(T("g(f(a))", sig), th, 10)
    labeled = [label_step(s, th, LabelSupply()) for s in trace.steps]
    sets = relevant_positions(trace, labeled, frozenset({Position()}))
    # recompute each set with the in-test scan
    expect = [frozenset({Position()})]
    for ls in reversed(labeled):
        acc = set()
        for w in expect[0]:
            acc |= independent_origin_scan(ls, w)
        expect.insert(0, frozenset(acc))
    assert sets == expect
    assert sets[2] == {P("^")}
    # m's join carries both redex labels, so all of g(b) is relevant
    assert sets[1] == {P("^"), P("1")}
    assert sets[0] == {P("^"), P("1")}


def test_relevant_positions_invalid_criterion(labeled_step):
    trace, ls = labeled_step
    with pytest.raises(InvalidCriterion):
        relevant_positions(trace, [ls], frozenset({P("9.9")}))


def test_slice_golden(step_theory):
    t = T("d(f(g(a,h(b)),a),a)", step_theory.signature)
    got = slice_term(t, {P("1.1.2"), P("1.2")})
    assert pretty(got) == "d(f(g(•,h(•)),a),•)"


def test_slice_full_and_empty(step_theory):
    t = T("d(f(g(a,h(b)),a),a)", step_theory.signature)
    assert slice_term(t, positions(t)) == t
    assert slice_term(t, set()) == BULLET_TERM
    with pytest.raises(PositionOutOfRange):
        slice_term(t, {P("4")})


def test_slice_prefix_closure(step_theory):
    t = T("d(f(g(a,h(b)),a),a)", step_theory.signature)
    p = {P("1.1.2"), P("1.2")}
    closed = {prefix for w in p for prefix in w.prefixes()}
    assert slice_term(t, p) == slice_term(t, closed)


def test_concretizes_examples(step_theory):
    sig = step_theory.signature
    sl = T("d(f(g(•,h(•)),a),•)", sig)
    assert concretizes(sl, T("d(f(g(c,h(c)),a),j(b))", sig))
    t = T("d(f(g(a,h(b)),a),a)", sig)
    assert concretizes(t, t)
    assert not concretizes(sl, T("d(f(g(c,c),a),b)", sig))


def test_trace_slice_single_step(step_theory, labeled_step):
    trace, _ = labeled_step
    ts = trace_slice(trace, {P("1.2")})
    assert [pretty(t) for t in ts.glued_terms()] == [
        "d(f(g(•,h(•)),a),•)",
        "d(d(•,h(•)),•)",
    ]
    assert len(ts.steps) == 1 and ts.steps[0].rule_name == "r"
    assert ts.sliced_size <= ts.original_size
    assert 0 <= ts.reduction_percent <= 100


def test_trace_slice_full_criterion_keeps_everything():
    # non-erasing elementary theory: a full criterion keeps every symbol
    sig = Signature()
    sig.declare("p", 1)
    sig.declare("q", 2)
    sig.declare("a", 0)
    r = Rule("r", T("p(x)", sig, {"x"}), T("q(x,x)", sig, {"x"}))
    th = RewriteTheory(sig, rules=[r])
    trace = run(T("p(p(a))", sig), th, 10)
    ts = trace_slice(trace, positions(trace.final()))
    assert ts.slices == trace.terms()
    assert len(ts.steps) == len(trace.steps)
    assert ts.reduction_percent == 0.0


def test_trace_slice_collapsing_nonlinear():
    sig = Signature()
    sig.declare("f", 3)
    sig.declare("h", 2)
    sig.declare("a", 0)
    sig.declare("b", 0)
    rule = Rule("fxyx", T("f(x,y,x)", sig, {"x", "y"}), Term(Variable("y")))
    th = RewriteTheory(sig, rules=[rule])
    trace = run(T("h(f(a,b,a),b)", sig), th, 1)
    ts = trace_slice(trace, {P("1")})
    assert [pretty(t) for t in ts.glued_terms()] == ["h(f(a,b,a),•)", "h(b,•)"]


def test_trace_slice_drops_context_only_steps():
    # two independent redexes; observing one side drops the other side's step
    sig = Signature()
    sig.declare("pair", 2)
    sig.declare("p", 1)
    sig.declare("a", 0)
    sig.declare("b", 0)
    r = Rule("r", T("p(x)", sig, {"x"}), T("b", sig))
    th = RewriteTheory(sig, rules=[r])
    trace = run(T("pair(p(a),p(a))", sig), th, 2)
    assert len(trace.steps) == 2
    ts = trace_slice(trace, {P("1")})
    kept = [s.index for s in ts.steps]
    assert kept == [0]
    # the dropped step's slices coincide
    assert ts.slices[1] == ts.slices[2]


def test_redex_pattern_preserved_in_retained_rule_steps(step_theory):
    trace = run(T("d(f(g(a,h(b)),a),a)", step_theory.signature), step_theory, 1)
    ts = trace_slice(trace, {P("1.2")})
    rule = step_theory.find_rule("r")
    for s in ts.steps:
        if s.kind != "rule":
            continue
        for w in positions(rule.redex_pattern()):
            node = s.before_slice
            for i in s.position.concat(w).path:
                node = node.args[i - 1]
            assert not (hasattr(node.root, "kind") and node.root.kind == "bullet")


def test_check_soundness_fig_style(step_theory, labeled_step):
    trace, _ = labeled_step
    ts = trace_slice(trace, {P("1.2")})
    conc = T("d(f(g(c,h(c)),a),j(b))", step_theory.signature)
    assert check_soundness(ts, step_theory, conc) is True


def test_check_soundness_minimal_concretization(step_theory, labeled_step):
    trace, _ = labeled_step
    ts = trace_slice(trace, {P("1.2")})
    # replace opaque leaves by fresh constants
    sig2 = Signature()
    fresh = Term(sig2.declare("z0", 0))

    def fill(t):
        if hasattr(t.root, "kind") and t.root.kind == "bullet":
            return fresh
        return Term(t.root, tuple(fill(a) for a in t.args))

    assert check_soundness(ts, step_theory, fill(ts.slices[0])) is True


def test_check_soundness_rejects_non_concretization(step_theory, labeled_step):
    trace, _ = labeled_step
    ts = trace_slice(trace, {P("1.2")})
    with pytest.raises(ValueError):
        check_soundness(ts, step_theory, T("a", step_theory.signature))


def test_producer_consumer_twenty_steps_sliceable():
    from rwslice import bundled_example_path
    from rwslice.theoryfile import parse_theory
    from genutil import random_concretization

    th = parse_theory(bundled_example_path("producer_consumer.rwt").read_text())
    trace = run(T("cfg(tok,prod(0),cons(0,0))", th.signature), th, 20)
    assert sum(1 for s in trace.steps if s.kind == "rule") == 20
    ts = trace_slice(trace, {P("1.2")})
    assert ts.reduction_percent > 0
    rng = random.Random(0)
    conc = random_concretization(rng, th.signature, ts.slices[0])
    assert check_soundness(ts, th, conc) is True


def test_check_soundness_randomized_smoke():
    rng = random.Random(42)
    for category in ("elementary", "collapsing", "nonlinear", "builtin", "ac"):
        for _ in range(25):
            th, ts, conc = soundness_case(rng, category)
            assert check_soundness(ts, th, conc) is True


def test_stats_metrics(step_theory, labeled_step):
    trace, _ = labeled_step
    ts = trace_slice(trace, {P("1.2")})
    original = " -> ".join(pretty(t) for t in trace.terms())
    assert ts.original_size == len(original)
    glued = " -> ".join(pretty(t) for t in ts.glued_terms())
    assert ts.sliced_size == len(glued)
    assert ts.reduction_percent == pytest.approx(
        100.0 * (1 - ts.sliced_size / ts.original_size)
    )
