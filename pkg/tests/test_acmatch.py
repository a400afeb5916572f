import random

import pytest

from rwslice.acmatch import (
    flatten,
    flatten_term,
    match_modulo_ac,
    plan_unflat,
    spine_leaves,
    unflat_leaf_mapping,
)
from rwslice.terms import Position, Signature, Substitution, Term, Variable, pretty
from rwslice.theoryfile import parse_term

from genutil import ac_variants, oracle_ac_matchers, random_soup


@pytest.fixture
def sig():
    s = Signature()
    s.declare("f", 2, assoc=True, comm=True)
    s.declare("g", 1)
    s.declare("h", 2)
    for name in "abcd":
        s.declare(name, 0)
    return s


def T(text, sig, variables=None):
    return parse_term(text, sig, variables or set())


def test_flatten_nested(sig):
    t = T("f(b,f(b,f(a,c)))", sig)
    canon, events = flatten(t, sig)
    assert pretty(canon) == "f(a,b,b,c)"
    # innermost first: the inner pair collapses before the root
    assert [str(p) for p, _, _ in events] == ["2", "^"]
    for _, before, after in events:
        assert flatten_term(before, sig) == canon and flatten_term(after, sig) == canon


def test_flatten_fixpoint(sig):
    t = T("f(a,b)", sig)
    canon, events = flatten(t, sig)
    assert canon == t and events == []


def test_flatten_left_nested(sig):
    t = T("f(b,f(f(b,a),c))", sig)
    assert pretty(flatten_term(t, sig)) == "f(a,b,b,c)"


def test_flatten_idempotent(sig):
    rng = random.Random(5)
    soup_sig = _soup_sig()
    for _ in range(100):
        t = random_soup(rng, soup_sig)
        once = flatten_term(t, soup_sig)
        assert flatten_term(once, soup_sig) == once
        assert flatten(once, soup_sig)[1] == []


def _soup_sig():
    s = Signature()
    s.declare("cfg", 2, assoc=True, comm=True)
    s.declare("u", 1)
    s.declare("w", 1)
    s.declare("pair", 2)
    s.declare("k", 0)
    for name in "ab":
        s.declare(name, 0)
    return s


def test_flatten_preserves_leaf_multiset(sig):
    rng = random.Random(6)
    soup_sig = _soup_sig()
    for _ in range(100):
        t = random_soup(rng, soup_sig)
        canon = flatten_term(t, soup_sig)
        assert sorted(map(pretty, _non_ac_leaves(t, soup_sig))) == sorted(
            map(pretty, _non_ac_leaves(canon, soup_sig))
        )


def _non_ac_leaves(t, sig):
    if not (not isinstance(t.root, Variable) and sig.is_ac(t.root)):
        return [t]
    out = []
    for a in t.args:
        out.extend(_non_ac_leaves(a, sig))
    return out


def test_match_two_partitions(sig):
    pat = T("f(x,y)", sig, {"x", "y"})
    subj = T("f(a,b,c)", sig)
    found = match_modulo_ac(pat, subj, sig)
    assert len(found) == 6
    subs = {m for m, _ in found}
    x, y = Variable("x"), Variable("y")
    assert Substitution({x: T("a", sig), y: T("f(b,c)", sig)}) in subs
    # every matcher's shape flattens back to the subject
    for m, shape in found:
        assert shape == m.apply(pat)
        assert flatten_term(shape, sig) == subj
    assert subs == oracle_ac_matchers(pat, subj, sig)


def test_match_binary_both_orders(sig):
    pat = T("f(x,y)", sig, {"x", "y"})
    subj = T("f(a,b)", sig)
    found = [m for m, _ in match_modulo_ac(pat, subj, sig)]
    x, y = Variable("x"), Variable("y")
    assert found == [
        Substitution({x: T("a", sig), y: T("b", sig)}),
        Substitution({x: T("b", sig), y: T("a", sig)}),
    ]


def test_match_root_mismatch(sig):
    assert match_modulo_ac(T("g(x)", sig, {"x"}), T("f(a,b)", sig), sig) == []


def test_match_nested_pattern_spine(sig):
    pat = T("f(f(x,a),y)", sig, {"x", "y"})
    subj = T("f(a,b,c)", sig)
    subs = {m for m, _ in match_modulo_ac(pat, subj, sig)}
    assert subs == oracle_ac_matchers(pat, subj, sig)
    assert len(subs) == 2  # x in {b, c}, y takes the rest


def test_match_nonlinear_modulo(sig):
    pat = T("f(x,x)", sig, {"x"})
    assert match_modulo_ac(pat, T("f(a,a)", sig), sig)
    assert match_modulo_ac(pat, T("f(a,b)", sig), sig) == []
    # both halves of f(a,a,b,b) can be grouped as f(a,b)
    found = {m for m, _ in match_modulo_ac(pat, T("f(a,a,b,b)", sig), sig)}
    assert found == oracle_ac_matchers(pat, T("f(a,a,b,b)", sig), sig)


def test_matchers_deterministic(sig):
    pat = T("f(x,y)", sig, {"x", "y"})
    subj = T("f(a,b,c,d)", sig)
    first = match_modulo_ac(pat, subj, sig)
    second = match_modulo_ac(pat, subj, sig)
    assert first == second


def test_oracle_equivalence_small(sig):
    rng = random.Random(11)
    consts = ["a", "b", "c"]
    for _ in range(60):
        leaves = [rng.choice(consts) for _ in range(rng.randint(2, 4))]
        subj = flatten_term(T("f(" + ",".join(leaves) + ")", sig), sig)
        pat = _random_pattern(rng, sig)
        ours = {m for m, _ in match_modulo_ac(pat, subj, sig)}
        assert ours == oracle_ac_matchers(pat, subj, sig), (pretty(pat), pretty(subj))


def _random_pattern(rng, sig):
    slots = []
    names = ["x", "y", "x"]  # repeats make some patterns nonlinear
    for _ in range(rng.randint(2, 3)):
        kind = rng.random()
        if kind < 0.5:
            slots.append(T(names[rng.randrange(len(names))], sig, {"x", "y"}))
        elif kind < 0.8:
            slots.append(T(rng.choice("abc"), sig))
        else:
            slots.append(Term(sig.lookup("g", 1).symbol, (T(rng.choice(["x", "a"]), sig, {"x"}),)))
    f = sig.lookup("f", 2).symbol
    pat = slots[0]
    for s in slots[1:]:
        pat = Term(f, (pat, s))
    return pat


def test_plan_unflat_roundtrip(sig):
    subj = T("f(a,b,b,c)", sig)
    target = T("f(f(b,c),f(a,b))", sig)
    final, events = plan_unflat(subj, Position(), target, sig)
    assert final == target
    assert len(events) == 1
    for _, before, after in events:
        assert flatten_term(after, sig) == flatten_term(before, sig)


def test_plan_unflat_rejects_non_equivalent(sig):
    with pytest.raises(ValueError):
        plan_unflat(T("f(a,b)", sig), Position(), T("f(a,c)", sig), sig)


def test_unflat_leaf_mapping_stability(sig):
    before = T("f(a,b,b,c)", sig)
    after = T("f(f(b,c),f(a,b))", sig)
    mapping = unflat_leaf_mapping(before, after)
    # the first b (arg 2) lands at 1.1, the second (arg 3) at 2.2
    as_dict = {str(rel): idx for rel, idx in mapping}
    assert as_dict == {"1.1": 1, "1.2": 3, "2.1": 0, "2.2": 2}


def test_ac_variants_oracle_is_sane(sig):
    subj = T("f(a,b,c)", sig)
    variants = ac_variants(subj, sig)
    # 3 leaves: 3 binary shapes x 3! leaf orders = 12 nested + 6 flat = 18
    assert len(variants) == 18
    assert all(flatten_term(u, sig) == subj for u in variants)
