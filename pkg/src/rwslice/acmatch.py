"""AC canonical forms and matching modulo associativity-commutativity.

Nested applications of an assoc-comm operator are kept in a flattened
canonical form: one node with the argument list sorted by the total term
order. The transformations between nested and flattened shapes are
recorded as explicit events so that the rewrite engine can expose them
as trace steps.
"""

from __future__ import annotations

from collections import Counter
from itertools import combinations

from .terms import (
    Position,
    ROOT,
    Signature,
    Substitution,
    Symbol,
    Term,
    Variable,
    pretty,
    postorder_positions,
    replace_at,
    subterm_at,
    term_key,
)

# a transformation event: (position, whole term before, whole term after)
FlatEvent = tuple[Position, Term, Term]


def _same_op(a, b) -> bool:
    return isinstance(a, Symbol) and a == b


def one_level_flat(node: Term) -> tuple[Term, list[tuple[int, ...]]]:
    """Merge same-operator children into the argument list and sort it.

    Returns the new node plus, per new argument, its source path relative
    to the node: (i,) for a direct child, (i, j) for a grandchild hoisted
    out of a merged child. The sort is stable, so equal arguments keep
    their left-to-right order.
    """
    entries: list[tuple[tuple[int, ...], Term]] = []
    for i, arg in enumerate(node.args, start=1):
        if _same_op(arg.root, node.root):
            for j, sub in enumerate(arg.args, start=1):
                entries.append(((i, j), sub))
        else:
            entries.append(((i,), arg))
    entries.sort(key=lambda e: term_key(e[1]))
    new_node = Term(node.root, tuple(term for _, term in entries))
    return new_node, [src for src, _ in entries]


def needs_flat(node: Term, sig: Signature) -> bool:
    if not (isinstance(node.root, Symbol) and sig.is_ac(node.root) and node.args):
        return False
    if any(_same_op(a.root, node.root) for a in node.args):
        return True
    keys = [term_key(a) for a in node.args]
    return keys != sorted(keys)


def is_canonical(t: Term, sig: Signature) -> bool:
    return all(not needs_flat(subterm_at(t, p), sig) for p in postorder_positions(t))


def flatten(t: Term, sig: Signature) -> tuple[Term, list[FlatEvent]]:
    """AC canonical form of t plus the innermost-first flattening events."""
    events: list[FlatEvent] = []
    current = t
    while True:
        pos = _first_flat_position(current, sig)
        if pos is None:
            return current, events
        node = subterm_at(current, pos)
        new_node, _ = one_level_flat(node)
        after = replace_at(current, pos, new_node)
        events.append((pos, current, after))
        current = after


def flatten_term(t: Term, sig: Signature) -> Term:
    return flatten(t, sig)[0]


def _first_flat_position(t: Term, sig: Signature) -> Position | None:
    for p in postorder_positions(t):
        if needs_flat(subterm_at(t, p), sig):
            return p
    return None


def flat_merge_sources(before_node: Term) -> list[Position]:
    """Positions of the operator occurrences collapsed by a one-level
    flattening of before_node, relative to the node."""
    out = [ROOT]
    for i, arg in enumerate(before_node.args, start=1):
        if _same_op(arg.root, before_node.root):
            out.append(Position((i,)))
    return out


def spine_positions(node: Term) -> list[Position]:
    """Relative positions of the same-operator spine rooted at the node."""
    out = [ROOT]

    def rec(t: Term, rel: tuple[int, ...]):
        for i, arg in enumerate(t.args, start=1):
            if _same_op(arg.root, node.root):
                out.append(Position(rel + (i,)))
                rec(arg, rel + (i,))

    rec(node, ())
    return out


def spine_leaves(node: Term) -> list[tuple[Position, Term]]:
    """Subterms hanging off the same-operator spine, in path order."""
    out: list[tuple[Position, Term]] = []

    def rec(t: Term, rel: tuple[int, ...]):
        for i, arg in enumerate(t.args, start=1):
            if _same_op(arg.root, node.root):
                rec(arg, rel + (i,))
            else:
                out.append((Position(rel + (i,)), arg))

    rec(node, ())
    return out


def unflat_leaf_mapping(before_node: Term, after_node: Term) -> list[tuple[Position, int]]:
    """Pair each spine leaf of the regrouped node with the index of the flat
    argument it came from. Equal arguments are consumed left to right, which
    keeps the relative lexicographic order of identical subterms."""
    leaves = spine_leaves(after_node)
    used = [False] * len(before_node.args)
    mapping: list[tuple[Position, int]] = []
    for rel, leaf in leaves:
        for i, arg in enumerate(before_node.args):
            if not used[i] and arg == leaf:
                used[i] = True
                mapping.append((rel, i))
                break
        else:
            raise ValueError(
                f"{pretty(after_node)} does not regroup the arguments of {pretty(before_node)}"
            )
    if not all(used):
        raise ValueError(
            f"{pretty(after_node)} drops arguments of {pretty(before_node)}"
        )
    return mapping


def plan_unflat(whole: Term, at: Position, target: Term, sig: Signature) -> tuple[Term, list[FlatEvent]]:
    """Stepwise regrouping of the canonical subtree at `at` into `target`.

    `target` must flatten back to the existing subtree. Each emitted event
    reshapes one flattened node into the same-operator spine the target
    prescribes there; deeper differences are handled by later events.
    """
    events: list[FlatEvent] = []
    current = whole

    def rebuild(tgt: Term, op: Symbol, leaves_iter) -> Term:
        if _same_op(tgt.root, op):
            return Term(tgt.root, tuple(rebuild(a, op, leaves_iter) for a in tgt.args))
        return next(leaves_iter)

    def walk(pos: Position, tgt: Term):
        nonlocal current
        node = subterm_at(current, pos)
        if node == tgt:
            return
        if (
            isinstance(tgt.root, Symbol)
            and sig.is_ac(tgt.root)
            and _same_op(node.root, tgt.root)
        ):
            slots = spine_leaves(tgt)
            canon = [flatten_term(sub, sig) for _, sub in slots]
            if Counter(canon) != Counter(node.args):
                raise ValueError(
                    f"{pretty(tgt)} is not an AC regrouping of {pretty(node)}"
                )
            new_node = rebuild(tgt, tgt.root, iter(canon))
            if new_node != node:
                after = replace_at(current, pos, new_node)
                events.append((pos, current, after))
                current = after
            for (rel, sub), leaf in zip(slots, canon):
                if leaf != sub:
                    walk(pos.concat(rel), sub)
        else:
            if node.root != tgt.root or len(node.args) != len(tgt.args):
                raise ValueError(
                    f"target {pretty(tgt)} differs structurally from {pretty(node)}"
                )
            for i, sub in enumerate(tgt.args, start=1):
                walk(pos.child(i), sub)

    walk(at, target)
    return current, events


def match_modulo_ac(pattern: Term, subject: Term, sig: Signature) -> list[tuple[Substitution, Term]]:
    """All matchers of pattern against an AC-canonical subject.

    Each matcher is paired with the instantiated pattern, i.e. the nesting
    of the subject the rewrite step operates on after regrouping. The list
    order is deterministic: argument choices are explored by increasing
    index and increasing subset size, and duplicate substitutions arising
    from equal arguments are removed.
    """
    results: list[tuple[Substitution, Term]] = []
    seen: set[Substitution] = set()
    for raw in _match_gen(pattern, subject, {}, sig):
        sub = Substitution(raw)
        if sub not in seen:
            seen.add(sub)
            results.append((sub, sub.apply(pattern)))
    return results


def _match_gen(p: Term, s: Term, binding: dict, sig: Signature):
    if isinstance(p.root, Variable):
        bound = binding.get(p.root)
        if bound is None:
            extended = dict(binding)
            extended[p.root] = s
            yield extended
        elif bound == s:
            yield binding
        return
    if isinstance(s.root, Variable):
        return
    if sig.is_ac(p.root) and _same_op(s.root, p.root):
        pats = _pattern_spine(p)
        yield from _ac_args_match(pats, list(s.args), p.root, binding, sig)
        return
    if p.root != s.root or len(p.args) != len(s.args):
        return
    yield from _seq_match(p.args, s.args, binding, sig)


def _seq_match(ps, ss, binding, sig):
    if not ps:
        yield binding
        return
    for b in _match_gen(ps[0], ss[0], binding, sig):
        yield from _seq_match(ps[1:], ss[1:], b, sig)


def _pattern_spine(p: Term) -> list[Term]:
    out: list[Term] = []
    for a in p.args:
        if _same_op(a.root, p.root):
            out.extend(_pattern_spine(a))
        else:
            out.append(a)
    return out


def _ac_args_match(pats: list[Term], args: list[Term], op: Symbol, binding: dict, sig: Signature):
    """Backtracking multiset match of spine subpatterns against a flattened
    argument list. Variables absorb any nonempty subset (a single argument,
    or the flattened node over several); other subpatterns take exactly one
    argument each."""
    if not pats:
        if not args:
            yield binding
        return
    head, rest = pats[0], pats[1:]
    if isinstance(head.root, Variable):
        bound = binding.get(head.root)
        if bound is not None:
            need = list(bound.args) if _same_op(bound.root, op) else [bound]
            remaining = _consume(args, need)
            if remaining is not None:
                yield from _ac_args_match(rest, remaining, op, binding, sig)
            return
        # a variable must leave at least one argument per later subpattern
        max_take = len(args) - len(rest)
        for size in range(1, max_take + 1):
            for idxs in combinations(range(len(args)), size):
                value = args[idxs[0]] if size == 1 else Term(op, tuple(args[i] for i in idxs))
                extended = dict(binding)
                extended[head.root] = value
                remaining = [a for i, a in enumerate(args) if i not in idxs]
                yield from _ac_args_match(rest, remaining, op, extended, sig)
        return
    for i, arg in enumerate(args):
        for b in _match_gen(head, arg, binding, sig):
            remaining = args[:i] + args[i + 1 :]
            yield from _ac_args_match(rest, remaining, op, b, sig)


def _consume(args: list[Term], need: list[Term]) -> list[Term] | None:
    remaining = list(args)
    for item in need:
        try:
            remaining.remove(item)
        except ValueError:
            return None
    return remaining
