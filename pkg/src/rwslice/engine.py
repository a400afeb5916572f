"""Rewrite theories, equational normalization, and instrumented traces.

A rewrite step modulo the equational theory is exposed in fully expanded
form: equational simplification (oriented equations, builtin evaluation,
flattening) down to the canonical form, the regrouping steps an AC match
requires, one rule application, and the simplification of the result.
Every elementary transformation becomes one trace step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from . import builtin_ops
from .acmatch import (
    flat_merge_sources,
    flatten,
    flatten_term,
    match_modulo_ac,
    needs_flat,
    one_level_flat,
    plan_unflat,
    spine_leaves,
    unflat_leaf_mapping,
)
from .terms import (
    EMPTY_SUBST,
    Position,
    ROOT,
    Signature,
    Substitution,
    Symbol,
    Term,
    Variable,
    is_ground,
    postorder_positions,
    pretty,
    replace_at,
    subterm_at,
    vars_of,
)

DEFAULT_STEP_BUDGET = 10_000


class NoRuleApplicable(Exception):
    pass


class StepBudgetExceeded(Exception):
    pass


class MalformedStep(Exception):
    """A trace step that cannot be replayed against its theory."""


class TheoryError(Exception):
    pass


@dataclass(frozen=True)
class Rule:
    """Oriented rewrite rule or equation; the left-hand side is not a
    variable and binds every variable of the right-hand side."""

    name: str
    lhs: Term
    rhs: Term
    kind: str = "rule"  # rule | equation

    def __post_init__(self):
        if isinstance(self.lhs.root, Variable):
            raise TheoryError(f"{self.name}: left-hand side must not be a variable")
        missing = [v for v in vars_of(self.rhs) if v not in vars_of(self.lhs)]
        if missing:
            names = ", ".join(v.name for v in missing)
            raise TheoryError(f"{self.name}: unbound right-hand side variables {names}")
        if self.kind not in ("rule", "equation"):
            raise TheoryError(f"{self.name}: bad kind {self.kind}")

    def is_collapsing(self) -> bool:
        return isinstance(self.rhs.root, Variable)

    def is_left_linear(self) -> bool:
        return not self.repeated_variables()

    def repeated_variables(self) -> list[Variable]:
        """Variables occurring more than once in the left-hand side, in
        order of first occurrence."""
        counts: dict[Variable, int] = {}

        def walk(t: Term):
            if isinstance(t.root, Variable):
                counts[t.root] = counts.get(t.root, 0) + 1
            for a in t.args:
                walk(a)

        walk(self.lhs)
        return [v for v, n in counts.items() if n > 1]

    def redex_pattern(self) -> Term:
        return _to_pattern(self.lhs)

    def contractum_pattern(self) -> Term:
        return _to_pattern(self.rhs)


def _to_pattern(t: Term) -> Term:
    from .terms import HOLE_TERM

    if isinstance(t.root, Variable):
        return HOLE_TERM
    return Term(t.root, tuple(_to_pattern(a) for a in t.args))


class RewriteTheory:
    """Signature plus oriented equations and rewrite rules."""

    def __init__(
        self,
        signature: Signature,
        equations: list[Rule] | tuple[Rule, ...] = (),
        rules: list[Rule] | tuple[Rule, ...] = (),
        name: str = "",
    ):
        self.signature = signature
        self.equations = list(equations)
        self.rules = list(rules)
        self.name = name
        self._by_name: dict[str, Rule] = {}
        for r in self.equations:
            if r.kind != "equation":
                raise TheoryError(f"{r.name}: equations list holds kind {r.kind}")
            self._register(r)
        for r in self.rules:
            if r.kind != "rule":
                raise TheoryError(f"{r.name}: rules list holds kind {r.kind}")
            self._register(r)
        self._check_builtins()

    def _register(self, r: Rule):
        if r.name in self._by_name:
            raise TheoryError(f"duplicate rule name {r.name}")
        self._by_name[r.name] = r

    def _check_builtins(self):
        for r in self.equations + self.rules:
            root = r.lhs.root
            if isinstance(root, Symbol) and self.signature.is_builtin(root):
                raise TheoryError(
                    f"{r.name}: builtin operator {root.name} cannot head a left-hand side"
                )
        for decl in self.signature.ops():
            if decl.builtin:
                op = builtin_ops.REGISTRY.get(decl.symbol.name)
                if op is None:
                    raise TheoryError(f"no builtin implementation for {decl.symbol.name}")
                if op.arity != decl.symbol.arity:
                    raise TheoryError(
                        f"{decl.symbol.name}: builtin arity {op.arity}, declared {decl.symbol.arity}"
                    )

    def find_rule(self, name: str) -> Rule | None:
        return self._by_name.get(name)


@dataclass(frozen=True)
class TraceStep:
    kind: str  # rule | equation | flat | unflat | builtin
    rule_name: str | None
    position: Position
    matcher: Substitution
    before: Term
    after: Term


@dataclass
class InstrumentedTrace:
    theory: RewriteTheory
    initial: Term
    steps: list[TraceStep] = field(default_factory=list)

    def terms(self) -> list[Term]:
        return [self.initial] + [s.after for s in self.steps]

    def final(self) -> Term:
        return self.steps[-1].after if self.steps else self.initial

    def is_chained(self) -> bool:
        prev = self.initial
        for s in self.steps:
            if s.before != prev:
                return False
            prev = s.after
        return True


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def spend(self):
        if self.used >= self.limit:
            raise StepBudgetExceeded(f"more than {self.limit} elementary steps")
        self.used += 1


# an application candidate: (rule, matcher, regrouped subtree, rewrite
# position relative to the scanned node)
_Candidate = tuple[Rule, Substitution, Term, Position]


def _candidates_at(node: Term, rules: list[Rule], sig: Signature):
    """Deterministic candidate enumeration at one node: rules in declaration
    order; per rule, matches over the whole node first, then over proper
    sub-multisets of a flattened AC node (the remaining arguments stay put,
    larger groups first)."""
    for rule in rules:
        for sub, shape in match_modulo_ac(rule.lhs, node, sig):
            yield (rule, sub, shape, ROOT)
        root = rule.lhs.root
        if (
            isinstance(root, Symbol)
            and sig.is_ac(root)
            and isinstance(node.root, Symbol)
            and node.root == root
            and len(node.args) >= 3
        ):
            n = len(node.args)
            for size in range(n - 1, 1, -1):
                for idxs in combinations(range(n), size):
                    group = Term(node.root, tuple(node.args[i] for i in idxs))
                    for sub, shape in match_modulo_ac(rule.lhs, group, sig):
                        rest = tuple(node.args[i] for i in range(n) if i not in idxs)
                        target = Term(node.root, (shape,) + rest)
                        yield (rule, sub, target, Position((1,)))


def _scan(t: Term, rules: list[Rule], sig: Signature, choice=None):
    """First applicable candidate in leftmost-innermost position order,
    or the choice-designated one. Returns (node position, candidate)."""
    if choice is None:
        for q in postorder_positions(t):
            for cand in _candidates_at(subterm_at(t, q), rules, sig):
                return q, cand
        return None
    rule_name, q, matcher_index = choice
    wanted = [c for c in _candidates_at(subterm_at(t, q), rules, sig) if c[0].name == rule_name]
    if matcher_index >= len(wanted):
        return None
    return q, wanted[matcher_index]


def _emit_flatten(t: Term, th: RewriteTheory, budget: _Budget, out: list[TraceStep]) -> Term:
    canon, events = flatten(t, th.signature)
    for pos, before, after in events:
        budget.spend()
        out.append(TraceStep("flat", None, pos, EMPTY_SUBST, before, after))
    return canon


def _apply_candidate(
    t: Term,
    q: Position,
    cand: _Candidate,
    th: RewriteTheory,
    budget: _Budget,
    out: list[TraceStep],
) -> Term:
    rule, sub, target, rel = cand
    current, events = plan_unflat(t, q, target, th.signature)
    for pos, before, after in events:
        budget.spend()
        out.append(TraceStep("unflat", None, pos, EMPTY_SUBST, before, after))
    rewrite_pos = q.concat(rel)
    redex = subterm_at(current, rewrite_pos)
    assert redex == sub.apply(rule.lhs)
    after = replace_at(current, rewrite_pos, sub.apply(rule.rhs))
    budget.spend()
    out.append(TraceStep(rule.kind, rule.name, rewrite_pos, sub, current, after))
    return after


def _eval_builtin_at(t: Term, th: RewriteTheory):
    sig = th.signature
    for q in postorder_positions(t):
        node = subterm_at(t, q)
        root = node.root
        if isinstance(root, Symbol) and sig.is_builtin(root) and is_ground(node):
            op = builtin_ops.REGISTRY[root.name]
            value = builtin_ops.eval_builtin(op, node.args)
            if value is not None:
                return q, root.name, value
    return None


def _normalize_into(t: Term, th: RewriteTheory, budget: _Budget, out: list[TraceStep]) -> Term:
    t = _emit_flatten(t, th, budget, out)
    while True:
        hit = _eval_builtin_at(t, th)
        if hit is not None:
            q, opname, value = hit
            after = replace_at(t, q, value)
            budget.spend()
            out.append(TraceStep("builtin", opname, q, EMPTY_SUBST, t, after))
            t = _emit_flatten(after, th, budget, out)
            continue
        found = _scan(t, th.equations, th.signature)
        if found is None:
            return t
        q, cand = found
        t = _apply_candidate(t, q, cand, th, budget, out)
        t = _emit_flatten(t, th, budget, out)


def normalize(t: Term, th: RewriteTheory, max_steps: int | None = None) -> tuple[Term, list[TraceStep]]:
    """Equational canonical form of t with the steps taken to reach it.

    Strategy: flatten first, then repeatedly fire the leftmost-innermost
    builtin call or equation (declaration order, deterministic matcher
    order), re-flattening after each contraction."""
    budget = _Budget(DEFAULT_STEP_BUDGET if max_steps is None else max_steps)
    out: list[TraceStep] = []
    result = _normalize_into(t, th, budget, out)
    return result, out


def rewrite_step_modulo_E(
    t: Term,
    th: RewriteTheory,
    rule_choice: tuple[str, Position, int] | None = None,
    max_steps: int | None = None,
) -> tuple[Term, list[TraceStep]]:
    """One rule application modulo the equational theory, fully expanded:
    simplification of t, the regrouping steps the AC match needs, the rule
    step itself, and simplification of the result."""
    budget = _Budget(DEFAULT_STEP_BUDGET if max_steps is None else max_steps)
    out: list[TraceStep] = []
    canon = _normalize_into(t, th, budget, out)
    found = _scan(canon, th.rules, th.signature, rule_choice)
    if found is None:
        raise NoRuleApplicable(f"no rule applies to {pretty(canon)}")
    q, cand = found
    after = _apply_candidate(canon, q, cand, th, budget, out)
    _normalize_into(after, th, budget, out)
    return (out[-1].after if out else canon), out


def run(
    t0: Term,
    th: RewriteTheory,
    max_rule_steps: int,
    max_steps: int | None = None,
) -> InstrumentedTrace:
    """Deterministic instrumented run: up to max_rule_steps rule
    applications, stopping early when no rule applies."""
    budget = _Budget(DEFAULT_STEP_BUDGET if max_steps is None else max_steps)
    out: list[TraceStep] = []
    t = _normalize_into(t0, th, budget, out)
    for _ in range(max_rule_steps):
        found = _scan(t, th.rules, th.signature)
        if found is None:
            break
        q, cand = found
        t = _apply_candidate(t, q, cand, th, budget, out)
        t = _normalize_into(t, th, budget, out)
    return InstrumentedTrace(th, t0, out)


def run_until(
    t0: Term,
    end: Term,
    th: RewriteTheory,
    max_steps: int | None = None,
) -> InstrumentedTrace:
    """Follow the deterministic strategy until the canonical form of `end`
    shows up at a rule-step boundary. Raises NoRuleApplicable when the run
    stops elsewhere, StepBudgetExceeded when the budget runs out first."""
    target = flatten_term(end, th.signature)
    budget = _Budget(DEFAULT_STEP_BUDGET if max_steps is None else max_steps)
    out: list[TraceStep] = []
    t = _normalize_into(t0, th, budget, out)
    while t != target:
        found = _scan(t, th.rules, th.signature)
        if found is None:
            raise NoRuleApplicable(
                f"end state {pretty(end)} not reached; the run stops at {pretty(t)}"
            )
        q, cand = found
        t = _apply_candidate(t, q, cand, th, budget, out)
        t = _normalize_into(t, th, budget, out)
    return InstrumentedTrace(th, t0, out)


def check_step(step: TraceStep, th: RewriteTheory) -> bool:
    """Replay check: recompute the step's after term from its before term,
    kind, position, rule, and matcher."""
    try:
        node = subterm_at(step.before, step.position)
    except Exception:
        return False
    if step.kind in ("rule", "equation"):
        rule = th.find_rule(step.rule_name or "")
        if rule is None or rule.kind != step.kind:
            return False
        if step.matcher.apply(rule.lhs) != node:
            return False
        return step.after == replace_at(step.before, step.position, step.matcher.apply(rule.rhs))
    if step.kind == "flat":
        if not needs_flat(node, th.signature):
            return False
        new_node, _ = one_level_flat(node)
        return step.after == replace_at(step.before, step.position, new_node)
    if step.kind == "unflat":
        try:
            after_node = subterm_at(step.after, step.position)
        except Exception:
            return False
        if not (
            isinstance(node.root, Symbol)
            and th.signature.is_ac(node.root)
            and node.root == after_node.root
        ):
            return False
        try:
            unflat_leaf_mapping(node, after_node)
        except ValueError:
            return False
        if flatten_term(after_node, th.signature) != node:
            return False
        return step.after == replace_at(step.before, step.position, after_node)
    if step.kind == "builtin":
        root = node.root
        if not (isinstance(root, Symbol) and th.signature.is_builtin(root) and is_ground(node)):
            return False
        op = builtin_ops.REGISTRY.get(root.name)
        if op is None:
            return False
        value = builtin_ops.eval_builtin(op, node.args)
        if value is None:
            return False
        return step.after == replace_at(step.before, step.position, value)
    return False
