"""Position labelings for rewrite steps.

Composite labels are finite sets of atomic labels drawn from a monotone
supply. A labeled rewrite step decorates both of its terms: context
symbols keep their labels across the step, the contractum carries the
join of all redex-pattern labels, and substitution-introduced subterms
are labeled identically on both sides. Collapsing rules, rules with
repeated left-hand-side variables, builtin calls, and the flat/unflat
transformations of assoc-comm operators each extend this scheme so that
every symbol of the target term traces back to its true origins.
"""

from __future__ import annotations

from dataclasses import dataclass

from .acmatch import flat_merge_sources, one_level_flat, spine_positions, unflat_leaf_mapping
from .engine import MalformedStep, RewriteTheory, Rule, TraceStep, check_step
from .terms import (
    HOLE_TERM,
    Position,
    ROOT,
    Substitution,
    Term,
    Variable,
    positions,
    pretty,
    replace_at,
    subterm_at,
    var_positions,
    vars_of,
)

Label = frozenset  # of atom ids


class LabelSupply:
    """Monotone source of fresh atomic labels."""

    def __init__(self, start: int = 0):
        self._next = start

    def fresh(self) -> int:
        value = self._next
        self._next += 1
        return value


_GREEK = "αβγδεζηθικλμ" \
         "νξοπρστυφχψω"


def atom_text(atom: int) -> str:
    """Display name of an atomic label (Greek letters, then numbered)."""
    base = _GREEK[atom % len(_GREEK)]
    round_no = atom // len(_GREEK)
    return base + (str(round_no + 1) if round_no else "")


def label_text(label: Label) -> str:
    return "".join(atom_text(a) for a in sorted(label))


class Labeling(dict):
    """Partial map from positions to composite labels."""

    def cod(self) -> frozenset:
        out: frozenset = frozenset()
        for l in self.values():
            out |= l
        return out


@dataclass(frozen=True)
class LabeledStep:
    step: TraceStep
    before_labeling: Labeling
    after_labeling: Labeling


def initial_labeling(t: Term, supply: LabelSupply) -> Labeling:
    """Distinct fresh singleton labels on every non-hole position of t,
    assigned in preorder."""
    return Labeling({p: frozenset({supply.fresh()}) for p in positions(t)})


def label_rule(rule: Rule, supply: LabelSupply) -> tuple[Labeling, Labeling]:
    """Labelings for the rule's redex and contractum patterns: the redex
    pattern gets an initial labeling, every contractum-pattern symbol gets
    the join of all redex labels. Variables are never labeled; a collapsing
    rule therefore yields an empty contractum labeling."""
    lhs_lab = initial_labeling(rule.redex_pattern(), supply)
    joined = lhs_lab.cod()
    rhs_lab = Labeling({p: joined for p in positions(rule.contractum_pattern())})
    return lhs_lab, rhs_lab


def label_substitution(
    sub: Substitution, supply: LabelSupply, order: list[Variable] | None = None
) -> dict[Variable, Labeling]:
    """One initial labeling per binding; codomains are pairwise disjoint
    because they draw from the same monotone supply."""
    if order is None:
        order = sorted(sub.domain(), key=lambda v: v.name)
    out: dict[Variable, Labeling] = {}
    for v in order:
        bound = sub.get(v)
        if bound is not None:
            out[v] = initial_labeling(bound, supply)
    return out


def label_step(step: TraceStep, th: RewriteTheory, supply: LabelSupply) -> LabeledStep:
    """Labeled version of one elementary trace step."""
    if not check_step(step, th):
        raise MalformedStep(
            f"{step.kind} step at {step.position} does not replay: "
            f"{pretty(step.before)} -> {pretty(step.after)}"
        )
    if step.kind in ("rule", "equation"):
        return _label_contraction(step, th, supply)
    if step.kind == "builtin":
        return _label_builtin(step, supply)
    if step.kind == "flat":
        before_lab = initial_labeling(step.before, supply)
        return LabeledStep(step, before_lab, _derive_flat(step, before_lab))
    if step.kind == "unflat":
        before_lab = initial_labeling(step.before, supply)
        return LabeledStep(step, before_lab, _derive_unflat(step, before_lab))
    raise MalformedStep(f"unknown step kind {step.kind}")


def _label_contraction(step: TraceStep, th: RewriteTheory, supply: LabelSupply) -> LabeledStep:
    rule = th.find_rule(step.rule_name or "")
    q = step.position
    sub = step.matcher
    # supply order: rule first, then context, then bindings in order of
    # first occurrence in the left-hand side
    lhs_lab, rhs_lab = label_rule(rule, supply)
    context = replace_at(step.before, q, HOLE_TERM)
    ctx_lab = initial_labeling(context, supply)
    order = vars_of(rule.lhs)
    sub_labs = label_substitution(sub, supply, order)

    before_lab = Labeling()
    after_lab = Labeling()
    for p, l in ctx_lab.items():
        before_lab[p] = l
        after_lab[p] = l
    for w, l in lhs_lab.items():
        before_lab[q.concat(w)] = l
    for w, l in rhs_lab.items():
        after_lab[q.concat(w)] = l
    for v in order:
        lab_v = sub_labs.get(v)
        if lab_v is None:
            continue
        for occ in var_positions(rule.lhs, v):
            base = q.concat(occ)
            for w, l in lab_v.items():
                before_lab[base.concat(w)] = l
        for occ in var_positions(rule.rhs, v):
            base = q.concat(occ)
            for w, l in lab_v.items():
                after_lab[base.concat(w)] = l

    if rule.is_collapsing():
        # the binding placed at the rewrite position keeps the joined
        # redex-pattern labels on its root
        after_lab[q] = lhs_lab.cod() | after_lab[q]
    for v in rule.repeated_variables():
        after_lab[q] = after_lab[q] | sub_labs[v].cod()
    return LabeledStep(step, before_lab, after_lab)


def _label_builtin(step: TraceStep, supply: LabelSupply) -> LabeledStep:
    q = step.position
    call = subterm_at(step.before, q)
    before_lab = initial_labeling(step.before, supply)
    joined: frozenset = frozenset()
    for i in range(1, len(call.args) + 1):
        arg_pos = q.child(i)
        for w in positions(call.args[i - 1]):
            joined |= before_lab[arg_pos.concat(w)]
    after_lab = Labeling()
    for p in positions(step.after):
        after_lab[p] = joined if q.is_prefix_of(p) else before_lab[p]
    return LabeledStep(step, before_lab, after_lab)


def _derive_flat(step: TraceStep, before_lab: Labeling) -> Labeling:
    """One flattening transformation: the collapsed operator occurrences
    join into the label of the flattened root; every moved argument keeps
    its labels."""
    q = step.position
    bnode = subterm_at(step.before, q)
    _, sources = one_level_flat(bnode)
    joined: frozenset = frozenset()
    for rel in flat_merge_sources(bnode):
        joined |= before_lab[q.concat(rel)]
    after_lab = Labeling({p: l for p, l in before_lab.items() if not q.is_prefix_of(p)})
    after_lab[q] = joined
    for i, src in enumerate(sources, start=1):
        src_pos = q.concat(Position(src))
        src_term = subterm_at(step.before, src_pos)
        dst_pos = q.child(i)
        for w in positions(src_term):
            after_lab[dst_pos.concat(w)] = before_lab[src_pos.concat(w)]
    return after_lab


def _derive_unflat(step: TraceStep, before_lab: Labeling) -> Labeling:
    """One unflattening transformation: every operator of the created spine
    copies the label of the flattened node; arguments keep their labels,
    equal ones assigned in lexicographic position order."""
    q = step.position
    bnode = subterm_at(step.before, q)
    anode = subterm_at(step.after, q)
    after_lab = Labeling({p: l for p, l in before_lab.items() if not q.is_prefix_of(p)})
    src_label = before_lab[q]
    for rel in spine_positions(anode):
        after_lab[q.concat(rel)] = src_label
    for rel, idx in unflat_leaf_mapping(bnode, anode):
        src_pos = q.child(idx + 1)
        dst_pos = q.concat(rel)
        for w in positions(bnode.args[idx]):
            after_lab[dst_pos.concat(w)] = before_lab[src_pos.concat(w)]
    return after_lab


def label_ac_segment(steps: list[TraceStep], supply: LabelSupply) -> list[LabeledStep]:
    """Chained labeling of a flat/unflat transformation sequence: the first
    term gets an initial labeling and each step's result labeling feeds the
    next step."""
    out: list[LabeledStep] = []
    current: Labeling | None = None
    prev_after: Term | None = None
    for step in steps:
        if step.kind not in ("flat", "unflat"):
            raise MalformedStep(f"segment step has kind {step.kind}")
        if prev_after is not None and step.before != prev_after:
            raise MalformedStep("segment steps are not chained")
        if current is None:
            current = initial_labeling(step.before, supply)
        derive = _derive_flat if step.kind == "flat" else _derive_unflat
        after_lab = derive(step, current)
        out.append(LabeledStep(step, current, after_lab))
        current = after_lab
        prev_after = step.after
    return out


def render_labeled(t: Term, labeling: Labeling, pos: Position = ROOT) -> str:
    """Debug rendering of a labeled term: singleton labels as sym^a,
    composite ones as sym^{ab}."""
    if isinstance(t.root, Variable):
        name = t.root.name
    else:
        name = t.root.name
    label = labeling.get(pos)
    if label:
        text = label_text(label)
        name += "^" + (text if len(label) == 1 else "{" + text + "}")
    if not t.args:
        return name
    inner = ",".join(render_labeled(a, labeling, pos.child(i)) for i, a in enumerate(t.args, 1))
    return name + "(" + inner + ")"
