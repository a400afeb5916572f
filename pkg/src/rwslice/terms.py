"""Core term structures: symbols, positions, terms, substitutions, matching.

Every value here is immutable; operations build new terms. Argument
positions are 1-based access paths and the empty path addresses the root.
"""

from __future__ import annotations

import re
from dataclasses import dataclass


class PositionOutOfRange(Exception):
    """A position does not address a node of the given term."""


@dataclass(frozen=True, order=True)
class Position:
    """Access path in a term.

    The dataclass ordering (tuple comparison on paths) is exactly the
    lexicographic order on positions; the prefix order is a separate,
    partial relation (`is_prefix_of`).
    """

    path: tuple[int, ...] = ()

    def child(self, i: int) -> "Position":
        return Position(self.path + (i,))

    def concat(self, other: "Position") -> "Position":
        return Position(self.path + other.path)

    def is_prefix_of(self, other: "Position") -> bool:
        return other.path[: len(self.path)] == self.path

    def prefixes(self):
        """Every prefix from the root down to this position, inclusive."""
        for i in range(len(self.path) + 1):
            yield Position(self.path[:i])

    def is_root(self) -> bool:
        return not self.path

    @staticmethod
    def parse(text: str) -> "Position":
        text = text.strip()
        if text in ("^", ""):
            return Position()
        if not re.fullmatch(r"\d+(\.\d+)*", text):
            raise ValueError(f"malformed position {text!r}")
        return Position(tuple(int(part) for part in text.split(".")))

    def __str__(self) -> str:
        return ".".join(str(i) for i in self.path) if self.path else "^"


ROOT = Position()


@dataclass(frozen=True)
class Symbol:
    """Operator symbol; kind distinguishes the two reserved leaf symbols
    (context hole, slice bullet) and builtin operators from ordinary ones."""

    name: str
    arity: int
    kind: str = "constructor"  # constructor | defined | builtin | hole | bullet


@dataclass(frozen=True)
class Variable:
    name: str


HOLE = Symbol("□", 0, "hole")
BULLET = Symbol("•", 0, "bullet")


@dataclass(frozen=True)
class Term:
    """Ordered tree of symbols and variables.

    Arity is enforced loosely: a binary operator may carry more than two
    arguments (the flattened form used for assoc-comm operators); the
    signature check is the authoritative validation.
    """

    root: Symbol | Variable
    args: tuple["Term", ...] = ()

    def __post_init__(self):
        if isinstance(self.root, Variable):
            if self.args:
                raise ValueError("variables take no arguments")
            return
        if self.root.kind in ("hole", "bullet") and self.args:
            raise ValueError(f"{self.root.name} is a leaf symbol")
        n = len(self.args)
        if n != self.root.arity and not (self.root.arity == 2 and n > 2):
            raise ValueError(
                f"{self.root.name} declared with arity {self.root.arity}, got {n} arguments"
            )

    def __repr__(self) -> str:
        return f"Term<{pretty(self)}>"


HOLE_TERM = Term(HOLE)
BULLET_TERM = Term(BULLET)


def mk(root: Symbol, *args: Term) -> Term:
    return Term(root, tuple(args))


def var(name: str) -> Term:
    return Term(Variable(name))


def is_hole(t: Term) -> bool:
    return isinstance(t.root, Symbol) and t.root.kind == "hole"


def is_bullet(t: Term) -> bool:
    return isinstance(t.root, Symbol) and t.root.kind == "bullet"


def positions(t: Term) -> list[Position]:
    """All positions of t in preorder (ascending lexicographic) order.

    Hole positions are excluded, so for a context this is exactly the set
    of positions carrying a real symbol or variable.
    """
    out: list[Position] = []

    def walk(node: Term, pos: Position):
        if not is_hole(node):
            out.append(pos)
        for i, arg in enumerate(node.args, start=1):
            walk(arg, pos.child(i))

    walk(t, ROOT)
    return out


def postorder_positions(t: Term) -> list[Position]:
    """Positions with children before their parent (leftmost-innermost)."""
    out: list[Position] = []

    def walk(node: Term, pos: Position):
        for i, arg in enumerate(node.args, start=1):
            walk(arg, pos.child(i))
        if not is_hole(node):
            out.append(pos)

    walk(t, ROOT)
    return out


def subterm_at(t: Term, u: Position) -> Term:
    node = t
    for i in u.path:
        if not 1 <= i <= len(node.args):
            raise PositionOutOfRange(f"no position {u} in {pretty(t)}")
        node = node.args[i - 1]
    if is_hole(node):
        raise PositionOutOfRange(f"position {u} of {pretty(t)} is a hole")
    return node


def replace_at(t: Term, u: Position, r: Term) -> Term:
    """The term t with the subtree at u replaced by r."""

    def go(node: Term, depth: int) -> Term:
        if depth == len(u.path):
            return r
        i = u.path[depth]
        if not 1 <= i <= len(node.args):
            raise PositionOutOfRange(f"no position {u} in {pretty(t)}")
        new_args = list(node.args)
        new_args[i - 1] = go(node.args[i - 1], depth + 1)
        return Term(node.root, tuple(new_args))

    subterm_at(t, u)  # range check, including the hole restriction
    return go(t, 0)


def vars_of(t: Term) -> list[Variable]:
    """Variables of t in order of first occurrence."""
    seen: list[Variable] = []

    def walk(node: Term):
        if isinstance(node.root, Variable):
            if node.root not in seen:
                seen.append(node.root)
        for arg in node.args:
            walk(arg)

    walk(t)
    return seen


def var_positions(t: Term, v: Variable) -> list[Position]:
    return [p for p in positions(t) if subterm_at(t, p).root == v]


def is_ground(t: Term) -> bool:
    if isinstance(t.root, Variable):
        return False
    return all(is_ground(a) for a in t.args)


def contains_bullet(t: Term) -> bool:
    if is_bullet(t):
        return True
    return any(contains_bullet(a) for a in t.args)


def term_key(t: Term):
    """Total order key: root name, then node class, then arity, then
    arguments left to right."""
    if isinstance(t.root, Variable):
        return (t.root.name, 0)
    return (t.root.name, 1, len(t.args), tuple(term_key(a) for a in t.args))


class Substitution:
    """Finite mapping from variables to terms, applied simultaneously."""

    __slots__ = ("_bindings",)

    def __init__(self, bindings: dict[Variable, Term] | None = None):
        items: dict[Variable, Term] = {}
        for v, t in (bindings or {}).items():
            if not (isinstance(t.root, Variable) and t.root == v):
                items[v] = t
        self._bindings = items

    def domain(self) -> list[Variable]:
        return list(self._bindings)

    def get(self, v: Variable) -> Term | None:
        return self._bindings.get(v)

    def items(self):
        return self._bindings.items()

    def apply(self, t: Term) -> Term:
        if isinstance(t.root, Variable):
            return self._bindings.get(t.root, t)
        if not t.args:
            return t
        return Term(t.root, tuple(self.apply(a) for a in t.args))

    def __len__(self) -> int:
        return len(self._bindings)

    def __eq__(self, other) -> bool:
        return isinstance(other, Substitution) and self._bindings == other._bindings

    def __hash__(self) -> int:
        return hash(frozenset(self._bindings.items()))

    def __repr__(self) -> str:
        inner = ", ".join(
            f"{v.name}/{pretty(t)}"
            for v, t in sorted(self._bindings.items(), key=lambda kv: kv[0].name)
        )
        return "{" + inner + "}"


EMPTY_SUBST = Substitution()


def match(pattern: Term, subject: Term) -> Substitution | None:
    """Syntactic matcher: the unique substitution with pattern*s = subject,
    or None. Repeated pattern variables must bind syntactically equal
    subterms."""
    bindings: dict[Variable, Term] = {}

    def go(p: Term, s: Term) -> bool:
        if isinstance(p.root, Variable):
            seen = bindings.get(p.root)
            if seen is None:
                bindings[p.root] = s
                return True
            return seen == s
        if p.root != s.root or len(p.args) != len(s.args):
            return False
        return all(go(pa, sa) for pa, sa in zip(p.args, s.args))

    return Substitution(bindings) if go(pattern, subject) else None


def pretty(t: Term, ascii_bullet: bool = False) -> str:
    """Canonical printing: no whitespace, arguments comma-separated."""
    if isinstance(t.root, Variable):
        return t.root.name
    name = t.root.name
    if t.root.kind == "bullet" and ascii_bullet:
        name = "_"
    if not t.args:
        return name
    return name + "(" + ",".join(pretty(a, ascii_bullet) for a in t.args) + ")"


_NUMERAL_RE = re.compile(r"-?\d+")


def is_numeral_name(name: str) -> bool:
    return bool(_NUMERAL_RE.fullmatch(name))


def int_term(n: int) -> Term:
    return Term(Symbol(str(n), 0))


def term_int(t: Term) -> int | None:
    if isinstance(t.root, Symbol) and not t.args and is_numeral_name(t.root.name):
        return int(t.root.name)
    return None


TRUE = Term(Symbol("true", 0))
FALSE = Term(Symbol("false", 0))


def bool_term(b: bool) -> Term:
    return TRUE if b else FALSE


def term_bool(t: Term) -> bool | None:
    if t == TRUE:
        return True
    if t == FALSE:
        return False
    return None


class SignatureError(Exception):
    pass


@dataclass(frozen=True)
class OpDecl:
    symbol: Symbol
    assoc: bool = False
    comm: bool = False
    builtin: bool = False
    sort: str | None = None  # display only, never checked

    @property
    def ac(self) -> bool:
        return self.assoc and self.comm


class Signature:
    """Operator declarations keyed by name and arity."""

    def __init__(self):
        self._ops: dict[tuple[str, int], OpDecl] = {}

    def declare(
        self,
        name: str,
        arity: int,
        *,
        assoc: bool = False,
        comm: bool = False,
        builtin: bool = False,
        sort: str | None = None,
    ) -> Symbol:
        if not name:
            raise SignatureError("operator name must be nonempty")
        if name in (HOLE.name, BULLET.name):
            raise SignatureError(f"{name} is reserved")
        if is_numeral_name(name) or name in ("true", "false"):
            raise SignatureError(f"{name} is an implicit constant")
        if (name, arity) in self._ops:
            raise SignatureError(f"duplicate declaration of {name}/{arity}")
        if (assoc or comm) and not (assoc and comm):
            raise SignatureError(f"{name}: assoc and comm are only supported together")
        if assoc and comm and arity != 2:
            raise SignatureError(f"{name}: AC attributes require a binary operator")
        if builtin and (assoc or comm):
            raise SignatureError(f"{name}: builtin operators cannot be AC")
        sym = Symbol(name, arity, "builtin" if builtin else "constructor")
        self._ops[(name, arity)] = OpDecl(sym, assoc, comm, builtin, sort)
        return sym

    def lookup(self, name: str, arity: int) -> OpDecl | None:
        decl = self._ops.get((name, arity))
        if decl is None and arity > 2:
            # flattened AC nodes carry extra arguments over a binary symbol
            cand = self._ops.get((name, 2))
            if cand is not None and cand.ac:
                return cand
        return decl

    def decl_for(self, sym: Symbol) -> OpDecl | None:
        return self._ops.get((sym.name, sym.arity))

    def is_ac(self, sym) -> bool:
        if not isinstance(sym, Symbol):
            return False
        decl = self.decl_for(sym)
        return decl is not None and decl.ac

    def is_builtin(self, sym) -> bool:
        if not isinstance(sym, Symbol):
            return False
        decl = self.decl_for(sym)
        return decl is not None and decl.builtin

    def ops(self) -> list[OpDecl]:
        return list(self._ops.values())

    def check_term(self, t: Term, allow_variables: bool = True) -> None:
        """Validate symbols and arities against the declarations."""
        if isinstance(t.root, Variable):
            if not allow_variables:
                raise SignatureError(f"unexpected variable {t.root.name}")
            return
        root = t.root
        if root.kind in ("hole", "bullet"):
            pass
        elif is_numeral_name(root.name) or root.name in ("true", "false"):
            if t.args:
                raise SignatureError(f"{root.name} is a constant")
        else:
            decl = self.lookup(root.name, len(t.args))
            if decl is None:
                raise SignatureError(f"unknown operator {root.name}/{len(t.args)}")
            if len(t.args) > decl.symbol.arity and not decl.ac:
                raise SignatureError(f"{root.name} is not variadic")
        for a in t.args:
            self.check_term(a, allow_variables)
