"""
Nominal Module - Freshness and alpha-equivalence

Implements the freshness judgment ctx |- a # l, alpha-equivalence
ctx |- l ~ r, permutation difference sets, instantiation of freshness
contexts under a substitution and the "substitution respects context" check.
Every judgment is syntax directed and decided by one structural recursion.
"""

from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, Iterator, Optional, Tuple

from services.errors import FreshnessViolation
from services.terms import (
    Abstraction, Application, Atom, Permutation, Substitution, Suspension,
    TermOrHedge, Var, apply_permutation, apply_substitution, as_hedge,
    atoms_of, render, suspend, variable_key,
)


@dataclass(frozen=True)
class FreshnessConstraint:
    """a # chi: atom a must not occur free in any instance of chi."""
    atom: Atom
    var: Var

    def sort_key(self) -> Tuple:
        return (variable_key(self.var), self.atom.name)

    def __str__(self) -> str:
        return f"{self.atom} # {self.var}"


@dataclass(frozen=True)
class FreshnessContext:
    """A finite set of freshness constraints."""
    constraints: FrozenSet[FreshnessConstraint] = field(default_factory=frozenset)

    @classmethod
    def of(cls, *pairs: Tuple[Atom, Var]) -> "FreshnessContext":
        return cls(frozenset(FreshnessConstraint(a, v) for a, v in pairs))

    @classmethod
    def from_constraints(cls, constraints: Iterable[FreshnessConstraint]) -> "FreshnessContext":
        return cls(frozenset(constraints))

    def holds(self, atom: Atom, var: Var) -> bool:
        return FreshnessConstraint(atom, var) in self.constraints

    def atoms_for(self, var: Var) -> FrozenSet[Atom]:
        return frozenset(c.atom for c in self.constraints if c.var == var)

    def variables(self) -> FrozenSet[Var]:
        return frozenset(c.var for c in self.constraints)

    def union(self, other: "FreshnessContext") -> "FreshnessContext":
        return FreshnessContext(self.constraints | other.constraints)

    def with_constraints(self, atoms: Iterable[Atom], var: Var) -> "FreshnessContext":
        return FreshnessContext(self.constraints | frozenset(FreshnessConstraint(a, var) for a in atoms))

    def without_variable(self, var: Var) -> "FreshnessContext":
        return FreshnessContext(frozenset(c for c in self.constraints if c.var != var))

    def restrict(self, variables: Iterable[Var]) -> "FreshnessContext":
        keep = frozenset(variables)
        return FreshnessContext(frozenset(c for c in self.constraints if c.var in keep))

    def issubset(self, other: "FreshnessContext") -> bool:
        return self.constraints <= other.constraints

    def atoms(self) -> FrozenSet[Atom]:
        return frozenset(c.atom for c in self.constraints)

    def sorted(self) -> Tuple[FreshnessConstraint, ...]:
        return tuple(sorted(self.constraints, key=FreshnessConstraint.sort_key))

    def __iter__(self) -> Iterator[FreshnessConstraint]:
        return iter(self.sorted())

    def __len__(self) -> int:
        return len(self.constraints)

    def __str__(self) -> str:
        return "{" + ", ".join(str(c) for c in self.sorted()) + "}"


EMPTY_CONTEXT = FreshnessContext()


@atoms_of.register
def _(x: FreshnessContext) -> FrozenSet[Atom]:
    return x.atoms()


@dataclass(frozen=True)
class TermInContext:
    """A freshness context paired with a term or hedge."""
    context: FreshnessContext
    body: TermOrHedge

    def __str__(self) -> str:
        return f"<{self.context}, {render(self.body)}>"


@atoms_of.register
def _(x: TermInContext) -> FrozenSet[Atom]:
    return x.context.atoms() | atoms_of(x.body)


def derive_fresh(ctx: FreshnessContext, a: Atom, l: TermOrHedge) -> bool:
    """
    Decide ctx |- a # l.

    Args:
        ctx: Freshness context
        a: The atom
        l: Term or hedge

    Returns:
        bool: True iff a is provably fresh in l
    """
    if isinstance(l, (tuple, list)):
        return all(derive_fresh(ctx, a, e) for e in l)
    if isinstance(l, Atom):
        return a != l
    if isinstance(l, Suspension):
        return ctx.holds(l.perm.inverse().act(a), l.var)
    if isinstance(l, Abstraction):
        return a == l.atom or derive_fresh(ctx, a, l.body)
    if isinstance(l, Application):
        return all(derive_fresh(ctx, a, e) for e in l.args)
    raise TypeError(f"not a term or hedge: {l!r}")


def diff_set(p1: Permutation, p2: Permutation) -> FrozenSet[Atom]:
    """ds(p1, p2) = {a | p1.a != p2.a}, over the union of both supports."""
    candidates = p1.atoms() | p2.atoms()
    return frozenset(a for a in candidates if p1.act(a) != p2.act(a))


def alpha_eq(ctx: FreshnessContext, l: TermOrHedge, r: TermOrHedge) -> bool:
    """
    Decide ctx |- l ~ r.

    Abstractions with equal binders compare bodies directly; otherwise
    a.t ~ b.s needs t ~ (a b).s and a # s. Suspensions of the same
    variable are equal when every atom their permutations disagree on is
    fresh for the variable.
    """
    if isinstance(l, (tuple, list)) or isinstance(r, (tuple, list)):
        left, right = as_hedge(l), as_hedge(r)
        if len(left) != len(right):
            return False
        return all(alpha_eq(ctx, x, y) for x, y in zip(left, right))
    if isinstance(l, Atom):
        return l == r
    if isinstance(l, Suspension):
        if not isinstance(r, Suspension) or l.var != r.var:
            return False
        return all(ctx.holds(a, l.var) for a in diff_set(l.perm, r.perm))
    if isinstance(l, Abstraction):
        if not isinstance(r, Abstraction):
            return False
        if l.atom == r.atom:
            return alpha_eq(ctx, l.body, r.body)
        swapped = apply_permutation(Permutation.swap(l.atom, r.atom), r.body)
        return alpha_eq(ctx, l.body, swapped) and derive_fresh(ctx, l.atom, r.body)
    if isinstance(l, Application):
        if not isinstance(r, Application) or l.fun != r.fun or len(l.args) != len(r.args):
            return False
        return all(alpha_eq(ctx, x, y) for x, y in zip(l.args, r.args))
    raise TypeError(f"not a term or hedge: {l!r}")


def respects(s: Substitution, ctx: FreshnessContext,
             under: Optional[FreshnessContext] = None) -> bool:
    """
    Check that every a # chi in ctx stays derivable after substitution.

    Args:
        s: The substitution
        ctx: Constraints that must survive
        under: Context to derive in; defaults to ctx itself

    Returns:
        bool: True iff under |- a # (chi s) for every a # chi in ctx
    """
    judge = ctx if under is None else under
    return all(
        derive_fresh(judge, c.atom, apply_substitution(suspend(c.var), s))
        for c in ctx.constraints
    )


def _emit(a: Atom, x: TermOrHedge, out: set) -> None:
    if isinstance(x, (tuple, list)):
        for e in x:
            _emit(a, e, out)
    elif isinstance(x, Atom):
        if a == x:
            raise FreshnessViolation(a, render(x))
    elif isinstance(x, Suspension):
        out.add(FreshnessConstraint(x.perm.inverse().act(a), x.var))
    elif isinstance(x, Abstraction):
        if a != x.atom:
            _emit(a, x.body, out)
    elif isinstance(x, Application):
        for e in x.args:
            _emit(a, e, out)
    else:
        raise TypeError(f"not a term or hedge: {x!r}")


def fresh_requirements(a: Atom, x: TermOrHedge) -> FreshnessContext:
    """
    The smallest context under which a # x holds.

    Raises:
        FreshnessViolation: if a occurs free in x
    """
    out: set = set()
    _emit(a, x, out)
    return FreshnessContext(frozenset(out))


def instantiate_context(ctx: FreshnessContext, s: Substitution) -> FreshnessContext:
    """
    Compute the smallest context G with G |- a # (chi s) for each a # chi in ctx.

    The freshness rules are run backwards; constraints are emitted exactly at
    suspension leaves.

    Raises:
        FreshnessViolation: if some a occurs free in chi s
    """
    out: set = set()
    for c in ctx.constraints:
        _emit(c.atom, apply_substitution(suspend(c.var), s), out)
    return FreshnessContext(frozenset(out))
