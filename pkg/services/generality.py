"""
Generality Module - Equivariance, the more-general relation and minimization

Decides whether an atom permutation relates two pairs of terms (used when
merging store entries), whether one term-in-context is more general than
another, and reduces a set of generalizations to its least general
representatives.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple, TypeVar

from services.errors import FreshnessViolation
from services.nominal import (
    FreshnessConstraint, FreshnessContext, TermInContext, alpha_eq,
    derive_fresh, instantiate_context,
)
from services.terms import (
    Abstraction, Application, Atom, HedgeVar, IndVar, Permutation,
    Substitution, Suspension, TermOrHedge, Var, apply_permutation,
    apply_substitution, as_hedge, as_term, is_a_based, is_hedge_suspension,
    normalize_permutations, render, rename_variables, variable_key,
)

logger = logging.getLogger(__name__)

DEFAULT_MATCH_BUDGET = 200_000

T = TypeVar("T")


# ============================================================================
# Canonical forms
# ============================================================================

def _occurrence_order(x: TermOrHedge, seen: List[Var]) -> None:
    if isinstance(x, (tuple, list)):
        for e in x:
            _occurrence_order(e, seen)
    elif isinstance(x, Suspension):
        if x.var not in seen:
            seen.append(x.var)
    elif isinstance(x, Abstraction):
        _occurrence_order(x.body, seen)
    elif isinstance(x, Application):
        _occurrence_order(x.args, seen)


def canonical_renaming(variables: Iterable[Var], reserved: FrozenSet[str] = frozenset()) -> Dict[Var, Var]:
    """
    Rename variables to x1, x2, ... and X1, X2, ... in the given order.

    Names listed in reserved are skipped.
    """
    renaming: Dict[Var, Var] = {}
    counters = {IndVar: 0, HedgeVar: 0}
    for var in variables:
        kind = type(var)
        prefix = "x" if kind is IndVar else "X"
        while True:
            counters[kind] += 1
            name = f"{prefix}{counters[kind]}"
            if name not in reserved:
                break
        renaming[var] = kind(name)
    return renaming


def variables_in_order(tic: TermInContext) -> List[Var]:
    """Body variables by first occurrence, then context-only variables."""
    order: List[Var] = []
    _occurrence_order(tic.body, order)
    extra = sorted(tic.context.variables() - frozenset(order), key=variable_key)
    return order + extra


def canonical_form(tic: TermInContext, reserved: FrozenSet[str] = frozenset()) -> TermInContext:
    """Rename variables by first occurrence and normalize permutations."""
    renaming = canonical_renaming(variables_in_order(tic), reserved)
    body = normalize_permutations(rename_variables(tic.body, renaming))
    context = FreshnessContext.from_constraints(
        FreshnessConstraint(c.atom, renaming.get(c.var, c.var)) for c in tic.context.constraints
    )
    return TermInContext(context, as_term(body))


def canonical_text(tic: TermInContext) -> str:
    """Text identifying a term-in-context up to variable renaming."""
    canon = canonical_form(tic)
    return f"{render(canon.body)} | {canon.context}"


# ============================================================================
# Equivariance
# ============================================================================

def _bind(mapping: Dict[Atom, Atom], source: Atom, target: Atom,
          base: FrozenSet[Atom]) -> Optional[Dict[Atom, Atom]]:
    if source not in base or target not in base:
        return mapping if source == target else None
    if source in mapping:
        return mapping if mapping[source] == target else None
    if target in mapping.values():
        return None
    extended = dict(mapping)
    extended[source] = target
    return extended


def _equivariant_mappings(pending: Tuple[Tuple[TermOrHedge, TermOrHedge], ...],
                          mapping: Dict[Atom, Atom], ctx: FreshnessContext,
                          base: FrozenSet[Atom]) -> Iterator[Dict[Atom, Atom]]:
    if not pending:
        yield mapping
        return
    (x, y), rest = pending[0], pending[1:]

    if isinstance(x, (tuple, list)) or isinstance(y, (tuple, list)):
        xs, ys = as_hedge(x), as_hedge(y)
        if len(xs) == len(ys):
            yield from _equivariant_mappings(tuple(zip(xs, ys)) + rest, mapping, ctx, base)
        return

    if isinstance(x, Atom):
        if isinstance(y, Atom):
            extended = _bind(mapping, x, y, base)
            if extended is not None:
                yield from _equivariant_mappings(rest, extended, ctx, base)
        return

    if isinstance(x, Suspension):
        if not isinstance(y, Suspension) or x.var != y.var:
            return
        # every atom not fresh for the variable must be sent where y sends it
        fresh = ctx.atoms_for(x.var)
        extended: Optional[Dict[Atom, Atom]] = mapping
        for c in sorted(base | x.perm.atoms() | y.perm.atoms()):
            if c in fresh:
                continue
            extended = _bind(extended, x.perm.act(c), y.perm.act(c), base)
            if extended is None:
                return
        yield from _equivariant_mappings(rest, extended, ctx, base)
        return

    if isinstance(x, Abstraction):
        if not isinstance(y, Abstraction):
            return
        a = x.atom
        if a in mapping:
            candidates = [mapping[a]]
        elif a not in base:
            candidates = [a]
        else:
            used = frozenset(mapping.values())
            candidates = sorted(c for c in base if c not in used)
        for c in candidates:
            extended = _bind(mapping, a, c, base)
            if extended is None:
                continue
            if c == y.atom:
                yield from _equivariant_mappings(((x.body, y.body),) + rest, extended, ctx, base)
            elif derive_fresh(ctx, c, y.body):
                swapped = apply_permutation(Permutation.swap(c, y.atom), y.body)
                yield from _equivariant_mappings(((x.body, swapped),) + rest, extended, ctx, base)
        return

    if isinstance(x, Application):
        if isinstance(y, Application) and x.fun == y.fun and len(x.args) == len(y.args):
            yield from _equivariant_mappings(tuple(zip(x.args, y.args)) + rest, mapping, ctx, base)
        return


def _complete(mapping: Dict[Atom, Atom], base: FrozenSet[Atom]) -> Permutation:
    """Extend a partial injection on base to a bijection, fixing what it can."""
    full = dict(mapping)
    sources = sorted(a for a in base if a not in full)
    targets = set(base) - set(full.values())
    for a in sources:
        if a in targets:
            full[a] = a
            targets.discard(a)
    remaining = sorted(a for a in sources if a not in full)
    for a, b in zip(remaining, sorted(targets)):
        full[a] = b
    return Permutation.from_mapping(full)


def solve_equivariance(ctx: FreshnessContext, atom_base: Iterable[Atom],
                       l1: TermOrHedge, l2: TermOrHedge,
                       r1: TermOrHedge, r2: TermOrHedge) -> Optional[Permutation]:
    """
    Find an atom_base-based permutation p with p.l1 ~ l2 and p.r1 ~ r2.

    Backtracks over partial atom maps built while walking both pairs in
    lockstep; binders branch over their possible images.

    Returns:
        Permutation or None if no such permutation exists
    """
    base = frozenset(atom_base)
    for mapping in _equivariant_mappings(((l1, l2), (r1, r2)), {}, ctx, base):
        perm = _complete(mapping, base)
        if (alpha_eq(ctx, apply_permutation(perm, l1), l2)
                and alpha_eq(ctx, apply_permutation(perm, r1), r2)):
            return perm
    return None


# ============================================================================
# More-general relation
# ============================================================================

@dataclass(frozen=True)
class GeneralityWitness:
    """The substitution showing g is more general than t."""
    substitution: Substitution
    instantiated_context: FreshnessContext


class MatchBudgetExceeded(Exception):
    """Internal signal that the matching search ran out of steps."""


class _Matcher:
    """Nominal hedge matching of a pattern against a fixed target."""

    def __init__(self, ctx: FreshnessContext, budget: Optional[int]):
        self.ctx = ctx
        self.budget = budget
        self.steps = 0

    def _tick(self) -> None:
        self.steps += 1
        if self.budget is not None and self.steps > self.budget:
            raise MatchBudgetExceeded()

    def match_hedge(self, patterns, targets, bindings: Dict) -> Iterator[Dict]:
        self._tick()
        if not patterns:
            if not targets:
                yield bindings
            return
        first, rest = patterns[0], patterns[1:]

        if is_hedge_suspension(first):
            bound = bindings.get(first.var)
            if bound is not None:
                image = as_hedge(apply_permutation(first.perm, bound))
                k = len(image)
                if k <= len(targets) and alpha_eq(self.ctx, image, targets[:k]):
                    yield from self.match_hedge(rest, targets[k:], bindings)
                return
            minimum = sum(1 for p in rest if not is_hedge_suspension(p))
            for k in range(len(targets) - minimum + 1):
                extended = dict(bindings)
                extended[first.var] = as_hedge(apply_permutation(first.perm.inverse(), targets[:k]))
                yield from self.match_hedge(rest, targets[k:], extended)
            return

        if not targets:
            return
        for extended in self.match_term(first, targets[0], bindings):
            yield from self.match_hedge(rest, targets[1:], extended)

    def match_term(self, p, t, bindings: Dict) -> Iterator[Dict]:
        self._tick()
        if isinstance(p, Atom):
            if p == t:
                yield bindings
        elif isinstance(p, Suspension):
            if is_hedge_suspension(t):
                return
            bound = bindings.get(p.var)
            if bound is not None:
                if alpha_eq(self.ctx, apply_permutation(p.perm, bound), t):
                    yield bindings
                return
            extended = dict(bindings)
            extended[p.var] = apply_permutation(p.perm.inverse(), t)
            yield extended
        elif isinstance(p, Abstraction):
            if not isinstance(t, Abstraction):
                return
            if p.atom == t.atom:
                yield from self.match_hedge((p.body,), (t.body,), bindings)
            elif derive_fresh(self.ctx, p.atom, t.body):
                swapped = apply_permutation(Permutation.swap(p.atom, t.atom), t.body)
                yield from self.match_hedge((p.body,), (swapped,), bindings)
        elif isinstance(p, Application):
            if isinstance(t, Application) and p.fun == t.fun:
                yield from self.match_hedge(p.args, t.args, bindings)


def more_general(g: TermInContext, t: TermInContext, atom_base: Iterable[Atom],
                 budget: Optional[int] = DEFAULT_MATCH_BUDGET) -> Optional[GeneralityWitness]:
    """
    Decide whether g is at least as general as t.

    Matches g's body against t's body (hedge variables take contiguous
    slices, shortest first), then checks that the substitution respects
    g's context with the instantiated constraints contained in t's context
    and that the instance is alpha-equal to t's body under t's context.

    Args:
        g: Candidate general term-in-context
        t: Candidate instance
        atom_base: Atoms the witness may mention
        budget: Maximum matching steps; None for unbounded

    Returns:
        GeneralityWitness or None
    """
    base = frozenset(atom_base)
    matcher = _Matcher(t.context, budget)
    try:
        for bindings in matcher.match_hedge(as_hedge(g.body), as_hedge(t.body), {}):
            sigma = Substitution(bindings)
            if not is_a_based(sigma, base):
                continue
            try:
                instantiated = instantiate_context(g.context, sigma)
            except FreshnessViolation:
                continue
            if not instantiated.issubset(t.context):
                continue
            if alpha_eq(t.context, apply_substitution(g.body, sigma), t.body):
                return GeneralityWitness(sigma, instantiated)
    except MatchBudgetExceeded:
        logger.warning("matching budget of %s steps exhausted comparing %s with %s", budget, g, t)
    return None


def equi_general(t1: TermInContext, t2: TermInContext, atom_base: Iterable[Atom],
                 budget: Optional[int] = DEFAULT_MATCH_BUDGET) -> bool:
    """True iff each term-in-context is more general than the other."""
    return (more_general(t1, t2, atom_base, budget) is not None
            and more_general(t2, t1, atom_base, budget) is not None)


def minimize(gens: Iterable[T], atom_base: Iterable[Atom],
             key: Optional[Callable[[T], TermInContext]] = None,
             budget: Optional[int] = DEFAULT_MATCH_BUDGET) -> List[T]:
    """
    Keep one representative of each class of least general elements.

    Elements are visited in canonical text order; an element is dropped when
    it is more general than (or equi-general to) a kept one, and kept
    elements more general than a newcomer are evicted.

    Args:
        gens: Generalizations, or records carrying one
        atom_base: The atom base A
        key: Extracts the term-in-context from a record (identity by default)
        budget: Matching budget per comparison

    Returns:
        list: the retained elements in canonical order
    """
    project = key or (lambda item: item)
    base = frozenset(atom_base)
    ordered = sorted(gens, key=lambda item: canonical_text(project(item)))
    kept: List[T] = []
    for item in ordered:
        candidate = project(item)
        if any(more_general(candidate, project(k), base, budget) for k in kept):
            continue
        kept = [k for k in kept if more_general(project(k), candidate, base, budget) is None]
        kept.append(item)
    logger.debug("minimized %d generalizations to %d", len(ordered), len(kept))
    return kept
