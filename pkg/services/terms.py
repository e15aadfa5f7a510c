"""
Terms Module - Variadic nominal terms and hedges

Defines atoms, permutations, suspensions, abstractions, variadic
applications and flat hedges, together with the structural operations the
rest of the services package is built on: permutation action, substitution
application, heads, hedge indexing and atom collection.

All values are immutable. A hedge is a plain tuple of hedge elements and is
kept flat by construction; a singleton hedge and its sole term are
interchangeable (see as_hedge / as_term).
"""

import re
from dataclasses import dataclass
from functools import singledispatch
from typing import Dict, FrozenSet, Iterable, Iterator, Mapping, Optional, Set, Tuple, Union

from services.errors import IndexOutOfBoundsError

ABSTRACTION_MARKER = "."
EPSILON = "eps"

_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


# ============================================================================
# Symbols
# ============================================================================

@dataclass(frozen=True, order=True)
class Atom:
    """A bindable name."""
    name: str

    def __str__(self) -> str:
        return quote_name(self.name)


@dataclass(frozen=True, order=True)
class FunSymbol:
    """A variadic function symbol."""
    name: str

    def __str__(self) -> str:
        return quote_name(self.name)


@dataclass(frozen=True, order=True)
class IndVar:
    """An individual variable, standing for exactly one term."""
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class HedgeVar:
    """A hedge variable, standing for a possibly empty sequence of terms."""
    name: str

    def __str__(self) -> str:
        return self.name


Var = Union[IndVar, HedgeVar]


def variable_key(var: Var) -> Tuple[int, str]:
    """Sort key placing individual variables before hedge variables."""
    return (0 if isinstance(var, IndVar) else 1, var.name)


# ============================================================================
# Permutations
# ============================================================================

@dataclass(frozen=True)
class Permutation:
    """
    A finite sequence of atom swappings.

    The sequence is applied right to left: the last swap acts first.
    Composition is concatenation and the inverse is the reversed sequence.
    """
    swaps: Tuple[Tuple[Atom, Atom], ...] = ()

    @classmethod
    def swap(cls, a: Atom, b: Atom) -> "Permutation":
        """The swapping (a b); identity when a == b."""
        if a == b:
            return IDENTITY
        return cls(((a, b),))

    @classmethod
    def from_mapping(cls, mapping: Mapping[Atom, Atom]) -> "Permutation":
        """
        Build a swap sequence acting as the given bijection.

        Atoms absent from the mapping are fixed. Each cycle
        x1 -> x2 -> ... -> xk becomes (x1 xk) ... (x1 x3)(x1 x2).

        Args:
            mapping: A bijection on a finite set of atoms

        Returns:
            Permutation: swaps whose action equals the mapping
        """
        seen: Set[Atom] = set()
        swaps = []
        for start in sorted(mapping):
            if start in seen or mapping[start] == start:
                seen.add(start)
                continue
            cycle = [start]
            seen.add(start)
            current = mapping[start]
            while current != start:
                cycle.append(current)
                seen.add(current)
                current = mapping.get(current, start)
            swaps.extend((cycle[0], other) for other in reversed(cycle[1:]))
        return cls(tuple(swaps))

    def act(self, atom: Atom) -> Atom:
        """Apply the permutation to a single atom."""
        for a, b in reversed(self.swaps):
            if atom == a:
                atom = b
            elif atom == b:
                atom = a
        return atom

    def atoms(self) -> FrozenSet[Atom]:
        """Every atom mentioned by a swap, moved or not."""
        return frozenset(x for pair in self.swaps for x in pair)

    def support(self) -> FrozenSet[Atom]:
        """supp(p) = {a | p.a != a}."""
        return frozenset(a for a in self.atoms() if self.act(a) != a)

    def compose(self, other: "Permutation") -> "Permutation":
        """self o other: apply other first, then self."""
        if not other.swaps:
            return self
        if not self.swaps:
            return other
        return Permutation(self.swaps + other.swaps)

    def inverse(self) -> "Permutation":
        return Permutation(tuple(reversed(self.swaps)))

    def is_identity(self) -> bool:
        return not self.support()

    def as_mapping(self) -> Dict[Atom, Atom]:
        return {a: self.act(a) for a in self.support()}

    def normalized(self) -> "Permutation":
        """An equivalent swap sequence in canonical cycle form."""
        return Permutation.from_mapping(self.as_mapping())

    def __str__(self) -> str:
        return "".join(f"({a} {b})" for a, b in self.swaps)


IDENTITY = Permutation()


def compose(p1: Permutation, p2: Permutation) -> Permutation:
    """Composite acting as p2 followed by p1."""
    return p1.compose(p2)


def inverse(p: Permutation) -> Permutation:
    return p.inverse()


# ============================================================================
# Terms and hedges
# ============================================================================

@dataclass(frozen=True)
class Suspension:
    """A variable with a pending permutation, pi.chi."""
    perm: Permutation
    var: Var

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Abstraction:
    """The binder a.t."""
    atom: Atom
    body: "Term"

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Application:
    """A variadic application f(s1, ..., sn); arguments are flattened."""
    fun: FunSymbol
    args: Tuple["HedgeElement", ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "args", flatten(self.args))

    def __str__(self) -> str:
        return render(self)


Term = Union[Atom, Suspension, Abstraction, Application]
HedgeElement = Union[Atom, Suspension, Abstraction, Application]
Hedge = Tuple[HedgeElement, ...]
TermOrHedge = Union[Term, Hedge]


def flatten(items: Iterable) -> Hedge:
    """Splice nested tuples and lists into one flat hedge."""
    result = []
    for item in items:
        if isinstance(item, (tuple, list)):
            result.extend(flatten(item))
        else:
            result.append(item)
    return tuple(result)


def suspend(var: Var, perm: Permutation = IDENTITY) -> Suspension:
    return Suspension(perm, var)


def as_hedge(x: TermOrHedge) -> Hedge:
    """View a term or hedge as a hedge."""
    if isinstance(x, (tuple, list)):
        return flatten(x)
    return (x,)


def as_term(x: TermOrHedge) -> TermOrHedge:
    """Collapse a singleton hedge to its element; other values pass through."""
    if isinstance(x, (tuple, list)):
        items = flatten(x)
        if len(items) == 1:
            return items[0]
        return items
    return x


def is_individual(x: TermOrHedge) -> bool:
    """True when x is a single individual term (not a hedge suspension)."""
    x = as_term(x)
    if isinstance(x, tuple):
        return False
    if isinstance(x, Suspension):
        return isinstance(x.var, IndVar)
    return True


def is_hedge_suspension(x) -> bool:
    return isinstance(x, Suspension) and isinstance(x.var, HedgeVar)


# ============================================================================
# Structural operations
# ============================================================================

def apply_permutation(p: Permutation, x: TermOrHedge) -> TermOrHedge:
    """
    Apply p to a term or hedge.

    Atoms are swapped, suspensions absorb p into their pending permutation
    and abstractions have both binder and body swapped.
    """
    if not p.swaps:
        return x
    if isinstance(x, (tuple, list)):
        return tuple(apply_permutation(p, e) for e in x)
    if isinstance(x, Atom):
        return p.act(x)
    if isinstance(x, Suspension):
        return Suspension(p.compose(x.perm), x.var)
    if isinstance(x, Abstraction):
        return Abstraction(p.act(x.atom), apply_permutation(p, x.body))
    if isinstance(x, Application):
        return Application(x.fun, tuple(apply_permutation(p, e) for e in x.args))
    raise TypeError(f"not a term or hedge: {x!r}")


def head(r: HedgeElement):
    """
    Head symbol of a hedge element.

    Returns:
        the atom itself, the variable of a suspension, the abstraction
        marker "." or the function symbol of an application
    """
    if isinstance(r, Atom):
        return r
    if isinstance(r, Suspension):
        return r.var
    if isinstance(r, Abstraction):
        return ABSTRACTION_MARKER
    if isinstance(r, Application):
        return r.fun
    raise TypeError(f"not a hedge element: {r!r}")


def length(h: TermOrHedge) -> int:
    return len(as_hedge(h))


def subhedge(h: TermOrHedge, i: int, j: int) -> Hedge:
    """
    Elements i..j (1-based, inclusive) of a hedge.

    Args:
        h: The hedge
        i: First index
        j: Last index; j < i yields the empty hedge

    Returns:
        Hedge: the selected elements

    Raises:
        IndexOutOfBoundsError: if j >= i and an index lies outside 1..len(h)
    """
    items = as_hedge(h)
    if j < i:
        return ()
    if i < 1 or j > len(items):
        raise IndexOutOfBoundsError(f"subhedge {i}..{j} outside hedge of length {len(items)}")
    return items[i - 1:j]


# ============================================================================
# Substitutions
# ============================================================================

class Substitution:
    """
    A finite map from individual variables to terms and hedge variables to
    hedges. Variables outside the domain act as identity suspensions.
    """

    def __init__(self, assignments: Optional[Mapping[Var, TermOrHedge]] = None):
        self._map: Dict[Var, TermOrHedge] = {}
        for var, value in (assignments or {}).items():
            if isinstance(var, IndVar):
                value = as_term(value)
                if not is_individual(value):
                    raise ValueError(f"individual variable {var} cannot map to {render(value)}")
            else:
                value = as_hedge(value)
            self._map[var] = value

    def get(self, var: Var, default=None):
        return self._map.get(var, default)

    def items(self):
        return self._map.items()

    def domain(self) -> FrozenSet[Var]:
        return frozenset(self._map)

    def extend(self, var: Var, value: TermOrHedge) -> "Substitution":
        updated = dict(self._map)
        updated[var] = value
        return Substitution(updated)

    def __contains__(self, var) -> bool:
        return var in self._map

    def __iter__(self) -> Iterator[Var]:
        return iter(self._map)

    def __len__(self) -> int:
        return len(self._map)

    def __eq__(self, other) -> bool:
        return isinstance(other, Substitution) and self._map == other._map

    def __hash__(self) -> int:
        return hash(frozenset(self._map.items()))

    def __str__(self) -> str:
        parts = [f"{var} -> {render(self._map[var])}" for var in sorted(self._map, key=variable_key)]
        return "{" + ", ".join(parts) + "}"

    __repr__ = __str__


def apply_substitution(x: TermOrHedge, s: Substitution) -> TermOrHedge:
    """
    Apply a substitution, re-flattening wherever a hedge variable expands.

    On a suspension pi.chi the variable is substituted first and pi is then
    applied to the result. Binders are not renamed: (a.t)s = a.(ts).
    """
    if not len(s):
        return x
    if isinstance(x, (tuple, list)):
        return flatten(apply_substitution(e, s) for e in x)
    if isinstance(x, Atom):
        return x
    if isinstance(x, Suspension):
        value = s.get(x.var)
        if value is None:
            return x
        return apply_permutation(x.perm, value)
    if isinstance(x, Abstraction):
        body = as_term(apply_substitution(x.body, s))
        if isinstance(body, tuple):
            raise ValueError(f"abstraction body became the hedge {render(body)}")
        return Abstraction(x.atom, body)
    if isinstance(x, Application):
        return Application(x.fun, tuple(apply_substitution(e, s) for e in x.args))
    raise TypeError(f"not a term or hedge: {x!r}")


# ============================================================================
# Collections and measures
# ============================================================================

@singledispatch
def atoms_of(x) -> FrozenSet[Atom]:
    """
    Atoms occurring anywhere in x.

    A suspension contributes the support of its permutation. Other modules
    register further types (freshness contexts).
    """
    if isinstance(x, (tuple, list)):
        return frozenset().union(*(atoms_of(e) for e in x))
    raise TypeError(f"cannot collect atoms of {x!r}")


@atoms_of.register
def _(x: Atom) -> FrozenSet[Atom]:
    return frozenset((x,))


@atoms_of.register
def _(x: Suspension) -> FrozenSet[Atom]:
    return x.perm.support()


@atoms_of.register
def _(x: Abstraction) -> FrozenSet[Atom]:
    return frozenset((x.atom,)) | atoms_of(x.body)


@atoms_of.register
def _(x: Application) -> FrozenSet[Atom]:
    return atoms_of(x.args)


@atoms_of.register
def _(x: Substitution) -> FrozenSet[Atom]:
    return frozenset().union(*(atoms_of(value) for _, value in x.items()))


def is_a_based(x, atom_base: Iterable[Atom]) -> bool:
    """True iff every atom of x belongs to the given base."""
    return atoms_of(x) <= frozenset(atom_base)


def variables_of(x: TermOrHedge) -> FrozenSet[Var]:
    if isinstance(x, (tuple, list)):
        return frozenset().union(*(variables_of(e) for e in x))
    if isinstance(x, Suspension):
        return frozenset((x.var,))
    if isinstance(x, Abstraction):
        return variables_of(x.body)
    if isinstance(x, Application):
        return variables_of(x.args)
    return frozenset()


def function_symbols_of(x: TermOrHedge) -> FrozenSet[FunSymbol]:
    if isinstance(x, (tuple, list)):
        return frozenset().union(*(function_symbols_of(e) for e in x))
    if isinstance(x, Abstraction):
        return function_symbols_of(x.body)
    if isinstance(x, Application):
        return frozenset((x.fun,)) | function_symbols_of(x.args)
    return frozenset()


def symbol_count(x: TermOrHedge) -> int:
    """Atoms, function symbols and binders in x; suspensions count zero."""
    if isinstance(x, (tuple, list)):
        return sum(symbol_count(e) for e in x)
    if isinstance(x, Atom):
        return 1
    if isinstance(x, Abstraction):
        return 1 + symbol_count(x.body)
    if isinstance(x, Application):
        return 1 + symbol_count(x.args)
    return 0


def structure_count(x: TermOrHedge) -> int:
    """Function symbol plus abstraction occurrences."""
    if isinstance(x, (tuple, list)):
        return sum(structure_count(e) for e in x)
    if isinstance(x, Abstraction):
        return 1 + structure_count(x.body)
    if isinstance(x, Application):
        return 1 + structure_count(x.args)
    return 0


def abstraction_count(x: TermOrHedge) -> int:
    if isinstance(x, (tuple, list)):
        return sum(abstraction_count(e) for e in x)
    if isinstance(x, Abstraction):
        return 1 + abstraction_count(x.body)
    if isinstance(x, Application):
        return abstraction_count(x.args)
    return 0


def rename_variables(x: TermOrHedge, renaming: Mapping[Var, Var]) -> TermOrHedge:
    """Rename variables, keeping pending permutations."""
    if isinstance(x, (tuple, list)):
        return tuple(rename_variables(e, renaming) for e in x)
    if isinstance(x, Suspension):
        return Suspension(x.perm, renaming.get(x.var, x.var))
    if isinstance(x, Abstraction):
        return Abstraction(x.atom, rename_variables(x.body, renaming))
    if isinstance(x, Application):
        return Application(x.fun, tuple(rename_variables(e, renaming) for e in x.args))
    return x


def normalize_permutations(x: TermOrHedge) -> TermOrHedge:
    """Rewrite every pending permutation into canonical cycle form."""
    if isinstance(x, (tuple, list)):
        return tuple(normalize_permutations(e) for e in x)
    if isinstance(x, Suspension):
        return Suspension(x.perm.normalized(), x.var)
    if isinstance(x, Abstraction):
        return Abstraction(x.atom, normalize_permutations(x.body))
    if isinstance(x, Application):
        return Application(x.fun, tuple(normalize_permutations(e) for e in x.args))
    return x


# ============================================================================
# Rendering
# ============================================================================

def quote_name(name: str) -> str:
    """Quote names that are not plain identifiers (operators, numerals)."""
    if _IDENTIFIER.fullmatch(name) and name != EPSILON:
        return name
    return '"' + name + '"'


def render(x: TermOrHedge) -> str:
    """
    Canonical text of a term or hedge.

    Nullary applications print as the bare symbol, identity suspensions as
    the bare variable, the empty hedge as eps and a longer hedge as a
    parenthesized comma sequence.
    """
    if isinstance(x, (tuple, list)):
        items = flatten(x)
        if not items:
            return EPSILON
        if len(items) == 1:
            return render(items[0])
        return "(" + ", ".join(render(e) for e in items) + ")"
    if isinstance(x, Atom):
        return quote_name(x.name)
    if isinstance(x, Suspension):
        if not x.perm.swaps:
            return x.var.name
        return "{" + str(x.perm) + "} " + x.var.name
    if isinstance(x, Abstraction):
        return f"{quote_name(x.atom.name)}.{render(x.body)}"
    if isinstance(x, Application):
        if not x.args:
            return quote_name(x.fun.name)
        return f"{quote_name(x.fun.name)}(" + ", ".join(render(e) for e in x.args) + ")"
    raise TypeError(f"not a term or hedge: {x!r}")
