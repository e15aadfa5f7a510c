"""
VNAU Engine Module - Rule-based anti-unification of variadic nominal terms

States are quadruples P; S; G; sigma (problems, store, freshness context,
substitution). The engine applies the transformation rules exhaustively by
depth-first search with memoization and collects one generalization per
final state.

Rule policy: the first problem of P is always the one transformed. Tri-T,
Tri-H and Dec-T are applied without branching; Dec-H, Abs-T, Sol-T and Sol-H
branch. Once P is empty the store rules run: Mer to a fixpoint, then every
combination of Nar-T (and, when enabled, Nar-H), then Mer again.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

from services.errors import AtomBaseError, VerificationError
from services.generality import canonical_renaming, solve_equivariance
from services.nominal import (
    FreshnessConstraint, FreshnessContext, TermInContext, alpha_eq,
    derive_fresh, instantiate_context,
)
from services.terms import (
    Abstraction, Application, Atom, Hedge, HedgeVar, IndVar, Permutation,
    Substitution, Suspension, TermOrHedge, Var, apply_permutation,
    apply_substitution, as_hedge, as_term, atoms_of, flatten, head,
    is_a_based, is_individual, normalize_permutations,
    render, rename_variables, structure_count, suspend, variable_key, variables_of,
)

logger = logging.getLogger(__name__)

TRI_T = "Tri-T"
TRI_H = "Tri-H"
DEC_T = "Dec-T"
DEC_H = "Dec-H"
ABS_T = "Abs-T"
SOL_T = "Sol-T"
SOL_H = "Sol-H"
MER = "Mer"
NAR_T = "Nar-T"
NAR_H = "Nar-H"

BINDERS_ALL = "all"
BINDERS_CANONICAL = "canonical"


# ============================================================================
# Data types
# ============================================================================

@dataclass(frozen=True)
class AUP:
    """An anti-unification problem var: left =^= right over hedges."""
    var: Var
    left: Hedge
    right: Hedge

    def __post_init__(self):
        object.__setattr__(self, "left", as_hedge(self.left))
        object.__setattr__(self, "right", as_hedge(self.right))
        if isinstance(self.var, IndVar) and not (is_individual(self.left) and is_individual(self.right)):
            raise ValueError(f"individual variable {self.var} needs individual terms on both sides")

    def __str__(self) -> str:
        return f"{self.var}: {render(self.left)} ≜ {render(self.right)}"


@dataclass(frozen=True)
class State:
    """P; S; G; sigma together with the bookkeeping the search needs."""
    problems: Tuple[AUP, ...]
    store: Tuple[AUP, ...]
    context: FreshnessContext
    bindings: Tuple[Tuple[Var, TermOrHedge], ...]
    root: Var
    counter: int = 0
    derivation: Tuple[str, ...] = ()

    @property
    def substitution(self) -> Substitution:
        """The triangular substitution as recorded."""
        return Substitution(dict(self.bindings))

    def generalization_body(self) -> TermOrHedge:
        """The root variable under the fully resolved substitution."""
        return as_term(resolve(suspend(self.root), dict(self.bindings)))

    def __str__(self) -> str:
        problems = "{" + ", ".join(str(p) for p in self.problems) + "}"
        store = "{" + ", ".join(str(s) for s in self.store) + "}"
        return f"{problems}; {store}; {self.context}; {{{self.root} -> {render(self.generalization_body())}}}"


@dataclass(frozen=True)
class Measure:
    """The termination measure, compared lexicographically."""
    structure: int
    squared_lengths: int
    problems: int
    store: int
    store_hedge_variables: int

    def as_tuple(self) -> Tuple[int, int, int, int, int]:
        return (self.structure, self.squared_lengths, self.problems, self.store, self.store_hedge_variables)

    def __lt__(self, other: "Measure") -> bool:
        return self.as_tuple() < other.as_tuple()


@dataclass(frozen=True)
class Result:
    """A computed generalization with its store and derivation."""
    generalization: TermInContext
    store: Tuple[AUP, ...]
    derivation: Tuple[str, ...] = ()

    def reconstruction(self, side: str) -> Substitution:
        """{var -> left side} or {var -> right side} over the store."""
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        return Substitution({aup.var: getattr(aup, side) for aup in self.store})

    def key(self) -> str:
        store = "; ".join(str(aup) for aup in self.store)
        return f"{render(self.generalization.body)} | {self.generalization.context} | {store}"


@dataclass(frozen=True)
class SearchLimits:
    """Bounds on the search; None means unbounded."""
    max_states: Optional[int] = None
    max_results: Optional[int] = None


@dataclass(frozen=True)
class EngineOptions:
    """
    Search options.

    Attributes:
        binder_choice: "all" tries every admissible binder in Abs-T,
            "canonical" only the smallest one
        memoize: skip states already seen up to variable renaming
        keep_unnarrowed: also emit final states with un-narrowed store entries
        check_invariants: verify measure decrease and input reconstruction
            at every transition
        workers: number of threads exploring the search tree
    """
    binder_choice: str = BINDERS_ALL
    memoize: bool = True
    keep_unnarrowed: bool = True
    check_invariants: bool = False
    workers: int = 1


@dataclass
class SearchStats:
    states: int = 0
    memo_hits: int = 0
    final_states: int = 0

    def merge(self, other: "SearchStats") -> None:
        self.states += other.states
        self.memo_hits += other.memo_hits
        self.final_states += other.final_states


@dataclass
class SearchOutcome:
    """Results in canonical order plus the truncation flag."""
    results: List[Result]
    truncated: bool = False
    stats: SearchStats = field(default_factory=SearchStats)


# ============================================================================
# Helpers
# ============================================================================

def resolve(x: TermOrHedge, bindings: Dict[Var, TermOrHedge]) -> TermOrHedge:
    """Apply a triangular substitution until no bound variable remains."""
    if isinstance(x, (tuple, list)):
        return flatten(resolve(e, bindings) for e in x)
    if isinstance(x, Suspension):
        if x.var in bindings:
            return apply_permutation(x.perm, resolve(bindings[x.var], bindings))
        return x
    if isinstance(x, Abstraction):
        return Abstraction(x.atom, as_term(resolve(x.body, bindings)))
    if isinstance(x, Application):
        return Application(x.fun, tuple(resolve(e, bindings) for e in x.args))
    return x


def _occurrences(x: TermOrHedge, order: List[Var]) -> None:
    if isinstance(x, (tuple, list)):
        for e in x:
            _occurrences(e, order)
    elif isinstance(x, Suspension):
        if x.var not in order:
            order.append(x.var)
    elif isinstance(x, Abstraction):
        _occurrences(x.body, order)
    elif isinstance(x, Application):
        _occurrences(x.args, order)


def _hedge_variable_count(x: TermOrHedge) -> int:
    return sum(1 for v in _all_variable_occurrences(x) if isinstance(v, HedgeVar))


def _all_variable_occurrences(x: TermOrHedge) -> Iterator[Var]:
    if isinstance(x, (tuple, list)):
        for e in x:
            yield from _all_variable_occurrences(e)
    elif isinstance(x, Suspension):
        yield x.var
    elif isinstance(x, Abstraction):
        yield from _all_variable_occurrences(x.body)
    elif isinstance(x, Application):
        yield from _all_variable_occurrences(x.args)


def measure(st: State) -> Measure:
    """The lexicographic termination measure of a state."""
    return Measure(
        structure=sum(structure_count(p.left) + structure_count(p.right) for p in st.problems),
        squared_lengths=sum((len(p.left) + len(p.right)) ** 2 for p in st.problems),
        problems=len(st.problems),
        store=len(st.store),
        store_hedge_variables=sum(
            (1 if isinstance(s.var, HedgeVar) else 0)
            + _hedge_variable_count(s.left) + _hedge_variable_count(s.right)
            for s in st.store
        ),
    )


# ============================================================================
# Engine
# ============================================================================

class VnauEngine:
    """
    Anti-unification of two terms or hedges under a freshness context.

    Args:
        context: The input freshness context
        atom_base: The finite atom base A
        options: Search options
    """

    hedge_narrowing = False

    def __init__(self, context: FreshnessContext, atom_base: Iterable[Atom],
                 options: Optional[EngineOptions] = None):
        self.context = context
        self.atom_base: FrozenSet[Atom] = frozenset(atom_base)
        self.sorted_atoms: Tuple[Atom, ...] = tuple(sorted(self.atom_base))
        self.options = options or EngineOptions()
        if self.options.binder_choice not in (BINDERS_ALL, BINDERS_CANONICAL):
            raise ValueError(f"unknown binder choice: {self.options.binder_choice}")
        self.reserved: FrozenSet[str] = frozenset()
        self._inputs: Optional[Tuple[TermOrHedge, TermOrHedge]] = None

    # ------------------------------------------------------------------ setup

    def initial_state(self, l: TermOrHedge, r: TermOrHedge) -> State:
        """
        The state {X: l =^= r}; {}; {}; id with X fresh.

        Raises:
            AtomBaseError: if l, r or the context mention atoms outside A
        """
        for name, value in (("left input", l), ("right input", r), ("context", self.context)):
            if not is_a_based(value, self.atom_base):
                missing = sorted(a.name for a in atoms_of(value) - self.atom_base)
                raise AtomBaseError(f"{name} is not based on the atom base; missing {', '.join(missing)}")
        names = {v.name for v in variables_of(l) | variables_of(r) | self.context.variables()}
        self.reserved = frozenset(names)
        self._inputs = (l, r)
        root_name = "X"
        index = 0
        while root_name in names:
            root_name = f"X{index}"
            index += 1
        root = HedgeVar(root_name)
        self.reserved = frozenset(names | {root_name})
        return State(problems=(AUP(root, l, r),), store=(), context=FreshnessContext(),
                     bindings=(), root=root)

    def _fresh(self, st: State, kind) -> Tuple[Var, int]:
        counter = st.counter
        prefix = "y" if kind is IndVar else "Y"
        while True:
            name = f"{prefix}{counter}"
            counter += 1
            if name not in self.reserved:
                return kind(name), counter

    def _fresh_atoms(self, left: TermOrHedge, right: TermOrHedge) -> List[Atom]:
        return [a for a in self.sorted_atoms
                if derive_fresh(self.context, a, left) and derive_fresh(self.context, a, right)]

    @staticmethod
    def _bound(st: State, var: Var, value: TermOrHedge) -> Tuple[Tuple[Var, TermOrHedge], ...]:
        if isinstance(var, HedgeVar):
            value = as_hedge(value)
        return st.bindings + ((var, value),)

    @staticmethod
    def _replace_problem(st: State, index: int, new: Sequence[AUP]) -> Tuple[AUP, ...]:
        return st.problems[:index] + tuple(new) + st.problems[index + 1:]

    # ------------------------------------------------------------ term rules

    def _eager_rules(self, st: State, index: int) -> List[Tuple[str, State]]:
        """Tri-T, Tri-H and Dec-T instances for one problem."""
        aup = st.problems[index]
        left, right = aup.left, aup.right
        if not left and not right:
            if isinstance(aup.var, HedgeVar):
                return [(TRI_H, replace(st, problems=self._replace_problem(st, index, ()),
                                        bindings=self._bound(st, aup.var, ()),
                                        derivation=st.derivation + (TRI_H,)))]
            return []
        if len(left) != 1 or len(right) != 1:
            return []
        s, t = left[0], right[0]
        if isinstance(s, Atom) and s == t:
            return [(TRI_T, replace(st, problems=self._replace_problem(st, index, ()),
                                    bindings=self._bound(st, aup.var, s),
                                    derivation=st.derivation + (TRI_T,)))]
        if isinstance(s, Application) and isinstance(t, Application) and s.fun == t.fun:
            y, counter = self._fresh(st, HedgeVar)
            return [(DEC_T, replace(st, problems=self._replace_problem(st, index, (AUP(y, s.args, t.args),)),
                                    bindings=self._bound(st, aup.var, Application(s.fun, (suspend(y),))),
                                    counter=counter, derivation=st.derivation + (DEC_T,)))]
        return []

    def _admissible_binders(self, s: Abstraction, t: Abstraction) -> List[Atom]:
        binders = [c for c in self.sorted_atoms
                   if derive_fresh(self.context, c, s) and derive_fresh(self.context, c, t)]
        if self.options.binder_choice == BINDERS_CANONICAL:
            return binders[:1]
        return binders

    def _abs_t(self, st: State, index: int) -> List[Tuple[str, State]]:
        aup = st.problems[index]
        if len(aup.left) != 1 or len(aup.right) != 1:
            return []
        s, t = aup.left[0], aup.right[0]
        if not (isinstance(s, Abstraction) and isinstance(t, Abstraction)):
            return []
        out = []
        for c in self._admissible_binders(s, t):
            # the body of an abstraction is a term, so it gets an individual variable
            y, counter = self._fresh(st, IndVar)
            body_l = apply_permutation(Permutation.swap(c, s.atom), s.body)
            body_r = apply_permutation(Permutation.swap(c, t.atom), t.body)
            out.append((ABS_T, replace(
                st, problems=self._replace_problem(st, index, (AUP(y, body_l, body_r),)),
                bindings=self._bound(st, aup.var, Abstraction(c, suspend(y))),
                counter=counter, derivation=st.derivation + (ABS_T,))))
        return out

    def _store(self, st: State, index: int, rule: str) -> Tuple[str, State]:
        aup = st.problems[index]
        context = st.context.with_constraints(self._fresh_atoms(aup.left, aup.right), aup.var)
        return (rule, replace(st, problems=self._replace_problem(st, index, ()),
                              store=st.store + (aup,), context=context,
                              derivation=st.derivation + (rule,)))

    def _sol_t(self, st: State, index: int) -> List[Tuple[str, State]]:
        aup = st.problems[index]
        if len(aup.left) != 1 or len(aup.right) != 1:
            return []
        s, t = aup.left[0], aup.right[0]
        both_suspensions = isinstance(s, Suspension) and isinstance(t, Suspension)
        if both_suspensions or _head_key(s) != _head_key(t):
            return [self._store(st, index, SOL_T)]
        return []

    def _stuck_abstractions(self, st: State, index: int) -> List[Tuple[str, State]]:
        """Store a pair of abstractions that admit no common binder in A."""
        aup = st.problems[index]
        if len(aup.left) != 1 or len(aup.right) != 1:
            return []
        s, t = aup.left[0], aup.right[0]
        if isinstance(s, Abstraction) and isinstance(t, Abstraction) and not self._admissible_binders(s, t):
            logger.debug("no admissible binder for %s; storing it", aup)
            return [self._store(st, index, SOL_T)]
        return []

    def _term_rules(self, st: State, index: int) -> List[Tuple[str, State]]:
        return self._abs_t(st, index) + self._sol_t(st, index) + self._stuck_abstractions(st, index)

    # ----------------------------------------------------------- hedge rules

    def _dec_h(self, st: State, index: int) -> List[Tuple[str, State]]:
        aup = st.problems[index]
        if not isinstance(aup.var, HedgeVar):
            return []
        out = []
        for ls, rs in ((1, 0), (0, 1), (1, 1)):
            if ls > len(aup.left) or rs > len(aup.right):
                continue
            if len(aup.left) - ls + len(aup.right) - rs < 1:
                continue
            y1, counter = self._fresh(st, HedgeVar)
            y2, counter = self._fresh(replace(st, counter=counter), HedgeVar)
            first = AUP(y1, aup.left[:ls], aup.right[:rs])
            second = AUP(y2, aup.left[ls:], aup.right[rs:])
            out.append((DEC_H, replace(
                st, problems=self._replace_problem(st, index, (first, second)),
                bindings=self._bound(st, aup.var, (suspend(y1), suspend(y2))),
                counter=counter, derivation=st.derivation + (DEC_H,))))
        return out

    def _sol_h(self, st: State, index: int) -> List[Tuple[str, State]]:
        aup = st.problems[index]
        if isinstance(aup.var, HedgeVar) and len(aup.left) + len(aup.right) == 1:
            return [self._store(st, index, SOL_H)]
        return []

    def _branching_rules(self, st: State, index: int) -> List[Tuple[str, State]]:
        return self._term_rules(st, index) + self._dec_h(st, index) + self._sol_h(st, index)

    def problem_rules(self, st: State, index: int) -> List[Tuple[str, State]]:
        """Every rule instance transforming problem number index."""
        return self._eager_rules(st, index) + self._branching_rules(st, index)

    # ----------------------------------------------------------- store rules

    def _merge(self, st: State, keep: int, drop: int) -> Optional[State]:
        kept, dropped = st.store[keep], st.store[drop]
        if isinstance(dropped.var, IndVar) and isinstance(kept.var, HedgeVar):
            return None
        perm = solve_equivariance(self.context, self.atom_base,
                                  kept.left, dropped.left, kept.right, dropped.right)
        if perm is None:
            return None
        image = Suspension(perm, kept.var)
        renamed = instantiate_context(st.context.restrict((dropped.var,)), Substitution({dropped.var: image}))
        context = st.context.without_variable(dropped.var).union(renamed)
        store = tuple(s for i, s in enumerate(st.store) if i != drop)
        return replace(st, store=store, context=context,
                       bindings=self._bound(st, dropped.var, image),
                       derivation=st.derivation + (MER,))

    def merge_instances(self, st: State) -> Iterator[State]:
        """Every applicable Mer instance, one per mergeable store pair."""
        for i, j in itertools.combinations(range(len(st.store)), 2):
            if isinstance(st.store[i].var, HedgeVar) and isinstance(st.store[j].var, IndVar):
                merged = self._merge(st, j, i)
            else:
                merged = self._merge(st, i, j)
            if merged is not None:
                yield merged

    def merge_closure(self, st: State) -> State:
        while True:
            merged = next(self.merge_instances(st), None)
            if merged is None:
                return st
            if self.options.check_invariants:
                self._check_transition(st, merged, MER)
            st = merged

    def _narrowable(self, aup: AUP) -> bool:
        if not isinstance(aup.var, HedgeVar) or len(aup.left) != len(aup.right):
            return False
        n = len(aup.left)
        if n == 0 or (n > 1 and not self.hedge_narrowing):
            return False
        return all(is_individual(e) for e in aup.left + aup.right)

    def _narrow(self, st: State, var: Var) -> State:
        index = next(i for i, s in enumerate(st.store) if s.var == var)
        aup = st.store[index]
        if len(aup.left) == 1:
            x, counter = self._fresh(st, IndVar)
            context = st.context.without_variable(aup.var).with_constraints(st.context.atoms_for(aup.var), x)
            new = (AUP(x, aup.left, aup.right),)
            value: TermOrHedge = (suspend(x),)
            rule = NAR_T
        else:
            new_list = []
            counter = st.counter
            context = st.context.without_variable(aup.var)
            # each new variable gets the atoms fresh in its own pair
            for s, t in zip(aup.left, aup.right):
                x, counter = self._fresh(replace(st, counter=counter), IndVar)
                new_list.append(AUP(x, (s,), (t,)))
                context = context.with_constraints(self._fresh_atoms(s, t), x)
            new = tuple(new_list)
            value = tuple(suspend(p.var) for p in new)
            rule = NAR_H
        store = st.store[:index] + new + st.store[index + 1:]
        return replace(st, store=store, context=context, counter=counter,
                       bindings=self._bound(st, aup.var, value),
                       derivation=st.derivation + (rule,))

    def narrowing_instances(self, st: State) -> List[Tuple[str, State]]:
        out = []
        for aup in st.store:
            if self._narrowable(aup):
                narrowed = self._narrow(st, aup.var)
                out.append((narrowed.derivation[-1], narrowed))
        return out

    def final_states(self, st: State) -> Iterator[State]:
        """Run the store rules on a state whose problem set is empty."""
        st = self.merge_closure(st)
        candidates = [aup.var for aup in st.store if self._narrowable(aup)]
        if self.options.keep_unnarrowed:
            choices = itertools.product((False, True), repeat=len(candidates))
        else:
            choices = [(True,) * len(candidates)]
        for choice in choices:
            current = st
            for var, chosen in zip(candidates, choice):
                if chosen:
                    narrowed = self._narrow(current, var)
                    if self.options.check_invariants:
                        self._check_transition(current, narrowed, narrowed.derivation[-1])
                    current = narrowed
            yield self.merge_closure(current)

    # -------------------------------------------------------------- stepping

    def successors(self, st: State) -> List[Tuple[str, State]]:
        """
        Every applicable rule instance, for every problem and store entry.

        Returns:
            list of (rule name, successor state); empty iff st is final
        """
        out: List[Tuple[str, State]] = []
        for index in range(len(st.problems)):
            out.extend(self.problem_rules(st, index))
        out.extend((MER, merged) for merged in self.merge_instances(st))
        out.extend(self.narrowing_instances(st))
        return out

    def expand(self, st: State) -> List[Tuple[str, State]]:
        """Successors under the search policy: first problem, eager rules first."""
        eager = self._eager_rules(st, 0)
        if eager:
            return eager[:1]
        return self._branching_rules(st, 0)

    # ------------------------------------------------------------ invariants

    def _check_transition(self, before: State, after: State, rule: str) -> None:
        old, new = measure(before), measure(after)
        # Nar-H can grow the store; the hedge entry count drops instead
        if rule == NAR_H:
            decreased = (old.as_tuple()[:3] == new.as_tuple()[:3]
                         and new.store_hedge_variables < old.store_hedge_variables)
        else:
            decreased = new < old
        if not decreased:
            logger.error("measure did not decrease under %s: %s -> %s", rule, old, new)
            raise VerificationError(f"measure did not decrease under {rule}")
        self.check_reconstruction(after)

    def check_reconstruction(self, st: State) -> None:
        """
        Both inputs must be recoverable from the state.

        Raises:
            VerificationError: if substituting the left (right) sides of all
                problems and store entries into the body does not give back
                the left (right) input up to alpha-equivalence
        """
        if self._inputs is None:
            return
        body = st.generalization_body()
        for side, original in zip(("left", "right"), self._inputs):
            sigma = Substitution({aup.var: getattr(aup, side) for aup in st.problems + st.store})
            if not alpha_eq(self.context, apply_substitution(body, sigma), original):
                logger.error("state %s does not reconstruct the %s input", st, side)
                raise VerificationError(f"state does not reconstruct the {side} input")

    # ---------------------------------------------------------------- search

    def state_key(self, st: State) -> str:
        """Identify a state up to renaming of generalization variables."""
        body = st.generalization_body()
        order: List[Var] = []
        _occurrences(body, order)
        renaming = canonical_renaming(order, self.reserved)
        text = render(normalize_permutations(rename_variables(body, renaming)))
        problems = sorted(str(replace(p, var=renaming.get(p.var, p.var))) for p in st.problems)
        store = sorted(str(replace(s, var=renaming.get(s.var, s.var))) for s in st.store)
        context = sorted(f"{c.atom} # {renaming.get(c.var, c.var)}" for c in st.context.constraints)
        return " | ".join((text, ";".join(problems), ";".join(store), ",".join(context)))

    def extract(self, st: State) -> Result:
        """The generalization <G, X sigma> of a final state, canonically named."""
        body = st.generalization_body()
        order: List[Var] = []
        _occurrences(body, order)
        renaming = canonical_renaming(order, self.reserved)
        position = {var: i for i, var in enumerate(order)}
        body = as_term(normalize_permutations(rename_variables(body, renaming)))
        context = FreshnessContext.from_constraints(
            FreshnessConstraint(c.atom, renaming.get(c.var, c.var)) for c in st.context.constraints
        )
        store = tuple(
            replace(s, var=renaming.get(s.var, s.var))
            for s in sorted(st.store, key=lambda s: (position.get(s.var, len(order)), variable_key(s.var)))
        )
        return Result(TermInContext(context, body), store, st.derivation)

    def _search(self, roots: Sequence[State], limits: SearchLimits) -> Tuple[Dict[str, Result], bool, SearchStats]:
        stats = SearchStats()
        results: Dict[str, Result] = {}
        seen = set()
        stack = list(reversed(roots))
        while stack:
            st = stack.pop()
            if self.options.memoize:
                key = self.state_key(st)
                if key in seen:
                    stats.memo_hits += 1
                    continue
                seen.add(key)
            stats.states += 1
            if limits.max_states is not None and stats.states > limits.max_states:
                logger.warning("state limit of %d reached; results are partial", limits.max_states)
                return results, True, stats
            if not st.problems:
                for final in self.final_states(st):
                    stats.final_states += 1
                    result = self.extract(final)
                    results.setdefault(result.key(), result)
                    if limits.max_results is not None and len(results) >= limits.max_results:
                        logger.warning("result limit of %d reached; results are partial", limits.max_results)
                        return results, True, stats
                continue
            children = self.expand(st)
            if self.options.check_invariants:
                for rule, child in children:
                    self._check_transition(st, child, rule)
            logger.debug("expanded %s into %d successors", st.problems[0], len(children))
            stack.extend(child for _, child in reversed(children))
        return results, False, stats

    def _frontier(self, start: State, width: int) -> List[State]:
        frontier = [start]
        while len(frontier) < width:
            index = next((i for i, st in enumerate(frontier) if st.problems), None)
            if index is None:
                break
            st = frontier[index]
            frontier[index:index + 1] = [child for _, child in self.expand(st)]
        return frontier

    def run(self, l: TermOrHedge, r: TermOrHedge, limits: Optional[SearchLimits] = None) -> SearchOutcome:
        """
        Compute generalizations of l and r from every reachable final state.

        Args:
            l: Left term or hedge
            r: Right term or hedge
            limits: Search bounds; reaching one sets the truncated flag

        Returns:
            SearchOutcome: results deduplicated up to variable renaming and
            sorted canonically
        """
        limits = limits or SearchLimits()
        start = self.initial_state(l, r)
        if self.options.check_invariants:
            self.check_reconstruction(start)
        workers = max(1, self.options.workers)
        if workers == 1:
            results, truncated, stats = self._search([start], limits)
        else:
            frontier = self._frontier(start, workers)
            chunks = [frontier[i::workers] for i in range(workers)]
            results, truncated, stats = {}, False, SearchStats()
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for part, part_truncated, part_stats in pool.map(lambda c: self._search(c, limits), chunks):
                    for key, result in part.items():
                        results.setdefault(key, result)
                    truncated = truncated or part_truncated
                    stats.merge(part_stats)
            if limits.max_results is not None and len(results) > limits.max_results:
                truncated = True
        ordered = [results[key] for key in sorted(results)]
        if limits.max_results is not None:
            ordered = ordered[:limits.max_results]
        logger.info("explored %d states, %d final, %d results%s", stats.states, stats.final_states,
                    len(ordered), " (truncated)" if truncated else "")
        return SearchOutcome(ordered, truncated, stats)


def _head_key(r) -> Tuple[str, str]:
    """Head symbol tagged with its name space."""
    h = head(r)
    if isinstance(h, str):
        return ("abstraction", h)
    return (type(h).__name__, h.name)


def run_general(l: TermOrHedge, r: TermOrHedge, context: FreshnessContext,
                atom_base: Iterable[Atom], limits: Optional[SearchLimits] = None,
                options: Optional[EngineOptions] = None) -> SearchOutcome:
    """Run the general algorithm on l and r."""
    return VnauEngine(context, atom_base, options).run(l, r, limits)
