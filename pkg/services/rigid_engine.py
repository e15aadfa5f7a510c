"""
Rigid Engine Module - Alignment-driven anti-unification

Rigidity functions map two words of head symbols to a set of alignments.
The rigid engine replaces hedge decomposition by splitting both hedges
around one chosen alignment (Dec-R) and stores a hedge problem only when
nothing else applies (Sol-R). In mode rigid-x the store may additionally be
narrowed into runs of consecutive individual variables (Nar-H).
"""

import difflib
import logging
import re
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Iterator, List, Optional, Tuple, Union

from services.nominal import FreshnessContext
from services.terms import (
    Abstraction, Application, Atom, FunSymbol, HedgeVar, IndVar, Suspension,
    TermOrHedge, as_hedge, head, is_hedge_suspension, subhedge, suspend,
)
from services.vnau_engine import (
    AUP, EngineOptions, SearchLimits, SearchOutcome, State, VnauEngine,
)

logger = logging.getLogger(__name__)

DEC_R = "Dec-R"
SOL_R = "Sol-R"

MODE_RIGID = "rigid"
MODE_RIGID_X = "rigid-x"
MODES = (MODE_RIGID, MODE_RIGID_X)

Symbol = Union[Atom, FunSymbol, IndVar, HedgeVar, str]
Word = Tuple[Symbol, ...]


# ============================================================================
# Words and alignments
# ============================================================================

@dataclass(frozen=True)
class AlignmentEntry:
    """symbol<i,j>: position i of the first word meets position j of the second."""
    symbol: Symbol
    left: int
    right: int

    def __str__(self) -> str:
        return f"{self.symbol}<{self.left},{self.right}>"


@dataclass(frozen=True)
class Alignment:
    entries: Tuple[AlignmentEntry, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[AlignmentEntry]:
        return iter(self.entries)

    def pairs(self) -> Tuple[Tuple[int, int], ...]:
        return tuple((e.left, e.right) for e in self.entries)

    def __str__(self) -> str:
        return "".join(str(e) for e in self.entries)


RigidityFunction = Callable[[Word, Word], List[Alignment]]


def is_variable_symbol(symbol: Symbol) -> bool:
    return isinstance(symbol, (IndVar, HedgeVar))


def head_word(h: TermOrHedge) -> Word:
    """The word of head symbols of a hedge."""
    return tuple(head(e) for e in as_hedge(h))


def _same_symbol(x: Symbol, y: Symbol) -> bool:
    return x == y and not is_variable_symbol(x)


def _alignments(w1: Word, w2: Word, similar: Callable[[Symbol, Symbol], bool]) -> List[Alignment]:
    n1, n2 = len(w1), len(w2)
    match = [[similar(x, y) for y in w2] for x in w1]
    table = [[0] * (n2 + 1) for _ in range(n1 + 1)]
    for i in reversed(range(n1)):
        for j in reversed(range(n2)):
            best = max(table[i + 1][j], table[i][j + 1])
            if match[i][j]:
                best = max(best, 1 + table[i + 1][j + 1])
            table[i][j] = best

    def extend(i: int, j: int, need: int) -> Iterator[Tuple[Tuple[int, int], ...]]:
        if need == 0:
            yield ()
            return
        for a in range(i, n1):
            if table[a][j] < need:
                break
            for b in range(j, n2):
                if table[a][b] < need:
                    break
                if match[a][b] and table[a + 1][b + 1] == need - 1:
                    for rest in extend(a + 1, b + 1, need - 1):
                        yield ((a, b),) + rest

    longest = table[0][0]
    if longest == 0:
        return []
    return [
        Alignment(tuple(AlignmentEntry(w1[a], a + 1, b + 1) for a, b in pairs))
        for pairs in extend(0, 0, longest)
    ]


def lcs_alignments(w1: Word, w2: Word) -> List[Alignment]:
    """
    All longest common subsequence alignments of two words.

    Variable symbols never align. Indices are 1-based and the alignments
    come in lexicographic order of their index pairs.

    Args:
        w1: First word
        w2: Second word

    Returns:
        list: every alignment of maximal length; empty when the words share
        no alignable symbol
    """
    return _alignments(tuple(w1), tuple(w2), _same_symbol)


def similarity_lcs_alignments(similar: Callable[[Symbol, Symbol], bool]) -> RigidityFunction:
    """
    Longest alignments under a symbol similarity predicate.

    Entries carry the symbol of the first word; the aligned symbol of the
    second word may differ from it.
    """
    def guarded(x: Symbol, y: Symbol) -> bool:
        return not is_variable_symbol(x) and not is_variable_symbol(y) and similar(x, y)

    def rigidity(w1: Word, w2: Word) -> List[Alignment]:
        return _alignments(tuple(w1), tuple(w2), guarded)
    return rigidity


def name_similarity(threshold: float = 0.8) -> Callable[[Symbol, Symbol], bool]:
    """Symbols of the same kind whose names have a difflib ratio of at least threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie between 0 and 1")

    def similar(x: Symbol, y: Symbol) -> bool:
        if x == y:
            return True
        if isinstance(x, str) or type(x) is not type(y):
            return False
        return difflib.SequenceMatcher(None, x.name, y.name).ratio() >= threshold
    return similar


def min_length_filter(rigidity: RigidityFunction, n: int) -> RigidityFunction:
    """Drop alignments shorter than n."""
    if n < 0:
        raise ValueError("minimal alignment length must be non-negative")
    if n == 0:
        return rigidity

    def filtered(w1: Word, w2: Word) -> List[Alignment]:
        return [a for a in rigidity(w1, w2) if len(a) >= n]
    return filtered


def deterministic_pick(rigidity: RigidityFunction) -> RigidityFunction:
    """Keep only the first alignment, making the rigid search deterministic."""
    def pick(w1: Word, w2: Word) -> List[Alignment]:
        return rigidity(w1, w2)[:1]
    return pick


_MIN_PATTERN = re.compile(r"lcs-min[=:](\d+)")


def rigidity_from_name(name: str) -> RigidityFunction:
    """
    Resolve a rigidity name: lcs, lcs-det or lcs-min=N.

    Raises:
        ValueError: for any other name
    """
    if name == "lcs":
        return lcs_alignments
    if name == "lcs-det":
        return deterministic_pick(lcs_alignments)
    found = _MIN_PATTERN.fullmatch(name)
    if found:
        return min_length_filter(lcs_alignments, int(found.group(1)))
    raise ValueError(f"unknown rigidity function: {name}")


# ============================================================================
# Rigid engine
# ============================================================================

class RigidEngine(VnauEngine):
    """
    The rigid variant of the engine.

    Args:
        context: The input freshness context
        atom_base: The atom base A
        rigidity: Rigidity function consulted by Dec-R
        mode: "rigid" or "rigid-x" (which also narrows with Nar-H)
        options: Search options
    """

    def __init__(self, context: FreshnessContext, atom_base: Iterable[Atom],
                 rigidity: RigidityFunction = lcs_alignments, mode: str = MODE_RIGID,
                 options: Optional[EngineOptions] = None):
        super().__init__(context, atom_base, options)
        if mode not in MODES:
            raise ValueError(f"unknown rigid mode: {mode}")
        self.rigidity = rigidity
        self.mode = mode
        self.hedge_narrowing = mode == MODE_RIGID_X

    def _dec_r(self, st: State, index: int) -> List[Tuple[str, State]]:
        aup = st.problems[index]
        s, q = aup.left, aup.right
        if not isinstance(aup.var, HedgeVar) or (len(s) == 1 and len(q) == 1):
            return []
        out = []
        for alignment in self.rigidity(head_word(s), head_word(q)):
            if not len(alignment):
                continue
            counter = st.counter
            new: List[AUP] = []
            previous_i, previous_j = 0, 0
            for entry in alignment:
                gap, counter = self._fresh(replace(st, counter=counter), HedgeVar)
                new.append(AUP(gap, subhedge(s, previous_i + 1, entry.left - 1),
                               subhedge(q, previous_j + 1, entry.right - 1)))
                kept, counter = self._fresh(replace(st, counter=counter), HedgeVar)
                new.append(AUP(kept, subhedge(s, entry.left, entry.left),
                               subhedge(q, entry.right, entry.right)))
                previous_i, previous_j = entry.left, entry.right
            last, counter = self._fresh(replace(st, counter=counter), HedgeVar)
            new.append(AUP(last, subhedge(s, previous_i + 1, len(s)), subhedge(q, previous_j + 1, len(q))))
            logger.debug("Dec-R on %s along %s", aup, alignment)
            out.append((DEC_R, replace(
                st, problems=self._replace_problem(st, index, new),
                bindings=self._bound(st, aup.var, tuple(suspend(p.var) for p in new)),
                counter=counter, derivation=st.derivation + (DEC_R,))))
        return out

    def _branching_rules(self, st: State, index: int) -> List[Tuple[str, State]]:
        rules = self._abs_t(st, index) + self._sol_t(st, index) + self._dec_r(st, index)
        if rules or self._eager_rules(st, index):
            return rules
        aup = st.problems[index]
        if isinstance(aup.var, HedgeVar):
            return [self._store(st, index, SOL_R)]
        return self._stuck_abstractions(st, index)


def is_rigid_shape(body: TermOrHedge, mode: str = MODE_RIGID) -> bool:
    """
    Check the shape of a rigid generalization.

    In mode rigid no hedge contains two adjacent suspensions; in mode rigid-x
    adjacent suspensions are allowed only when both are individual.
    """
    def adjacent_ok(x, y) -> bool:
        if not (isinstance(x, Suspension) and isinstance(y, Suspension)):
            return True
        if mode == MODE_RIGID:
            return False
        return not (is_hedge_suspension(x) or is_hedge_suspension(y))

    def check(h) -> bool:
        items = as_hedge(h)
        if not all(adjacent_ok(x, y) for x, y in zip(items, items[1:])):
            return False
        for e in items:
            if isinstance(e, Abstraction) and not check(e.body):
                return False
            if isinstance(e, Application) and not check(e.args):
                return False
        return True

    return check(body)


def run_rigid(l: TermOrHedge, r: TermOrHedge, context: FreshnessContext,
              atom_base: Iterable[Atom], rigidity: RigidityFunction = lcs_alignments,
              mode: str = MODE_RIGID, limits: Optional[SearchLimits] = None,
              options: Optional[EngineOptions] = None) -> SearchOutcome:
    """Run the rigid algorithm on l and r."""
    return RigidEngine(context, atom_base, rigidity, mode, options).run(l, r, limits)
