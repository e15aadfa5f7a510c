"""
Clone Service Module - The generalization pipeline behind the CLI and the API

Rewrites binders if asked, computes the atom base, runs the selected
engine, minimizes, re-verifies every result against both inputs and
assembles a report with stores, reconstruction substitutions and
similarity metrics.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from services.errors import AtomBaseError, FreshnessViolation, VerificationError
from services.generality import minimize
from services.nominal import TermInContext, alpha_eq, instantiate_context
from services.problem_parser import ProblemFile
from services.rigid_engine import MODES as RIGID_MODES, rigidity_from_name, run_rigid
from services.terms import (
    Abstraction, Application, Atom, Substitution, TermOrHedge, abstraction_count,
    apply_substitution, atoms_of, render, symbol_count,
)
from services.vnau_engine import (
    BINDERS_ALL, BINDERS_CANONICAL, EngineOptions, Result, SearchLimits, run_general,
)

logger = logging.getLogger(__name__)

ALGORITHM_GENERAL = "general"
ALGORITHMS = (ALGORITHM_GENERAL,) + RIGID_MODES

ATOMS_AUTO = "auto"
ATOMS_AUTO_FRESH = "auto-fresh"

FREE_NONE = "none"
FREE_ALL = "all"
FREE_EQUALIZE = "equalize"
FREE_BINDER_POLICIES = (FREE_NONE, FREE_ALL, FREE_EQUALIZE)

OUTPUTS = ("text", "json")


# ============================================================================
# Configuration
# ============================================================================

@dataclass(frozen=True)
class RunConfig:
    """
    Options of one pipeline run.

    Attributes:
        algorithm: general, rigid or rigid-x
        rigidity: lcs, lcs-min=N or lcs-det (rigid algorithms only)
        atom_base: auto, auto-fresh, or an explicit sequence of atom names
        limits: Search bounds
        minimize: keep only least general results
        output: text or json
        free_binders: none, all or equalize
        binder_choice: all or canonical binders in Abs-T
        workers: engine threads
        check_invariants: verify every engine transition
    """
    algorithm: str = ALGORITHM_GENERAL
    rigidity: str = "lcs"
    atom_base: Union[str, Tuple[str, ...]] = ATOMS_AUTO
    limits: SearchLimits = field(default_factory=SearchLimits)
    minimize: bool = True
    output: str = "text"
    free_binders: str = FREE_NONE
    binder_choice: str = BINDERS_CANONICAL
    workers: int = 1
    check_invariants: bool = False

    def validate(self) -> None:
        """
        Raises:
            ValueError: for an unknown option value
        """
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm: {self.algorithm}")
        if self.output not in OUTPUTS:
            raise ValueError(f"unknown output format: {self.output}")
        if self.free_binders not in FREE_BINDER_POLICIES:
            raise ValueError(f"unknown binder policy: {self.free_binders}")
        if self.binder_choice not in (BINDERS_ALL, BINDERS_CANONICAL):
            raise ValueError(f"unknown binder choice: {self.binder_choice}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        rigidity_from_name(self.rigidity)

    def engine_options(self) -> EngineOptions:
        return EngineOptions(binder_choice=self.binder_choice, workers=self.workers,
                             check_invariants=self.check_invariants)


# ============================================================================
# Atom base and binder rewriting
# ============================================================================

def compute_atom_base(t1: TermInContext, t2: TermInContext,
                      policy: Union[str, Iterable[str]] = ATOMS_AUTO) -> FrozenSet[Atom]:
    """
    Compute the atom base for two terms-in-context.

    Args:
        t1: Left input in context
        t2: Right input in context
        policy: "auto" for the occurring atoms, "auto-fresh" to add as many
            fresh atoms as the smaller abstraction count, or explicit names

    Returns:
        frozenset of atoms

    Raises:
        AtomBaseError: if an explicit list misses an occurring atom
    """
    occurring = atoms_of(t1) | atoms_of(t2)
    if policy == ATOMS_AUTO:
        return frozenset(occurring)
    if policy in (ATOMS_AUTO_FRESH, "auto-plus-fresh"):
        k = min(abstraction_count(t1.body), abstraction_count(t2.body))
        taken = {a.name for a in occurring}
        fresh: List[Atom] = []
        index = 1
        while len(fresh) < k:
            name = f"_a{index}"
            index += 1
            if name not in taken:
                fresh.append(Atom(name))
        return frozenset(occurring) | frozenset(fresh)
    if isinstance(policy, str):
        policy = [name.strip() for name in policy.split(",") if name.strip()]
    explicit = frozenset(Atom(name) for name in policy)
    missing = occurring - explicit
    if missing:
        raise AtomBaseError("atom base is missing " + ", ".join(sorted(a.name for a in missing)))
    return explicit


def strip_binders(x: TermOrHedge, depth: Optional[int] = None) -> TermOrHedge:
    """
    Remove abstractions, leaving their atoms free.

    With depth given, only the first depth binders of the leading
    abstraction chain are removed.
    """
    if depth is not None:
        while depth > 0 and isinstance(x, Abstraction):
            x = x.body
            depth -= 1
        return x
    if isinstance(x, (tuple, list)):
        return tuple(strip_binders(e) for e in x)
    if isinstance(x, Abstraction):
        return strip_binders(x.body)
    if isinstance(x, Application):
        return Application(x.fun, tuple(strip_binders(e) for e in x.args))
    return x


def _leading_binders(x: TermOrHedge) -> int:
    count = 0
    while isinstance(x, Abstraction):
        count += 1
        x = x.body
    return count


def free_binders(left: TermOrHedge, right: TermOrHedge,
                 policy: str = FREE_NONE) -> Tuple[TermOrHedge, TermOrHedge]:
    """Rewrite both inputs according to a binder policy (none, all, equalize)."""
    if policy == FREE_NONE:
        return left, right
    if policy == FREE_ALL:
        return strip_binders(left), strip_binders(right)
    if policy == FREE_EQUALIZE:
        k1, k2 = _leading_binders(left), _leading_binders(right)
        if k1 > k2:
            return strip_binders(left, k1 - k2), right
        return left, strip_binders(right, k2 - k1)
    raise ValueError(f"unknown binder policy: {policy}")


# ============================================================================
# Report
# ============================================================================

@dataclass(frozen=True)
class Metrics:
    store_entries: int
    stored_symbols: int
    entry_sizes: Tuple[int, ...]
    similarity: float

    def to_dict(self) -> Dict:
        return {
            "store_entries": self.store_entries,
            "stored_symbols": self.stored_symbols,
            "entry_sizes": list(self.entry_sizes),
            "similarity": round(self.similarity, 4),
        }


@dataclass(frozen=True)
class ReportEntry:
    """One verified generalization with its difference data."""
    result: Result
    left_substitution: Substitution
    right_substitution: Substitution
    metrics: Metrics

    def to_dict(self) -> Dict:
        generalization = self.result.generalization
        return {
            "generalization": render(generalization.body),
            "context": [str(c) for c in generalization.context],
            "store": [
                {"var": aup.var.name, "left": render(aup.left), "right": render(aup.right)}
                for aup in self.result.store
            ],
            "left_substitution": {var.name: render(value) for var, value in self.left_substitution.items()},
            "right_substitution": {var.name: render(value) for var, value in self.right_substitution.items()},
            "metrics": self.metrics.to_dict(),
            "derivation": list(self.result.derivation),
        }


@dataclass(frozen=True)
class Report:
    """The outcome of one run, renderable as text or JSON."""
    source: str
    algorithm: str
    rigidity: Optional[str]
    atom_base: Tuple[Atom, ...]
    entries: Tuple[ReportEntry, ...]
    truncated: bool = False

    def to_dict(self) -> Dict:
        return {
            "problem": self.source,
            "algorithm": self.algorithm,
            "rigidity": self.rigidity,
            "atom_base": [a.name for a in self.atom_base],
            "truncated": self.truncated,
            "count": len(self.entries),
            "results": [entry.to_dict() for entry in self.entries],
        }

    def to_text(self) -> str:
        algorithm = self.algorithm if self.rigidity is None else f"{self.algorithm} ({self.rigidity})"
        lines = [
            f"problem: {self.source}",
            f"algorithm: {algorithm}",
            "atom base: {" + ", ".join(str(a) for a in self.atom_base) + "}",
            f"results: {len(self.entries)}" + (" (truncated)" if self.truncated else ""),
        ]
        for number, entry in enumerate(self.entries, start=1):
            m = entry.metrics
            lines.append("")
            lines.append(f"result {number}")
            lines.append(f"  generalization: {entry.result.generalization}")
            lines.append("  store:")
            lines.extend(f"    {aup}" for aup in entry.result.store)
            lines.append(f"  left substitution: {entry.left_substitution}")
            lines.append(f"  right substitution: {entry.right_substitution}")
            lines.append(f"  metrics: store entries {m.store_entries}, stored symbols {m.stored_symbols},"
                         f" similarity {m.similarity:.4f}")
        return "\n".join(lines) + "\n"


def similarity_ratio(body: TermOrHedge, left: TermOrHedge, right: TermOrHedge) -> float:
    """Symbols kept in the generalization over the symbols of the larger input."""
    largest = max(symbol_count(left), symbol_count(right))
    if largest == 0:
        return 1.0
    return symbol_count(body) / largest


def verify_result(result: Result, problem_context, left: TermOrHedge, right: TermOrHedge) -> None:
    """
    Check that the store substitutions instantiate the generalization to both inputs.

    Raises:
        VerificationError: if a substitution violates the generalization's
            context or does not reproduce its input
    """
    tic = result.generalization
    for side, original in (("left", left), ("right", right)):
        sigma = result.reconstruction(side)
        try:
            required = instantiate_context(tic.context, sigma)
        except FreshnessViolation as error:
            logger.error("%s substitution of %s breaks its context: %s", side, tic, error)
            raise VerificationError(f"{side} substitution violates the context of {tic}") from error
        if not required.issubset(problem_context):
            logger.error("%s substitution of %s needs %s", side, tic, required)
            raise VerificationError(f"{side} instance of {tic} needs constraints beyond the input context")
        if not alpha_eq(problem_context, apply_substitution(tic.body, sigma), original):
            logger.error("%s substitution of %s does not reproduce the input", side, tic)
            raise VerificationError(f"{tic} does not reproduce the {side} input")


def build_entry(result: Result, left: TermOrHedge, right: TermOrHedge) -> ReportEntry:
    sizes = tuple(symbol_count(aup.left) + symbol_count(aup.right) for aup in result.store)
    metrics = Metrics(
        store_entries=len(result.store),
        stored_symbols=sum(sizes),
        entry_sizes=sizes,
        similarity=similarity_ratio(result.generalization.body, left, right),
    )
    return ReportEntry(result, result.reconstruction("left"), result.reconstruction("right"), metrics)


def run(config: RunConfig, problem: ProblemFile) -> Report:
    """
    Generalize the two inputs of a problem.

    Args:
        config: Run options
        problem: Parsed problem file

    Returns:
        Report: verified results; truncated is set when a limit cut the search

    Raises:
        ValueError: invalid configuration
        AtomBaseError: explicit atom base missing occurring atoms
        VerificationError: a result failed re-verification
    """
    config.validate()
    left, right = free_binders(problem.left, problem.right, config.free_binders)
    atom_base = compute_atom_base(TermInContext(problem.context, left),
                                  TermInContext(problem.context, right), config.atom_base)
    logger.info("generalizing %s with %s over %d atoms", problem.source, config.algorithm, len(atom_base))

    if config.algorithm == ALGORITHM_GENERAL:
        outcome = run_general(left, right, problem.context, atom_base, config.limits, config.engine_options())
        rigidity = None
    else:
        outcome = run_rigid(left, right, problem.context, atom_base, rigidity_from_name(config.rigidity),
                            config.algorithm, config.limits, config.engine_options())
        rigidity = config.rigidity

    results: Sequence[Result] = outcome.results
    if config.minimize:
        results = minimize(results, atom_base, key=lambda r: r.generalization)

    entries = []
    for result in results:
        verify_result(result, problem.context, left, right)
        entries.append(build_entry(result, left, right))
    return Report(problem.source, config.algorithm, rigidity, tuple(sorted(atom_base)),
                  tuple(entries), outcome.truncated)
