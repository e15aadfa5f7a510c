"""
Property-based tests: permutation laws, alpha-equivalence, freshness,
the more-general relation, soundness, termination and completeness of the
engines, rigid shapes and the LCS alignments.

HYPOTHESIS_PROFILE=acceptance raises every suite here to 1000 examples.
"""

import itertools

import pytest
from hypothesis import HealthCheck, assume, given, reject, settings
from hypothesis import strategies as st

from services.clone_service import verify_result
from services.errors import FreshnessViolation
from services.generality import canonical_text, more_general, minimize
from services.nominal import (
    EMPTY_CONTEXT, FreshnessContext, TermInContext, alpha_eq, derive_fresh, instantiate_context,
    respects,
)
from services.problem_parser import parse_term
from services.rigid_engine import MODE_RIGID, MODE_RIGID_X, is_rigid_shape, lcs_alignments, run_rigid
from services.terms import (
    Abstraction, Application, Atom, HedgeVar, IndVar, Permutation, Suspension,
    apply_permutation, apply_substitution, function_symbols_of, render, symbol_count, variables_of,
)
from services.vnau_engine import EngineOptions, SearchLimits, run_general
from tests.strategies import (
    ATOMS, SIGNATURE, hedges, permutations, problem_pairs, substitutions, term, terms,
    terms_in_context,
)

LIMITS = SearchLimits(max_states=2_000, max_results=50)
INVARIANT_LIMITS = SearchLimits(max_states=300, max_results=20)

# substitutions that break a context are rejected
FILTERED = settings(suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])

# inputs up to depth 4 and width 4 over at most 4 atoms
WIDE_PAIRS = problem_pairs(depth=4, width=4, max_atoms=4)


def instance(tic, sigma):
    """tic under sigma with the smallest context that makes it an instance."""
    try:
        context = instantiate_context(tic.context, sigma)
    except FreshnessViolation:
        reject()
    return TermInContext(context, apply_substitution(tic.body, sigma))


class TestPermutationLaws:
    """Swaps, composition and inverses"""

    @given(permutations(), permutations(), st.sampled_from(ATOMS))
    def test_composition_acts_right_to_left(self, p1, p2, atom):
        assert p1.compose(p2).act(atom) == p1.act(p2.act(atom))

    @given(permutations())
    def test_inverse_cancels(self, p):
        assert p.inverse().compose(p).is_identity()
        assert p.compose(p.inverse()).is_identity()

    @given(permutations())
    def test_normal_form_has_same_action(self, p):
        q = p.normalized()
        assert all(q.act(a) == p.act(a) for a in ATOMS)
        assert q.normalized() == q

    @given(permutations(), st.one_of(terms(), hedges()))
    def test_inverse_undoes_action_on_terms(self, p, t):
        back = apply_permutation(p.inverse(), apply_permutation(p, t))
        assert alpha_eq(EMPTY_CONTEXT, back, t)


class TestAlphaEquivalence:
    """alpha_eq as an equivalence compatible with permutations"""

    @given(terms())
    def test_reflexive(self, t):
        assert alpha_eq(EMPTY_CONTEXT, t, t)

    @given(terms(variables=False), terms(variables=False))
    def test_symmetric(self, t1, t2):
        assert alpha_eq(EMPTY_CONTEXT, t1, t2) == alpha_eq(EMPTY_CONTEXT, t2, t1)

    @given(permutations(), terms(variables=False), terms(variables=False))
    def test_equivariant(self, p, t1, t2):
        moved = alpha_eq(EMPTY_CONTEXT, apply_permutation(p, t1), apply_permutation(p, t2))
        assert moved == alpha_eq(EMPTY_CONTEXT, t1, t2)


class TestFreshness:
    """derive_fresh against alpha_eq and instantiate_context"""

    @given(st.sampled_from(ATOMS[:3]), terms(atoms=ATOMS[:3], variables=False))
    def test_fresh_iff_swap_with_unused_atom_is_invisible(self, a, t):
        swapped = apply_permutation(Permutation.swap(a, Atom("d")), t)
        assert derive_fresh(EMPTY_CONTEXT, a, t) == alpha_eq(EMPTY_CONTEXT, swapped, t)

    @FILTERED
    @given(terms_in_context(depth=1), st.data())
    def test_instantiated_context_is_smallest(self, tic, data):
        sigma = data.draw(substitutions(variables_of(tic.body)))
        try:
            needed = instantiate_context(tic.context, sigma)
        except FreshnessViolation:
            reject()
        assert respects(sigma, tic.context, under=needed)
        for constraint in needed:
            smaller = FreshnessContext(needed.constraints - {constraint})
            assert not respects(sigma, tic.context, under=smaller)


class TestGeneralityLaws:
    """The more-general relation is a preorder; minimize is stable"""

    @given(terms_in_context())
    def test_reflexive(self, tic):
        assert more_general(tic, tic, ATOMS) is not None

    @FILTERED
    @given(terms_in_context(depth=1), st.data())
    def test_instance_of_instance(self, general, data):
        middle = instance(general, data.draw(substitutions(variables_of(general.body))))
        specific = instance(middle, data.draw(substitutions(variables_of(middle.body))))
        assert more_general(general, middle, ATOMS) is not None
        assert more_general(middle, specific, ATOMS) is not None
        assert more_general(general, specific, ATOMS) is not None

    @given(st.lists(terms_in_context(depth=1), max_size=4))
    def test_minimize_idempotent(self, gens):
        kept = minimize(gens, ATOMS)
        again = minimize(kept, ATOMS)
        assert [canonical_text(k) for k in again] == [canonical_text(k) for k in kept]
        for g in gens:
            assert any(more_general(g, k, ATOMS) is not None for k in kept)


class TestRendering:
    """Text form of terms"""

    @given(terms())
    def test_parse_inverts_render(self, t):
        assert parse_term(render(t), SIGNATURE) == t


def is_generalization(candidate, left, right, atoms):
    return all(more_general(candidate, TermInContext(EMPTY_CONTEXT, side), atoms) is not None
               for side in (left, right))


class TestGeneralEngine:
    """Results of the general algorithm on random ground inputs"""

    @given(WIDE_PAIRS)
    def test_results_are_generalizations(self, pair):
        atoms, left, right = pair
        outcome = run_general(left, right, EMPTY_CONTEXT, atoms, LIMITS)
        for result in outcome.results:
            verify_result(result, EMPTY_CONTEXT, left, right)
            assert is_generalization(result.generalization, left, right, atoms)

    @given(WIDE_PAIRS)
    def test_transitions_keep_invariants(self, pair):
        atoms, left, right = pair
        outcome = run_general(left, right, EMPTY_CONTEXT, atoms, INVARIANT_LIMITS,
                              EngineOptions(check_invariants=True))
        assert outcome.results or outcome.truncated


class TestRigidEngine:
    """Results of the rigid algorithm on random ground inputs"""

    @given(WIDE_PAIRS, st.sampled_from([MODE_RIGID, MODE_RIGID_X]))
    def test_rigid_results(self, pair, mode):
        atoms, left, right = pair
        outcome = run_rigid(left, right, EMPTY_CONTEXT, atoms, mode=mode, limits=LIMITS)
        for result in outcome.results:
            verify_result(result, EMPTY_CONTEXT, left, right)
            assert is_rigid_shape(result.generalization.body, mode)

    @given(WIDE_PAIRS)
    def test_rigid_x_keeps_invariants(self, pair):
        atoms, left, right = pair
        outcome = run_rigid(left, right, EMPTY_CONTEXT, atoms, mode=MODE_RIGID_X,
                            limits=INVARIANT_LIMITS, options=EngineOptions(check_invariants=True))
        assert outcome.results or outcome.truncated


# ---------------------------------------------------------------- completeness

ORACLE_VARIABLES = (IndVar("x"), IndVar("y"), HedgeVar("X"), HedgeVar("Y"))


def leaf_permutations(atoms):
    return [Permutation()] + [Permutation.swap(a, b) for a, b in itertools.combinations(atoms, 2)]


def small_terms(size, atoms, funs):
    """Every term with exactly size symbols, a suspension counting one."""
    if size == 1:
        yield from atoms
        yield from (Application(f, ()) for f in funs)
        for var in ORACLE_VARIABLES[:2]:
            for perm in leaf_permutations(atoms):
                yield Suspension(perm, var)
        return
    for a in atoms:
        for body in small_terms(size - 1, atoms, funs):
            yield Abstraction(a, body)
    for f in funs:
        for args in small_hedges(size - 1, atoms, funs):
            if args:
                yield Application(f, args)


def small_hedges(size, atoms, funs):
    """Every hedge with exactly size symbols."""
    if size == 0:
        yield ()
        return
    for first in range(1, size + 1):
        heads = list(small_terms(first, atoms, funs))
        if first == 1:
            heads += [Suspension(perm, var) for var in ORACLE_VARIABLES[2:] for perm in leaf_permutations(atoms)]
        for head in heads:
            for rest in small_hedges(size - first, atoms, funs):
                yield (head,) + rest


def contexts(body, atoms):
    """Every freshness context over the variables of body."""
    variables = sorted(variables_of(body), key=str)
    subsets = [c for k in range(len(atoms) + 1) for c in itertools.combinations(atoms, k)]
    for choice in itertools.product(subsets, repeat=len(variables)):
        yield FreshnessContext.of(*[(a, var) for var, chosen in zip(variables, choice) for a in chosen])


def small_generalizations(left, right, atoms, max_size=3):
    """Every generalization of left and right with at most max_size symbols."""
    funs = sorted(function_symbols_of(left) | function_symbols_of(right), key=str)
    for size in range(max_size + 1):
        for body in small_hedges(size, atoms, funs):
            if not is_generalization(TermInContext(EMPTY_CONTEXT, body), left, right, atoms):
                continue
            for context in contexts(body, atoms):
                candidate = TermInContext(context, body)
                if is_generalization(candidate, left, right, atoms):
                    yield candidate


def assert_complete(atoms, left, right):
    results = run_general(left, right, EMPTY_CONTEXT, atoms).results
    for candidate in small_generalizations(left, right, atoms):
        assert any(more_general(candidate, r.generalization, atoms) is not None for r in results), \
            f"{candidate} is not covered by any result"


class TestCompleteness:
    """Every small generalization is more general than some computed result"""

    @pytest.mark.parametrize("atoms,left,right", [
        ("ab", "f(a)", "f(b)"),
        ("ab", "f(a, b)", "f(b)"),
        ("ab", "f(a, a)", "f(b, b)"),
        ("ab", "f(a, b)", "f(b, a)"),
        ("ab", "a.f(a)", "b.f(b)"),
        ("ab", "a.k", "b"),
        ("a", "g(a)", "f(a)"),
    ])
    def test_worked_instances(self, atoms, left, right):
        assert_complete(tuple(Atom(name) for name in atoms), term(left), term(right))

    @settings(max_examples=10)
    @given(problem_pairs(depth=1, width=2, max_atoms=2))
    def test_random_instances(self, pair):
        atoms, left, right = pair
        assume(symbol_count(left) <= 3 and symbol_count(right) <= 3)
        assert_complete(atoms, left, right)


# --------------------------------------------------------------- alignments

def common_subsequences(w1, w2, k):
    """Every pair of increasing 1-based position tuples of length k spelling the same word."""
    found = set()
    for left in itertools.combinations(range(len(w1)), k):
        for right in itertools.combinations(range(len(w2)), k):
            if all(w1[i] == w2[j] for i, j in zip(left, right)):
                found.add(tuple((i + 1, j + 1) for i, j in zip(left, right)))
    return found


def longest_common(w1, w2):
    for k in range(min(len(w1), len(w2)), 0, -1):
        found = common_subsequences(w1, w2, k)
        if found:
            return found
    return set()


WORDS = st.lists(st.sampled_from([Atom("a"), Atom("b"), Atom("c")]), max_size=6).map(tuple)


class TestLcsAlignments:
    """Alignments against a brute force enumeration"""

    @given(WORDS, WORDS)
    def test_matches_brute_force(self, w1, w2):
        computed = {tuple((e.left, e.right) for e in a) for a in lcs_alignments(w1, w2)}
        assert computed == longest_common(w1, w2)

    @given(WORDS, WORDS)
    def test_sorted_without_duplicates(self, w1, w2):
        keys = [tuple((e.left, e.right) for e in a) for a in lcs_alignments(w1, w2)]
        assert keys == sorted(set(keys))
