"""
Unit tests for vnau_engine.py: rule instances, store rules, search and
the generalizations of the small worked problems
"""

from collections import Counter
from dataclasses import replace

import pytest

from services.errors import AtomBaseError, VerificationError
from services.generality import equi_general, minimize, more_general
from services.nominal import EMPTY_CONTEXT, FreshnessContext, TermInContext, alpha_eq
from services.terms import Abstraction, Atom, HedgeVar, IndVar, apply_substitution, render
from services.vnau_engine import (
    ABS_T, AUP, BINDERS_ALL, BINDERS_CANONICAL, DEC_H, DEC_T, MER, NAR_T, SOL_T,
    EngineOptions, SearchLimits, VnauEngine, measure, run_general,
)
from tests.strategies import term, tic

a, b, c = Atom("a"), Atom("b"), Atom("c")
ABC = (a, b, c)


def atom_base(problem):
    return frozenset(Atom(name) for name in problem.signature.atoms)


def solve(problem, **options):
    return run_general(problem.left, problem.right, problem.context, atom_base(problem),
                       options=EngineOptions(**options))


def least_general(outcome, base):
    return minimize(outcome.results, base, key=lambda r: r.generalization)


def abstracted_bodies(outcome):
    return [render(r.generalization.body) for r in outcome.results
            if isinstance(r.generalization.body, Abstraction)]


class TestProblems:
    """Anti-unification problems"""

    def test_str(self):
        """Positive Test: var: left =^= right"""
        assert str(AUP(HedgeVar("X"), term("f(a)"), ())) == "X: f(a) ≜ eps"

    def test_individual_variable_needs_terms(self):
        """Negative Test: an individual variable over a hedge"""
        with pytest.raises(ValueError, match="individual terms"):
            AUP(IndVar("x"), (a, b), (c,))


class TestInitialState:
    """Setup and atom base checks"""

    def test_root_variable(self):
        """Positive Test: one problem X: l =^= r, empty store"""
        engine = VnauEngine(EMPTY_CONTEXT, ABC)
        st = engine.initial_state(term("f(a)"), term("g(b)"))
        assert [str(p) for p in st.problems] == ["X: f(a) ≜ g(b)"]
        assert st.store == ()
        assert render(st.generalization_body()) == "X"

    def test_root_avoids_input_variable_names(self):
        """Edge Case: the inputs already use X"""
        engine = VnauEngine(EMPTY_CONTEXT, ABC)
        st = engine.initial_state(term("f(X)"), term("g(b)"))
        assert st.root == HedgeVar("X0")

    def test_inputs_outside_atom_base(self):
        """Negative Test: c occurs but A = {a, b}"""
        engine = VnauEngine(EMPTY_CONTEXT, (a, b))
        with pytest.raises(AtomBaseError, match="missing c"):
            engine.initial_state(term("f(a)"), term("f(c)"))

    def test_unknown_binder_choice(self):
        """Negative Test: binder choice must be all or canonical"""
        with pytest.raises(ValueError, match="binder choice"):
            VnauEngine(EMPTY_CONTEXT, ABC, EngineOptions(binder_choice="some"))


class TestRuleInstances:
    """Successor generation"""

    def test_successors_of_equal_applications(self):
        """Positive Test: f(a) against f(a) offers Dec-T and two Dec-H splits"""
        engine = VnauEngine(EMPTY_CONTEXT, ABC)
        st = engine.initial_state(term("f(a)"), term("f(a)"))
        rules = Counter(rule for rule, _ in engine.successors(st))
        assert rules == Counter({DEC_T: 1, DEC_H: 2})

    def test_expand_prefers_eager_rule(self):
        """Positive Test: the search only takes Dec-T"""
        engine = VnauEngine(EMPTY_CONTEXT, ABC)
        st = engine.initial_state(term("f(a)"), term("f(a)"))
        children = engine.expand(st)
        assert [rule for rule, _ in children] == [DEC_T]
        (_, child), = children
        assert [str(p) for p in child.problems] == ["Y0: a ≜ a"]
        assert render(child.generalization_body()) == "f(Y0)"

    def test_solve_records_fresh_atoms(self):
        """Positive Test: Sol-T on f(a) and g(b) adds c # X"""
        engine = VnauEngine(EMPTY_CONTEXT, ABC)
        st = engine.initial_state(term("f(a)"), term("g(b)"))
        solved = [child for rule, child in engine.successors(st) if rule == SOL_T]
        assert len(solved) == 1
        assert solved[0].context == FreshnessContext.of((c, HedgeVar("X")))
        assert [str(s) for s in solved[0].store] == ["X: f(a) ≜ g(b)"]

    def test_abstraction_binders(self):
        """Positive Test: every admissible binder, or only the smallest"""
        left, right = term("a.f(a)"), term("b.f(b)")
        for choice, expected in ((BINDERS_ALL, 3), (BINDERS_CANONICAL, 1)):
            engine = VnauEngine(EMPTY_CONTEXT, ABC, EngineOptions(binder_choice=choice))
            st = engine.initial_state(left, right)
            assert sum(1 for rule, _ in engine.successors(st) if rule == ABS_T) == expected

    def test_dec_h_keeps_a_remainder(self):
        """Edge Case: a =^= b splits as (a, eps) and (eps, b) but never (a, b)"""
        engine = VnauEngine(EMPTY_CONTEXT, ABC)
        st = engine.initial_state((a,), (b,))
        splits = [child.problems for rule, child in engine.successors(st) if rule == DEC_H]
        assert [[str(p) for p in problems] for problems in splits] == [
            ["Y0: a ≜ eps", "Y1: eps ≜ b"],
            ["Y0: eps ≜ b", "Y1: a ≜ eps"],
        ]

    def test_measure_decreases_along_a_derivation(self):
        """Positive Test: every expansion lowers the measure"""
        engine = VnauEngine(EMPTY_CONTEXT, ABC)
        st = engine.initial_state(term("f(a, b)"), term("f(b)"))
        while st.problems:
            _, child = engine.expand(st)[0]
            assert measure(child) < measure(st)
            st = child


class TestStoreRules:
    """Merging and narrowing once every problem is solved"""

    def test_merge_shares_a_variable(self):
        """Positive Test: a =^= b twice becomes one variable"""
        engine = VnauEngine(EMPTY_CONTEXT, ABC)
        outcome = engine.run(term("f(a, a)"), term("f(b, b)"))
        bodies = {render(r.generalization.body) for r in outcome.results}
        assert "f(x1, x1)" in bodies

    def test_merge_instances_on_equivariant_entries(self):
        """Positive Test: a =^= b and b =^= a merge under (a b)"""
        engine = VnauEngine(EMPTY_CONTEXT, (a, b))
        start = engine.initial_state(term("f(a, b)"), term("f(b, a)"))
        x, y = IndVar("x"), IndVar("y")
        st = replace(start, problems=(), store=(AUP(x, a, b), AUP(y, b, a)),
                     bindings=((start.root, (term("f(x, y)"),)),))
        merged = list(engine.merge_instances(st))
        assert len(merged) == 1
        assert merged[0].derivation[-1] == MER
        assert render(merged[0].generalization_body()) == "f(x, {(a b)} x)"

    def test_narrowing_is_optional(self):
        """Positive Test: both the hedge and the individual variable survive"""
        outcome = run_general(term("f(a)"), term("g(b)"), EMPTY_CONTEXT, ABC)
        bodies = {render(r.generalization.body) for r in outcome.results}
        assert {"X1", "x1"} <= bodies
        narrowed = [r for r in outcome.results if render(r.generalization.body) == "x1"]
        assert NAR_T in narrowed[0].derivation

    def test_always_narrow(self):
        """Positive Test: keep_unnarrowed off drops the hedge variable version"""
        outcome = run_general(term("f(a)"), term("g(b)"), EMPTY_CONTEXT, ABC,
                              options=EngineOptions(keep_unnarrowed=False))
        assert "X1" not in {render(r.generalization.body) for r in outcome.results}


class TestSearch:
    """Exhaustive search, limits and options"""

    def test_results_reconstruct_inputs(self, problem):
        """Positive Test: each store maps the generalization back to both inputs"""
        p = problem("two_lggs.vnau")
        for result in solve(p).results:
            body = result.generalization.body
            assert alpha_eq(p.context, apply_substitution(body, result.reconstruction("left")), p.left)
            assert alpha_eq(p.context, apply_substitution(body, result.reconstruction("right")), p.right)

    def test_reconstruction_side(self, problem):
        """Negative Test: only left and right"""
        result = solve(problem("two_lggs.vnau")).results[0]
        with pytest.raises(ValueError, match="side"):
            result.reconstruction("middle")

    LGG_GAPS = tic("b # X, c # X, a # Y, b # Y", "b.f(X, b, Y)")
    LGG_SHARED = tic("c # z", "b.f(z, {(b a)(c b)} z)")
    # X: a =^= eps, Y: eps =^= b, z: b =^= c after renaming the binder to b
    SPLIT_TAIL = tic("b # X, c # X, a # Y, c # Y, a # z", "b.f(X, Y, z)")

    def test_two_published_lggs_are_kept(self, problem):
        """Positive Test: both hand-derived lggs of c.f(a, c) and b.f(b, c) survive minimization"""
        p = problem("two_lggs.vnau")
        kept = least_general(solve(p), atom_base(p))
        for expected in (self.LGG_GAPS, self.LGG_SHARED):
            assert any(equi_general(r.generalization, expected, ABC) for r in kept)

    def test_incomparable_generalization_is_covered(self, problem):
        """Positive Test: b.f(X, Y, z) generalizes both inputs but neither lgg, so more results stay"""
        p = problem("two_lggs.vnau")
        for side in (p.left, p.right):
            assert more_general(self.SPLIT_TAIL, TermInContext(p.context, side), ABC) is not None
        for lgg in (self.LGG_GAPS, self.LGG_SHARED):
            assert more_general(self.SPLIT_TAIL, lgg, ABC) is None
            assert more_general(lgg, self.SPLIT_TAIL, ABC) is None
        kept = least_general(solve(p), atom_base(p))
        assert any(more_general(self.SPLIT_TAIL, r.generalization, ABC) is not None for r in kept)
        assert len(kept) == 15

    def test_lggs_come_from_separate_branches(self, problem):
        """Positive Test: without state deduplication each lgg has its own derivation"""
        p = problem("two_lggs.vnau")
        outcome = solve(p, memoize=False)
        assert outcome.stats.memo_hits == 0
        assert outcome.stats.final_states >= solve(p).stats.final_states
        derivations = {
            r.derivation for r in outcome.results
            if any(equi_general(r.generalization, lgg, ABC) for lgg in (self.LGG_GAPS, self.LGG_SHARED))
        }
        assert len(derivations) >= 2

    def test_forty_one_least_general(self, problem):
        """Positive Test: f(a, b, b, a) against f(c, c)"""
        p = problem("forty_one.vnau")
        assert len(least_general(solve(p), atom_base(p))) == 41

    def test_hedge_variable_input(self, problem):
        """Positive Test: some lgg of f(a, b, b, a) and f(Y, (a b).Y) is the right input"""
        p = problem("equivariant.vnau")
        expected = TermInContext(EMPTY_CONTEXT, p.right)
        kept = least_general(solve(p), atom_base(p))
        assert any(equi_general(r.generalization, expected, atom_base(p)) for r in kept)

    def test_renamed_binders(self):
        """Positive Test: a.f(a) and b.f(b) abstract over a once binders are canonical"""
        outcome = run_general(term("a.f(a)"), term("b.f(b)"), EMPTY_CONTEXT, ABC,
                              options=EngineOptions(binder_choice=BINDERS_CANONICAL))
        assert abstracted_bodies(outcome) == ["a.f(a)"]
        assert [render(r.generalization.body) for r in least_general(outcome, ABC)] == ["a.f(a)"]

    def test_every_binder_then_minimize(self):
        """Positive Test: three alpha-equivalent results collapse to one"""
        outcome = run_general(term("a.f(a)"), term("b.f(b)"), EMPTY_CONTEXT, ABC)
        assert abstracted_bodies(outcome) == ["a.f(a)", "b.f(b)", "c.f(c)"]
        assert [render(r.generalization.body) for r in least_general(outcome, ABC)] == ["a.f(a)"]

    def test_no_common_binder(self):
        """Edge Case: a.f(b) and b.f(a) with A = {a, b} are stored whole"""
        outcome = run_general(term("a.f(b)"), term("b.f(a)"), EMPTY_CONTEXT, (a, b))
        assert "x1" in {render(r.generalization.body) for r in outcome.results}

    def test_result_limit(self, problem):
        """Edge Case: max_results cuts the search and flags it"""
        p = problem("forty_one.vnau")
        outcome = run_general(p.left, p.right, p.context, atom_base(p), SearchLimits(max_results=3))
        assert outcome.truncated
        assert len(outcome.results) == 3

    def test_state_limit(self, problem):
        """Edge Case: max_states cuts the search and flags it"""
        p = problem("two_lggs.vnau")
        outcome = run_general(p.left, p.right, p.context, atom_base(p), SearchLimits(max_states=1))
        assert outcome.truncated

    def test_untruncated_run(self, problem):
        """Positive Test: a complete search is not flagged"""
        outcome = solve(problem("two_lggs.vnau"))
        assert not outcome.truncated
        assert outcome.stats.final_states >= len(outcome.results)

    @pytest.mark.parametrize("options", [
        {"memoize": False},
        {"workers": 3},
        {"check_invariants": True},
    ])
    def test_options_do_not_change_results(self, problem, options):
        """Positive Test: memoization, threads and checks leave the result set alone"""
        p = problem("two_lggs.vnau")
        baseline = [r.key() for r in solve(p).results]
        assert [r.key() for r in solve(p, **options).results] == baseline


class TestInvariantChecks:
    """Verification hooks"""

    def test_tampered_state_is_reported(self):
        """Negative Test: a state that no longer reconstructs the left input"""
        engine = VnauEngine(EMPTY_CONTEXT, ABC)
        st = engine.initial_state(term("f(a)"), term("f(b)"))
        broken = replace(st, problems=(AUP(st.root, term("f(c)"), term("f(b)")),))
        with pytest.raises(VerificationError, match="left input"):
            engine.check_reconstruction(broken)

    def test_initial_state_reconstructs(self):
        """Positive Test: no error for a fresh state"""
        engine = VnauEngine(EMPTY_CONTEXT, ABC)
        engine.check_reconstruction(engine.initial_state(term("f(a)"), term("f(b)")))
