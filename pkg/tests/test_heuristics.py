import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from satguide.cnf import Assignment, CnfFormula, simplified_view, unit_propagate
from satguide.dataset import gen_sr_pair
from satguide.graphnet import ModelParams
from satguide.heuristics import (HybridHeuristic, RandomHeuristic, dlis, dlis_scores, hybrid_choice, jw_os,
                                 jw_scores, network_readout, neural_choice, random_choice)


def view_of(num_vars, clauses):
    return simplified_view(CnfFormula.from_dimacs_clauses(num_vars, clauses))


def model_with_sat_bias(bias, seed=0):
    # sat head weights are zero at init, so sat prob = sigmoid(num_literals * bias)
    m = ModelParams.init(8, 2, attention=True, seed=seed)
    m.tensors["sat.b"][...] = bias
    return m


class TestJW:
    def test_fig2(self, fig2):
        view = simplified_view(fig2)
        s = jw_scores(view)
        assert s[0] == s[2] == s[5] == 0.125
        assert s[3] == s[4] == 0.25 and 1 not in s
        assert jw_os(view) == 3  # not-B beats C on code

    def test_single(self):
        assert jw_os(view_of(1, [[1]])) == 0

    def test_scaling_invariance(self, fig2):
        s = jw_scores(simplified_view(fig2))
        for c in (0.001, 3.0, 1e6):
            scaled = {k: v * c for k, v in s.items()}
            assert min(scaled, key=lambda k: (-scaled[k], k)) == 3


class TestDLIS:
    def test_fig2(self, fig2):
        view = simplified_view(fig2)
        assert dlis_scores(view) == {0: 1, 2: 1, 3: 1, 4: 1, 5: 1}
        assert dlis(view) == 0

    def test_examples(self):
        assert dlis(view_of(3, [[1, 2], [1, 3]])) == 0
        assert dlis(view_of(1, [[-1]])) == 1


@pytest.mark.parametrize("h", [jw_os, dlis])
def test_clause_order_invariance(h, rng):
    for i in range(50):
        f = gen_sr_pair(10, np.random.default_rng(i))[1]
        base = h(simplified_view(f))
        for _ in range(3):
            clauses = [f.clauses[j] for j in rng.permutation(len(f.clauses))]
            clauses = [tuple(rng.permutation(c).tolist()) for c in clauses]
            assert h(simplified_view(CnfFormula(f.num_vars, clauses))) == base


class TestRandom:
    def test_single_literal(self):
        for seed in range(10):
            assert random_choice(view_of(1, [[1]]), np.random.default_rng(seed)) == 0

    def test_deterministic(self, fig2):
        view = simplified_view(fig2)
        a = [RandomHeuristic(4)(view) for _ in range(5)]
        h = RandomHeuristic(4)
        b = [h(view) for _ in range(5)]
        h.reset()
        assert b == [h(view) for _ in range(5)]
        assert len(set(a)) == 1

    def test_uniform_frequencies(self):
        view = view_of(2, [[1, 2], [-1, -2]])
        assert view.literals() == [0, 1, 2, 3]
        rng = np.random.default_rng(0)
        draws = np.array([random_choice(view, rng) for _ in range(10_000)])
        sigma = np.sqrt(10_000 * 0.25 * 0.75)
        for code in range(4):
            assert abs((draws == code).sum() - 2500) < 4 * sigma


def random_partial_view(seed):
    """A propagated residual view of an SR formula under a random partial assignment."""
    rng = np.random.default_rng(seed)
    f = gen_sr_pair(int(rng.integers(3, 12)), rng)[int(rng.integers(2))]
    a = Assignment(f.num_vars)
    for v in rng.permutation(f.num_vars)[: int(rng.integers(0, f.num_vars // 2 + 1))]:
        if a.values[v] is None:
            a.assign(2 * int(v) + int(rng.integers(2)))
            if not unit_propagate(f, a).ok:
                return None, None
    return simplified_view(f, a), a


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_heuristics_return_valid_literal(seed):
    view, a = random_partial_view(seed)
    if view is None or view.is_empty or view.has_empty_clause:
        return
    model = ModelParams.init(4, 2, attention=bool(seed & 1), seed=seed % 7)
    for h in (jw_os, dlis, RandomHeuristic(seed), lambda v, a: neural_choice(v, model),
              HybridHeuristic(model)):
        code = h(view, a)
        assert a.values[code >> 1] is None
        assert code >> 1 in view.variables()


class TestNeural:
    def test_single_clause(self):
        assert neural_choice(view_of(1, [[1]]), ModelParams.init(4, 2)) == 0

    def test_uniform_policy_picks_smallest(self, fig2):
        m = ModelParams.init(4, 2)
        m.tensors["policy.w"][...] = 0.0
        assert neural_choice(simplified_view(fig2), m) == 0
        # absent polarities are never chosen even when tied
        assert neural_choice(view_of(3, [[-1, 2], [-1, 3]]), m) == 1

    def test_only_present_literals(self, fig2):
        for seed in range(20):
            m = ModelParams.init(4, 2, seed=seed)
            assert neural_choice(simplified_view(fig2), m) in simplified_view(fig2).literals()


class TestHybrid:
    def test_threshold_switch(self, fig2):
        view = simplified_view(fig2)
        n_lits = 6
        low = model_with_sat_bias(np.log(0.2 / 0.8) / n_lits)
        high = model_with_sat_bias(np.log(0.9 / 0.1) / n_lits)
        assert network_readout(view, low)[0] == pytest.approx(0.2, abs=1e-5)
        assert network_readout(view, high)[0] == pytest.approx(0.9, abs=1e-5)
        assert hybrid_choice(view, low) == jw_os(view)
        assert hybrid_choice(view, high) == neural_choice(view, high)

    def test_boundary_is_strict(self, fig2):
        view = simplified_view(fig2)
        m = model_with_sat_bias(0.0)  # sat prob exactly 0.5
        assert network_readout(view, m)[0] == 0.5
        assert hybrid_choice(view, m, threshold=0.5) == neural_choice(view, m)
        assert hybrid_choice(view, m, threshold=np.nextafter(0.5, 1)) == jw_os(view)

    def test_extreme_thresholds(self):
        checked = 0
        for seed in range(400):
            view, _ = random_partial_view(seed)
            if view is None or view.is_empty or view.has_empty_clause:
                continue
            m = ModelParams.init(6, 3, attention=bool(seed & 1), seed=seed)
            assert hybrid_choice(view, m, threshold=0.0) == neural_choice(view, m)
            assert hybrid_choice(view, m, threshold=1.0 + 1e-9) == jw_os(view)
            checked += 1
            if checked == 100:
                break
        assert checked == 100

    def test_fallback_counter(self, fig2):
        h = HybridHeuristic(model_with_sat_bias(-5.0))
        view = simplified_view(fig2)
        h(view)
        h(view)
        assert h.fallbacks == 2
