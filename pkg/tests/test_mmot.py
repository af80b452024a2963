import itertools
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmotgraph.duality import dual_violation, extract_splitting_set
from mmotgraph.graph import (
    InteractionGraph,
    ResourceCapError,
    complete_graph,
    cycle_graph,
    path_graph,
    star_graph,
)
from mmotgraph.mmot import (
    FLOAT,
    RATIONAL,
    CostModel,
    DiscreteMarginal,
    ProblemError,
    cost,
    cost_tensor,
    discretize,
    general_position,
    solve_kp,
)


def line(*xs, weights=None):
    n = len(xs)
    w = weights or [F(1, n)] * n
    return DiscreteMarginal(tuple((F(x),) for x in xs), tuple(F(v) for v in w))


def zero_one(m):
    return tuple(line(0, 1) for _ in range(m))


@st.composite
def small_instances(draw, max_m=4, max_n=3):
    m = draw(st.integers(2, max_m))
    pairs = list(itertools.combinations(range(1, m + 1), 2))
    edges = draw(st.lists(st.sampled_from(pairs), min_size=1, unique=True))
    d = draw(st.integers(1, 2))
    marg = []
    for _ in range(m):
        n = draw(st.integers(1, max_n))
        pts = draw(st.lists(st.tuples(*[st.integers(-5, 5)] * d), min_size=n, max_size=n, unique=True))
        raw = draw(st.lists(st.integers(1, 5), min_size=n, max_size=n))
        tot = sum(raw)
        marg.append(DiscreteMarginal(tuple(tuple(F(c) for c in p) for p in pts),
                                     tuple(F(r, tot) for r in raw)))
    return CostModel(InteractionGraph(m, frozenset(edges)), tuple(marg))


class TestMarginal:
    def test_weights_must_be_nonnegative(self):
        with pytest.raises(ProblemError):
            DiscreteMarginal(((F(0),), (F(1),)), (F(3, 2), F(-1, 2)))

    def test_atoms_distinct(self):
        with pytest.raises(ProblemError):
            DiscreteMarginal(((F(0),), (F(0),)), (F(1, 2), F(1, 2)))

    def test_discretize_single_atom(self):
        mu = discretize("uniform", n=1, d=2, seed=3, mode=RATIONAL)
        assert mu.n == 1 and mu.weights == (F(1),)

    def test_discretize_deterministic(self):
        assert discretize("uniform", 4, 2, seed=11) == discretize("uniform", 4, 2, seed=11)

    def test_discretize_general_position(self):
        mu = discretize("uniform", n=4, d=2, seed=7, mode=RATIONAL)
        assert mu.n == 4 and set(mu.weights) == {F(1, 4)}
        assert general_position(mu.atoms)

    def test_gaussian(self):
        mu = discretize("gaussian", n=5, d=3, seed=1)
        assert mu.n == 5 and mu.d == 3


class TestCost:
    def test_complete_three_ones(self):
        cm = CostModel(complete_graph(3), tuple(line(1) for _ in range(3)))
        assert cost(cm, (0, 0, 0)) == 3

    def test_origin(self):
        cm = CostModel(cycle_graph(4), tuple(line(0) for _ in range(4)))
        assert cost(cm, (0, 0, 0, 0)) == 0

    def test_four_cycle_arithmetic(self):
        cm = CostModel(cycle_graph(4), tuple(line(x) for x in (1, 2, 3, 4)))
        assert cost(cm, (0, 0, 0, 0)) == 24

    def test_index_out_of_range(self):
        cm = CostModel(complete_graph(2), zero_one(2))
        with pytest.raises(ProblemError):
            cost(cm, (0, 2))

    @given(small_instances())
    @settings(max_examples=30, deadline=None)
    def test_tensor_matches_pointwise(self, cm):
        tensor = cost_tensor(cm, exact=True)
        for t in itertools.product(*(range(n) for n in cm.shape)):
            assert tensor[t] == cost(cm, t)


class TestSolve:
    def test_two_marginal_monotone(self):
        cm = CostModel(complete_graph(2), zero_one(2))
        res = solve_kp(cm, RATIONAL)
        assert res.value == F(1, 2)
        assert res.coupling.entries == {(0, 0): F(1, 2), (1, 1): F(1, 2)}

    def test_three_complete_diagonal(self):
        cm = CostModel(complete_graph(3), zero_one(3))
        res = solve_kp(cm, RATIONAL)
        assert res.value == F(3, 2)
        assert set(res.coupling.entries) == {(0, 0, 0), (1, 1, 1)}

    def test_missing_edge_value_independent_of_coupling(self):
        g = path_graph(3)
        cm = CostModel(g, (line(0, 1), line(2), line(0, 1)))
        res = solve_kp(cm, RATIONAL)
        mono = {(0, 0, 0): F(1, 2), (1, 0, 1): F(1, 2)}
        prod = {(a, 0, b): F(1, 4) for a in (0, 1) for b in (0, 1)}
        val = lambda plan: sum(v * cost(cm, t) for t, v in plan.items())
        assert val(mono) == val(prod) == res.value

    def test_unequal_totals_rejected(self):
        bad = DiscreteMarginal(((F(0),),), (F(1, 2),))
        with pytest.raises(ProblemError):
            solve_kp(CostModel(complete_graph(2), (line(0, 1), bad)), RATIONAL)

    def test_cap(self, monkeypatch):
        monkeypatch.setenv("MMOT_VAR_CAP", "3")
        with pytest.raises(ResourceCapError):
            solve_kp(CostModel(complete_graph(2), zero_one(2)), RATIONAL)

    def test_float_matches_rational(self):
        g = star_graph(3)
        marg = tuple(discretize("uniform", 3, 2, seed=s, mode=RATIONAL) for s in range(4))
        cm = CostModel(g, marg)
        exact = solve_kp(cm, RATIONAL)
        approx = solve_kp(cm, FLOAT)
        assert abs(float(exact.value) - approx.value) <= 1e-9 * (1 + abs(approx.value))


@given(small_instances())
@settings(max_examples=40, deadline=None)
def test_rational_certificate(cm):
    res = solve_kp(cm, RATIONAL)
    for i, mu in enumerate(cm.marginals):
        assert res.coupling.marginal(i) == list(mu.weights)
    assert all(v > 0 for v in res.coupling.entries.values())
    assert res.value == res.coupling.objective(cm)
    assert dual_violation(res.duals, cm) <= 0
    assert res.duals.objective(cm) == res.value
    assert len(res.coupling.entries) <= sum(cm.shape) - cm.m + 1
    w = extract_splitting_set(res.duals, cm)
    assert set(res.coupling.entries) <= set(w.tuples)


@given(small_instances(max_m=3))
@settings(max_examples=25, deadline=None)
def test_float_certificate(cm):
    res = solve_kp(cm, FLOAT)
    fcm = cm.converted(FLOAT)
    for i, mu in enumerate(fcm.marginals):
        assert np.allclose(res.coupling.marginal(i), mu.weights, atol=1e-9)
    assert dual_violation(res.duals, fcm) <= 1e-9
    assert abs(res.duals.objective(fcm) - res.value) <= 1e-8 * (1 + abs(res.value))


@given(st.integers(0, 10_000), st.integers(1, 3), st.lists(st.integers(-3, 3), min_size=2, max_size=2))
@settings(max_examples=15, deadline=None)
def test_translation_keeps_support(seed, i, shift):
    g = cycle_graph(4)
    marg = [discretize("uniform", 3, 2, seed=seed + k, mode=RATIONAL) for k in range(4)]
    base = solve_kp(CostModel(g, tuple(marg)), RATIONAL)
    mu = marg[i]
    marg[i] = DiscreteMarginal(tuple(tuple(a + F(c) for a, c in zip(p, shift)) for p in mu.atoms), mu.weights)
    moved = solve_kp(CostModel(g, tuple(marg)), RATIONAL)
    assert set(moved.coupling.entries) == set(base.coupling.entries)
