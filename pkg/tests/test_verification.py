import dataclasses
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from mmotgraph.classifier import RegularityProfile
from mmotgraph.gallery import example_41
from mmotgraph.graph import GraphError, InteractionGraph, complete_graph, cycle_graph, fan, star_graph
from mmotgraph.mmot import FLOAT, RATIONAL, CostModel, CouplingTensor, DiscreteMarginal, solve_kp
from mmotgraph.verification import (
    VerificationError,
    check_monge,
    gen_counterexample_prop21,
    probe_uniqueness,
    pushforward,
    run_experiment,
    trial_marginals,
)


def zero_one(m):
    return tuple(DiscreteMarginal(((F(0),), (F(1),)), (F(1, 2), F(1, 2))) for _ in range(m))


DIAG = CouplingTensor((2, 2), {(0, 0): F(1, 2), (1, 1): F(1, 2)})
PRODUCT = CouplingTensor((2, 2), {(a, b): F(1, 4) for a in (0, 1) for b in (0, 1)})


class TestMonge:
    def test_diagonal(self):
        v = check_monge(DIAG)
        assert v.is_monge and v.map == {0: (0, 0), 1: (1, 1)}

    def test_product(self):
        v = check_monge(PRODUCT)
        assert not v.is_monge
        assert v.worst_split["atom"] == 0
        assert sorted(v.worst_split["masses"].values()) == [F(1, 4), F(1, 4)]

    def test_float_tolerance(self):
        plan = CouplingTensor((2, 2), {(0, 0): 0.5, (0, 1): 1e-9, (1, 1): 0.5})
        assert check_monge(plan).is_monge
        assert not check_monge(plan, mass_tol=0).is_monge

    def test_pushforward(self):
        v = check_monge(DIAG)
        assert pushforward(DIAG, v, (F(1, 2), F(1, 2)), 1) == [F(1, 2), F(1, 2)]

    def test_to_dict(self):
        assert check_monge(PRODUCT).to_dict()["is_monge"] is False


class TestProbe:
    def test_unique_monotone(self):
        cm = CostModel(complete_graph(2), zero_one(2))
        res = solve_kp(cm, RATIONAL)
        v = probe_uniqueness(cm, res, k=4)
        assert v.unique and v.probes_used == 8

    def test_zero_probes(self):
        cm = CostModel(complete_graph(2), zero_one(2))
        v = probe_uniqueness(cm, solve_kp(cm, RATIONAL), k=0)
        assert v.unique and v.probes_used == 0

    def test_non_optimal_base_rejected(self):
        cm = CostModel(complete_graph(2), zero_one(2))
        res = solve_kp(cm, RATIONAL)
        bad = dataclasses.replace(res, coupling=PRODUCT)
        with pytest.raises(VerificationError):
            probe_uniqueness(cm, bad)

    def test_finds_second_plan(self):
        g = InteractionGraph.from_edges(4, [(1, 2), (3, 4)])
        cm = CostModel(g, zero_one(4))
        for mode in (RATIONAL, FLOAT):
            res = solve_kp(cm, mode)
            v = probe_uniqueness(cm, res, k=8, seed=1)
            assert not v.unique and v.second_plan is not None
            assert v.second_plan.entries != res.coupling.entries


class TestCounterexamples:
    def test_disjoint_edges(self):
        g = InteractionGraph.from_edges(4, [(1, 2), (3, 4)])
        for seed in range(3):
            ce = gen_counterexample_prop21("disconnected", g, seed=seed)
            assert ce.verify()
            assert ce.solve.value == ce.optimum

    def test_dirac_cut(self):
        ce = gen_counterexample_prop21("disconnected", example_41(), seed=2, dirac={3})
        assert ce.verify()
        assert ce.cm.marginals[2].n == 1

    def test_missing_edge(self):
        g = fan(1, 3).relabel({1: 2, 2: 1, 3: 3, 4: 4})
        ce = gen_counterexample_prop21("missing_edge", g, seed=0)
        assert ce.verify()

    def test_connected_rejected(self):
        with pytest.raises(GraphError):
            gen_counterexample_prop21("disconnected", cycle_graph(4))
        with pytest.raises(GraphError):
            gen_counterexample_prop21("missing_edge", star_graph(3))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            gen_counterexample_prop21("sideways", cycle_graph(4))

    @given(st.integers(0, 10_000), st.integers(1, 3))
    @settings(max_examples=15, deadline=None)
    def test_random_seeds(self, seed, d):
        g = InteractionGraph.from_edges(5, [(1, 2), (2, 3), (4, 5)])
        assert gen_counterexample_prop21("disconnected", g, seed=seed, d=d).verify()
        assert gen_counterexample_prop21("missing_edge", g, seed=seed, d=d).verify()


class TestExperiment:
    def test_zero_trials(self):
        g = cycle_graph(4)
        rep = run_experiment(g, RegularityProfile(4, frozenset({1, 4})), trials=0)
        assert rep["trials"] == 0 and rep["monge_rate"] == 0.0 and rep["violations"] == []

    def test_negative_graph_not_unique(self):
        g = InteractionGraph.from_edges(4, [(1, 2), (3, 4)])
        rep = run_experiment(g, RegularityProfile(4, frozenset({1})), trials=3, n=3)
        assert rep["rule"] == "Prop2.1-1"
        assert rep["unique_rate"] == 0.0

    def test_deterministic(self):
        g = cycle_graph(4)
        p = RegularityProfile(4, frozenset({1, 4}))
        a = run_experiment(g, p, trials=4, n=3, seed=5, lemma=True)
        b = run_experiment(g, p, trials=4, n=3, seed=5, lemma=True)
        a.pop("mean_solve_ms"), b.pop("mean_solve_ms")
        assert a == b
        assert a["monge_rate"] == a["unique_rate"] == a["twist_rate"] == 1.0
        assert a["lemma_checks"] > 0 and not a["violations"]

    def test_rational_mode(self):
        g = complete_graph(3)
        rep = run_experiment(g, RegularityProfile(3, frozenset({1})), trials=3, n=3, mode=RATIONAL)
        assert rep["monge_rate"] == rep["unique_rate"] == rep["twist_rate"] == 1.0

    def test_dirac_marginals(self):
        g = cycle_graph(4)
        marg = trial_marginals(g, RegularityProfile(4, frozenset({1, 3}), frozenset({2, 4})), 3, 2, 0, 0)
        assert [mu.n for mu in marg] == [3, 1, 3, 1]
