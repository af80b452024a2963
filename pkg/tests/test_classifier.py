import itertools

from hypothesis import given, settings, strategies as st

from mmotgraph.classifier import (
    CYCLE_RULE,
    MONGE_UNIQUE,
    NEGATIVE,
    UNKNOWN,
    RegularityProfile,
    check_cor32,
    check_gluing,
    check_negative,
    check_thm31,
    check_thm41,
    classify,
    verify_outcome,
)
from mmotgraph.gallery import (
    cocktail_party_fig8,
    example_21,
    example_22,
    example_41,
    path_fig,
    utility_graph,
)
from mmotgraph.graph import (
    InteractionGraph,
    complete_graph,
    cycle_graph,
    fan,
    star_graph,
)


def prof(g, ac=(), dirac=()):
    return RegularityProfile(g.m, frozenset(ac), frozenset(dirac))


@st.composite
def graph_and_profile(draw, max_m=7):
    m = draw(st.integers(2, max_m))
    pairs = list(itertools.combinations(range(1, m + 1), 2))
    edges = draw(st.lists(st.sampled_from(pairs), unique=True))
    g = InteractionGraph(m, frozenset(edges))
    ac = draw(st.sets(st.integers(1, m)))
    dirac = draw(st.sets(st.integers(1, m))) - ac
    return g, RegularityProfile(m, frozenset(ac), frozenset(dirac))


class TestThm31:
    def test_four_cycle_condition_ii(self):
        g = cycle_graph(4)
        r = check_thm31(g, prof(g, {1, 4}))
        assert r.rule == "Thm3.1-ii" and r.required_ac == {1, 4}

    def test_triangle_condition_i(self):
        g = complete_graph(3)
        r = check_thm31(g, prof(g, {1}))
        assert r.rule == "Thm3.1-i" and r.required_ac == {1}

    def test_utility_graph(self):
        g = utility_graph()
        r = check_thm31(g, prof(g, {1, 2}))
        assert r is not None and r.required_ac == {1, 2}

    def test_needs_first_marginal(self):
        g = cycle_graph(4)
        assert check_thm31(g, prof(g, {2, 4})) is None


class TestCor32:
    def test_cocktail_party(self):
        g = cocktail_party_fig8()
        r = check_cor32(g, prof(g, {1, 3}))
        assert r.required_ac == {1, 3}

    def test_complete(self):
        g = complete_graph(5)
        assert check_cor32(g, prof(g, {1})).required_ac == {1}

    def test_five_cycle(self):
        g = cycle_graph(5)
        assert check_cor32(g, prof(g, range(1, 6))) is None


class TestThm41:
    def test_example_21(self):
        g = example_21()
        r = check_thm41(g, prof(g, {1, 6}))
        assert r.required_ac == {1, 6}

    def test_star_center_one(self):
        g = star_graph(6, center=1)
        assert check_thm41(g, prof(g, {1})).required_ac == {1}

    def test_star_center_seven(self):
        g = star_graph(6, center=7)
        assert check_thm41(g, prof(g, {1, 7})).required_ac == {1, 7}
        assert check_thm41(g, prof(g, {1})) is None


class TestGluing:
    def test_example_22(self):
        g = example_22()
        for p, q in itertools.product((6, 7, 8), (4, 5)):
            r = check_gluing(g, prof(g, {1, p, q}))
            assert r is not None and r.rule == "Prop4.2", (p, q)

    def test_path_figure(self):
        g = path_fig()
        r = check_gluing(g, prof(g, {1, 2, 5, 6}))
        assert r.rule == "Prop4.3" and r.required_ac == {1, 2, 5, 6}

    def test_five_cycle(self):
        g = cycle_graph(5)
        assert check_gluing(g, prof(g, range(1, 6))) is None


class TestNegative:
    def test_disconnected(self):
        g = InteractionGraph.from_edges(4, [(1, 2), (3, 4)])
        out = classify(g, prof(g))
        assert (out.verdict, out.rule) == (NEGATIVE, "Prop2.1-1")

    def test_disconnected_with_dirac_rest_is_reduced(self):
        g = InteractionGraph.from_edges(4, [(1, 2), (3, 4)])
        out = classify(g, prof(g, {1}, {3, 4}))
        assert out.verdict == MONGE_UNIQUE
        assert verify_outcome(g, prof(g, {1}, {3, 4}), out)

    def test_missing_edge(self):
        g = cycle_graph(4)
        r = check_negative(g, prof(g, {1, 3}, {2, 4}))
        assert r.rule == "Prop2.1-2"

    def test_fan_25_unknown(self):
        out = classify(fan(2, 5), prof(fan(2, 5), range(1, 8)))
        assert (out.verdict, out.rule) == (UNKNOWN, "Prop6.1")

    def test_fan_13_is_positive(self):
        g = fan(1, 3)
        assert check_negative(g, prof(g, {1})) is None
        assert classify(g, prof(g, {1})).verdict == MONGE_UNIQUE

    def test_five_cycle_cited(self):
        for ac in ({1}, {1, 2}, set(range(1, 6))):
            out = classify(cycle_graph(5), prof(cycle_graph(5), ac))
            assert (out.verdict, out.rule) == (NEGATIVE, CYCLE_RULE)


class TestClassify:
    def test_four_cycle_needs_second_marginal(self):
        g = cycle_graph(4)
        out = classify(g, prof(g, {1}))
        assert out.verdict == UNKNOWN
        extra = {v for d in out.diagnostics for v in d.get("add_ac", [])}
        assert extra & {2, 4}

    def test_four_cycle_positive(self):
        g = cycle_graph(4)
        out = classify(g, prof(g, {1, 4}))
        assert out.verdict == MONGE_UNIQUE
        assert "Thm3.1-ii" in [r.rule for r in out.matched_rules]

    def test_example_41(self):
        g = example_41()
        assert classify(g, prof(g, {1, 3})).verdict == MONGE_UNIQUE

    def test_fan_concordance(self):
        for k in (1, 2):
            for n in (1, 2, 3):
                g = fan(k, n)
                out = classify(g, prof(g, range(1, g.m + 1)))
                if k == 1:
                    assert any(r.rule.startswith("Thm3.1") for r in out.matched_rules), (k, n)
            for n in (4, 5, 6):
                g = fan(k, n)
                out = classify(g, prof(g, range(1, g.m + 1)))
                assert out.verdict == UNKNOWN and not out.matched_rules, (k, n)

    def test_report_fields(self):
        g = cycle_graph(4)
        d = classify(g, prof(g, {1, 4})).to_dict()
        assert {"verdict", "rule", "required_ac", "witness", "diagnostics"} <= set(d)


@given(graph_and_profile())
@settings(max_examples=150, deadline=None)
def test_positive_outcomes_revalidate(gp):
    g, p = gp
    out = classify(g, p)
    if out.verdict == MONGE_UNIQUE:
        assert 1 in out.required_ac and out.required_ac <= p.ac
        assert verify_outcome(g, p, out)


@st.composite
def connected_with_first_ac(draw, max_m=7):
    m = draw(st.integers(2, max_m))
    pairs = list(itertools.combinations(range(1, m + 1), 2))
    spine = [(v, v + 1) for v in range(1, m)]
    edges = set(spine) | set(draw(st.lists(st.sampled_from(pairs), unique=True)))
    g = InteractionGraph(m, frozenset(edges)).relabel(
        {1: 1, **dict(zip(range(2, m + 1), draw(st.permutations(list(range(2, m + 1))))))})
    ac = draw(st.sets(st.integers(2, m))) | {1}
    return g, RegularityProfile(m, frozenset(ac))


@given(connected_with_first_ac(), st.data())
@settings(max_examples=150, deadline=None)
def test_monotone_in_regularity(gp, data):
    g, p = gp
    if classify(g, p).verdict != MONGE_UNIQUE:
        return
    free = [v for v in g.vertices if v not in p.ac and v not in p.dirac]
    extra = data.draw(st.sets(st.sampled_from(free))) if free else set()
    assert classify(g, p.with_ac(extra)).verdict == MONGE_UNIQUE


@given(graph_and_profile(max_m=6), st.data())
@settings(max_examples=100, deadline=None)
def test_relabel_equivariance(gp, data):
    g, p = gp
    rest = data.draw(st.permutations(list(range(2, g.m + 1))))
    perm = {1: 1, **{v: rest[k] for k, v in enumerate(range(2, g.m + 1))}}
    h = g.relabel(perm)
    q = RegularityProfile(g.m, frozenset(perm[v] for v in p.ac), frozenset(perm[v] for v in p.dirac))
    a, b = classify(g, p), classify(h, q)
    assert a.verdict == b.verdict
    assert a.rule == b.rule
