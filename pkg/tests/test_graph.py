import itertools

import pytest
from hypothesis import given, settings, strategies as st

from mmotgraph.gallery import example_21, example_22, example_22_hint, fig13_hub, octahedral, path_fig
from mmotgraph.graph import (
    GraphError,
    InteractionGraph,
    ResourceCapError,
    complement,
    complete_graph,
    complete_multipartite,
    components,
    cycle_graph,
    empty_graph,
    extract,
    fan,
    find_gluing,
    format_graph_text,
    inner_hub,
    is_complete_k_partite,
    is_connected,
    join,
    maximal_cliques,
    neighborhood,
    parse_graph_text,
    path_graph,
    search_gluings,
    star_graph,
)


@st.composite
def graphs(draw, max_m=8):
    m = draw(st.integers(1, max_m))
    pairs = list(itertools.combinations(range(1, m + 1), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return InteractionGraph(m, frozenset(chosen))


def is_clique(g, vs):
    return all(g.has_edge(a, b) for a, b in itertools.combinations(vs, 2))


class TestConstruction:
    def test_edges_are_normalized(self):
        g = InteractionGraph.from_edges(3, [(2, 1), (3, 2)])
        assert g.sorted_edges() == [(1, 2), (2, 3)]

    def test_self_loop_rejected(self):
        with pytest.raises(GraphError):
            InteractionGraph.from_edges(2, [(1, 1)])

    def test_duplicate_rejected(self):
        with pytest.raises(GraphError):
            InteractionGraph.from_edges(3, [(1, 2), (2, 1)])

    def test_out_of_range(self):
        with pytest.raises(GraphError):
            InteractionGraph.from_edges(2, [(1, 3)])

    def test_neighborhoods(self):
        g = cycle_graph(4)
        assert neighborhood(g, 1) == {2, 4}
        assert neighborhood(g, 1, closed=True) == {1, 2, 4}

    def test_fan_shapes(self):
        assert fan(1, 2).edges == complete_graph(3).edges
        f13 = fan(1, 3)
        assert len(f13.edges) == 5 and not f13.has_edge(2, 4)
        assert len(fan(2, 5).edges) == 4 + 10

    def test_join_and_extract(self):
        assert join(empty_graph(1), empty_graph(2)).edges == star_graph(2).edges
        assert extract(complete_graph(4), InteractionGraph.from_edges(4, [(1, 3), (2, 4)])).edges == cycle_graph(4).edges
        with pytest.raises(GraphError):
            extract(path_graph(3), InteractionGraph.from_edges(3, [(1, 3)]))


class TestCliques:
    def test_example_21(self):
        assert maximal_cliques(example_21()).as_sets() == sorted(
            [frozenset({1, 2, 3, 6, 7, 8, 10}), frozenset({4, 5, 6, 7, 8}), frozenset({6, 7, 8, 9})],
            key=lambda s: tuple(sorted(s)))

    def test_complete(self):
        assert list(maximal_cliques(complete_graph(5))) == [(1, 2, 3, 4, 5)]

    def test_five_cycle(self):
        assert list(maximal_cliques(cycle_graph(5))) == [(1, 2), (1, 5), (2, 3), (3, 4), (4, 5)]

    def test_cap(self):
        with pytest.raises(ResourceCapError):
            maximal_cliques(empty_graph(33))

    @given(graphs())
    @settings(max_examples=80, deadline=None)
    def test_matches_brute_force(self, g):
        brute = []
        for r in range(1, g.m + 1):
            for vs in itertools.combinations(g.vertices, r):
                if is_clique(g, vs) and not any(is_clique(g, vs + (u,)) for u in g.vertices if u not in vs):
                    brute.append(vs)
        assert list(maximal_cliques(g)) == sorted(brute)


class TestHub:
    def test_example_21(self):
        assert inner_hub(example_21()).hub == {6, 7, 8}

    def test_complete(self):
        assert inner_hub(complete_graph(4)).hub == {1, 2, 3, 4}

    def test_disjoint_cliques(self):
        g = InteractionGraph.from_edges(5, [(1, 2), (3, 4), (4, 5), (3, 5)])
        assert inner_hub(g).hub == frozenset()

    def test_fan_14_has_none(self):
        assert inner_hub(fan(1, 4)).hub is None

    def test_fig13(self):
        assert inner_hub(fig13_hub()).hub == {2, 3, 4}

    @given(graphs())
    @settings(max_examples=60, deadline=None)
    def test_hub_inside_every_clique(self, g):
        res = inner_hub(g)
        if res.hub:
            assert all(res.hub <= set(c) for c in res.cliques)


class TestPartite:
    def test_octahedral(self):
        assert sorted(map(sorted, is_complete_k_partite(octahedral()))) == [[1, 3], [2, 5], [4, 6]]

    def test_four_cycle(self):
        assert sorted(map(sorted, is_complete_k_partite(cycle_graph(4)))) == [[1, 3], [2, 4]]

    def test_five_cycle(self):
        assert is_complete_k_partite(cycle_graph(5)) is None

    def test_multipartite_roundtrip(self):
        g = complete_multipartite([1, 2, 3])
        assert sorted(len(c) for c in is_complete_k_partite(g)) == [1, 2, 3]

    @given(graphs())
    @settings(max_examples=60, deadline=None)
    def test_complement_involution(self, g):
        assert complement(complement(g)) == g
        assert len(g.edges) + len(complement(g).edges) == g.m * (g.m - 1) // 2


class TestGluing:
    def test_example_22_hint(self):
        dec = find_gluing(example_22(), example_22_hint())
        assert dec is not None and len(dec.parts) == 2
        assert dec.parts[0].hub.hub == {6, 7, 8} or dec.parts[1].hub.hub == {6, 7, 8}

    def test_example_22_search(self):
        assert find_gluing(example_22()) is not None

    def test_path_is_a_tree_of_edges(self):
        dec = find_gluing(path_fig())
        assert dec is not None
        assert len(dec.meta_edges) == len(dec.parts) - 1

    def test_two_disjoint_edges(self):
        assert find_gluing(InteractionGraph.from_edges(4, [(1, 2), (3, 4)])) is None

    def test_bad_hint(self):
        with pytest.raises(GraphError):
            find_gluing(example_22(), [{1, 2}])

    def test_search_reports_completeness(self):
        res = search_gluings(path_graph(4), hub_ok=bool)
        assert res.complete and res.decompositions


class TestText:
    def test_roundtrip(self):
        g = example_21()
        assert parse_graph_text(format_graph_text(g)) == g

    def test_json(self):
        assert parse_graph_text('{"m": 3, "edges": [[1, 2], [2, 3]]}') == path_graph(3)

    def test_self_loop_diagnostic(self):
        with pytest.raises(GraphError, match="line 2"):
            parse_graph_text("m=2\n1 1\n")

    def test_duplicate_rejected(self):
        with pytest.raises(GraphError):
            parse_graph_text("m=3\n1 2\n2 1\n")

    @given(graphs())
    @settings(max_examples=40, deadline=None)
    def test_roundtrip_random(self, g):
        assert parse_graph_text(format_graph_text(g)) == g


@given(graphs())
@settings(max_examples=40, deadline=None)
def test_components_partition_vertices(g):
    comps = components(g)
    assert sorted(v for c in comps for v in c) == list(g.vertices)
    assert is_connected(g) == (len(comps) == 1)
