"""Embedded fixture graphs with their expected classifications.

Each fixture records the graph, a regularity profile, and the verdict, rule and
regularity set expected for it. The figures label some graphs with gaps in the
vertex numbering; those are relabelled to 1..m and ``note`` says how.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .classifier import CYCLE_RULE
from .graph import (
    InteractionGraph,
    complete_graph,
    cycle_graph,
    extract,
    fan,
    star_graph,
)


def _g(m: int, edges) -> InteractionGraph:
    return InteractionGraph.from_edges(m, edges)


def _union_of_cliques(m: int, cliques) -> InteractionGraph:
    edges = set()
    for c in cliques:
        c = sorted(c)
        edges.update((a, b) for k, a in enumerate(c) for b in c[k + 1:])
    return InteractionGraph(m, frozenset(edges))


EX21_CLIQUES = [{6, 7, 8, 9}, {4, 5, 6, 7, 8}, {1, 2, 3, 6, 7, 8, 10}]
EX22_OUTER = [{4, 5, 14}, {4, 5, 6, 7, 8}, {4, 5, 15, 16}, {4, 5, 11, 12, 13}]
FIG13_CLIQUES = [{1, 2, 3, 4, 7}, {2, 3, 4, 6, 8}, {2, 3, 4, 11, 12}, {2, 3, 4, 10, 13}, {2, 3, 4, 5, 9}]


def example_21() -> InteractionGraph:
    return _union_of_cliques(10, EX21_CLIQUES)


def example_22() -> InteractionGraph:
    return _union_of_cliques(16, EX21_CLIQUES + EX22_OUTER)


def example_22_hint() -> list[set]:
    return [set().union(*EX21_CLIQUES), set().union(*EX22_OUTER)]


def example_41() -> InteractionGraph:
    return _g(5, [(1, 2), (1, 3), (1, 5), (2, 3), (3, 4)])


def utility_graph() -> InteractionGraph:
    return _g(6, [(1, 2), (2, 3), (3, 4), (4, 5), (6, 5), (6, 1), (1, 4), (2, 5), (6, 3)])


def k44() -> InteractionGraph:
    return _g(8, [(1, 2), (2, 3), (3, 4), (4, 5), (6, 5), (6, 7), (7, 8), (1, 8),
                  (2, 5), (2, 7), (1, 6), (3, 6), (4, 1), (4, 7), (3, 8), (5, 8)])


def bipartite_fig5() -> InteractionGraph:
    left, right = [1, 2, 3, 4, 5, 10], [6, 7, 8, 9]
    return _g(10, [(a, b) for a in left for b in right])


def k122() -> InteractionGraph:
    return _g(5, [(1, 2), (2, 3), (3, 4), (4, 1), (2, 5), (5, 4), (1, 5), (5, 3)])


def k112() -> InteractionGraph:
    return _g(4, [(1, 2), (2, 3), (3, 4), (4, 1), (2, 4)])


def octahedral() -> InteractionGraph:
    return _g(6, [(1, 2), (2, 3), (3, 4), (4, 1), (2, 4), (1, 6), (6, 5), (5, 1),
                  (2, 6), (3, 6), (3, 5), (4, 5)])


def cocktail_party_fig8() -> InteractionGraph:
    """Twelve vertices; 2k-1 and 2k are the only non-adjacent pairs."""
    s = _g(12, [(2 * k - 1, 2 * k) for k in range(1, 7)])
    return extract(complete_graph(12), s)


def c20_extraction() -> InteractionGraph:
    blocks = [{1, 14, 15, 16, 17, 18, 19, 20}, set(range(9, 17)), {6, 14, 15, 16}, {4, 14, 15, 16}]
    return extract(complete_graph(20), _union_of_cliques(20, blocks))


def fig13_hub() -> InteractionGraph:
    return _union_of_cliques(13, FIG13_CLIQUES)


def path_fig() -> InteractionGraph:
    """Path 3-7-1-6-5-4 with label 7 renamed to 2 (the figure has no vertex 2)."""
    return _g(6, [(3, 2), (2, 1), (1, 6), (6, 5), (5, 4)])


def tree_fig() -> InteractionGraph:
    return _g(10, [(7, 1), (7, 3), (1, 6), (6, 5), (5, 4), (1, 2), (6, 9), (9, 8), (8, 10)])


def four_cycle() -> InteractionGraph:
    return cycle_graph(4)


@dataclass(frozen=True)
class Fixture:
    name: str
    graph: InteractionGraph
    ac: frozenset
    verdict: str
    rule: str
    required_ac: Optional[frozenset] = None
    dirac: frozenset = frozenset()
    hub: Optional[frozenset] = None
    note: str = ""
    alternatives: tuple = field(default=())


def _f(name, graph, ac, verdict, rule, required=None, **kw) -> Fixture:
    return Fixture(name, graph, frozenset(ac), verdict, rule,
                   None if required is None else frozenset(required), **kw)


def fixtures() -> list[Fixture]:
    """The gallery, in display order."""
    rows = [
        _f("C7-complete", complete_graph(7), {1}, "MongeUnique", "Thm4.1", {1}),
        _f("4-cycle", four_cycle(), {1, 4}, "MongeUnique", "Thm3.1-ii", {1, 4}),
        _f("4-cycle-p2", four_cycle(), {1, 2}, "MongeUnique", "Thm3.1-ii", {1, 2}),
        _f("C7-cycle", cycle_graph(7), set(range(1, 8)), "Negative", CYCLE_RULE),
        _f("C5-cycle", cycle_graph(5), set(range(1, 6)), "Negative", CYCLE_RULE),
        _f("example-2.1", example_21(), {1, 6}, "MongeUnique", "Thm4.1", {1, 6}, hub=frozenset({6, 7, 8})),
        _f("example-2.2", example_22(), {1, 6, 4}, "MongeUnique", "Prop4.2", {1, 6, 4}),
        _f("example-4.1", example_41(), {1, 3}, "MongeUnique", "Prop4.2", {1, 3}),
        _f("K3,3", utility_graph(), {1, 2}, "MongeUnique", "Thm3.1-ii", {1, 2}),
        _f("K4,4", k44(), {1, 2}, "MongeUnique", "Thm3.1-ii", {1, 2}),
        _f("K6,4-fig5", bipartite_fig5(), {1, 6}, "MongeUnique", "Thm3.1-ii", {1, 6}),
        _f("K1,2,2", k122(), {1, 2}, "MongeUnique", "Thm3.1-ii", {1, 2}),
        _f("K1,1,2", k112(), {1, 2}, "MongeUnique", "Cor3.2", {1, 2}),
        _f("K2,2,2", octahedral(), {1, 2}, "MongeUnique", "Cor3.2", {1, 2}),
        _f("cocktail-party-12", cocktail_party_fig8(), {1, 3}, "MongeUnique", "Cor3.2", {1, 3}),
        _f("C20-extraction", c20_extraction(), {1, 2}, "MongeUnique", "Thm3.1-ii", {1, 2}),
        _f("fig13-hub", fig13_hub(), {1, 2}, "MongeUnique", "Thm4.1", {1, 2}, hub=frozenset({2, 3, 4})),
        _f("star-center-7", star_graph(6, center=7), {1, 7}, "MongeUnique", "Thm4.1", {1, 7}),
        _f("star-center-1", star_graph(6, center=1), {1}, "MongeUnique", "Thm4.1", {1}),
        _f("path-fig", path_fig(), {1, 2, 5, 6}, "MongeUnique", "Prop4.3", {1, 2, 5, 6},
           note="figure labels 3-7-1-6-5-4; label 7 renamed to 2"),
        _f("tree-fig", tree_fig(), {1, 5, 6, 7, 8, 9}, "MongeUnique", "Prop4.3", {1, 5, 6, 7, 8, 9}),
        _f("fan-1-1", fan(1, 1), {1}, "MongeUnique", "Thm3.1-i", {1}),
        _f("fan-1-2", fan(1, 2), {1}, "MongeUnique", "Thm3.1-i", {1}),
        _f("fan-1-3", fan(1, 3), {1}, "MongeUnique", "Thm3.1-i", {1}),
        _f("fan-1-4", fan(1, 4), set(range(1, 6)), "Unknown", "Prop6.1"),
        _f("fan-1-6", fan(1, 6), set(range(1, 8)), "Unknown", "Prop6.1"),
        _f("fan-2-4", fan(2, 4), set(range(1, 7)), "Unknown", "Prop6.1"),
        _f("fan-2-5", fan(2, 5), set(range(1, 8)), "Unknown", "Prop6.1"),
    ]
    return rows


@dataclass
class GalleryRow:
    fixture: Fixture
    verdict: str
    rule: Optional[str]  # the expected rule when it fired, else the primary one
    required_ac: frozenset
    match: bool
    via: str  # "primary", "matched" or ""
    primary_rule: Optional[str] = None

    def to_dict(self) -> dict:
        f = self.fixture
        return {
            "name": f.name,
            "m": f.graph.m,
            "ac": sorted(f.ac),
            "expected": {"verdict": f.verdict, "rule": f.rule,
                         "required_ac": None if f.required_ac is None else sorted(f.required_ac)},
            "verdict": self.verdict,
            "rule": self.rule,
            "required_ac": sorted(self.required_ac),
            "primary_rule": self.primary_rule,
            "match": self.match,
            "via": self.via,
            "note": f.note,
        }


def evaluate(f: Fixture) -> GalleryRow:
    """Classify one fixture; the expected rule may be the primary one or any other rule that fired."""
    from .classifier import RegularityProfile, classify
    from .graph import inner_hub

    out = classify(f.graph, RegularityProfile(f.graph.m, f.ac, f.dirac))

    def agrees(rule, req) -> bool:
        return rule == f.rule and (f.required_ac is None or frozenset(req) == f.required_ac)

    via, rule, req = "", out.rule, frozenset(out.required_ac)
    if out.verdict == f.verdict:
        if agrees(out.rule, out.required_ac):
            via = "primary"
        else:
            hit = next((r for r in out.matched_rules if agrees(r.rule, r.required_ac)), None)
            if hit is not None:
                via, rule, req = "matched", hit.rule, frozenset(hit.required_ac)
    ok = bool(via)
    if ok and f.hub is not None:
        ok = inner_hub(f.graph).hub == f.hub
    return GalleryRow(f, out.verdict, rule, req, ok, via, out.rule)


def run_gallery() -> list[GalleryRow]:
    return [evaluate(f) for f in fixtures()]
