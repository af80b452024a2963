"""Interaction graphs of bilinear surpluses and the graph constructions used by the classifier.

Vertices are labelled ``1..m``. An edge ``{i, j}`` means the surplus contains the
term ``x_i . x_j``. Everything here is a pure function of immutable values.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Optional

MAX_CLIQUE_VERTICES = 32
MAX_GLUING_PARTS = 10
MAX_GLUING_CLIQUES = 20
GLUING_NODE_CAP = 200_000
_SUBFAMILY_CAP = 4096

Clique = tuple[int, ...]


class GraphError(ValueError):
    """Malformed graph input."""


class ResourceCapError(RuntimeError):
    """A configured size cap was exceeded."""


@dataclass(frozen=True)
class InteractionGraph:
    m: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not isinstance(self.m, int) or self.m < 1:
            raise GraphError(f"vertex count must be a positive integer, got {self.m!r}")
        norm = set()
        for e in self.edges:
            i, j = (int(x) for x in e)
            if i == j:
                raise GraphError(f"self-loop at vertex {i}")
            if not (1 <= i <= self.m and 1 <= j <= self.m):
                raise GraphError(f"edge {{{i},{j}}} has an endpoint outside 1..{self.m}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_edges(cls, m: int, edges: Iterable, *, strict: bool = True) -> "InteractionGraph":
        """Build a graph; with ``strict`` a repeated edge is an error."""
        seen = set()
        for e in edges:
            i, j = e
            key = (min(i, j), max(i, j))
            if strict and key in seen:
                raise GraphError(f"duplicate edge {{{key[0]},{key[1]}}}")
            seen.add(key)
        return cls(m, frozenset(seen))

    @cached_property
    def adj(self) -> dict[int, frozenset]:
        nb: dict[int, set] = {v: set() for v in range(1, self.m + 1)}
        for i, j in self.edges:
            nb[i].add(j)
            nb[j].add(i)
        return {v: frozenset(s) for v, s in nb.items()}

    @property
    def vertices(self) -> range:
        return range(1, self.m + 1)

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def relabel(self, perm: dict[int, int]) -> "InteractionGraph":
        """Apply a vertex bijection given as ``old -> new``."""
        return InteractionGraph(self.m, frozenset((perm[i], perm[j]) for i, j in self.edges))

    def __repr__(self) -> str:
        return f"InteractionGraph(m={self.m}, edges={self.sorted_edges()})"


# Named families


def complete_graph(m: int) -> InteractionGraph:
    return InteractionGraph(m, frozenset(itertools.combinations(range(1, m + 1), 2)))


def empty_graph(m: int) -> InteractionGraph:
    return InteractionGraph(m, frozenset())


def path_graph(m: int) -> InteractionGraph:
    return InteractionGraph(m, frozenset((i, i + 1) for i in range(1, m)))


def cycle_graph(m: int) -> InteractionGraph:
    if m < 3:
        raise GraphError("a cycle needs at least 3 vertices")
    return InteractionGraph(m, frozenset([(i, i + 1) for i in range(1, m)] + [(1, m)]))


def star_graph(leaves: int, center: int = 1) -> InteractionGraph:
    m = leaves + 1
    return InteractionGraph(m, frozenset((center, v) for v in range(1, m + 1) if v != center))


def complete_multipartite(sizes: Iterable[int]) -> InteractionGraph:
    classes, start = [], 1
    for s in sizes:
        classes.append(range(start, start + s))
        start += s
    edges = set()
    for a, b in itertools.combinations(classes, 2):
        edges.update((i, j) for i in a for j in b)
    return InteractionGraph(start - 1, frozenset(edges))


def cocktail_party(m: int) -> InteractionGraph:
    """K_{2,...,2}; vertex ``i`` is paired with ``i + m/2``."""
    if m % 2 or m < 2:
        raise GraphError("cocktail party graph needs an even vertex count")
    h = m // 2
    g = complete_graph(m)
    return extract(g, InteractionGraph(m, frozenset((i, i + h) for i in range(1, h + 1))))


# Basic operations


def _check_vertex(g: InteractionGraph, v: int) -> None:
    if not (1 <= v <= g.m):
        raise GraphError(f"vertex {v} outside 1..{g.m}")


def neighborhood(g: InteractionGraph, v: int, closed: bool = False) -> frozenset:
    """Open neighborhood N(v), or N(v) with v added when ``closed``."""
    _check_vertex(g, v)
    return g.adj[v] | {v} if closed else g.adj[v]


def components(g: InteractionGraph) -> list[frozenset]:
    """Connected components, ordered by smallest vertex."""
    seen: set = set()
    out = []
    for s in g.vertices:
        if s in seen:
            continue
        comp = {s}
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for w in g.adj[v]:
                if w not in comp:
                    comp.add(w)
                    queue.append(w)
        seen |= comp
        out.append(frozenset(comp))
    return out


def reachable(g: InteractionGraph, v: int) -> frozenset:
    _check_vertex(g, v)
    return next(c for c in components(g) if v in c)


def is_connected(g: InteractionGraph) -> bool:
    return len(reachable(g, 1)) == g.m


def complement(g: InteractionGraph) -> InteractionGraph:
    return InteractionGraph(
        g.m, frozenset(e for e in itertools.combinations(g.vertices, 2) if e not in g.edges)
    )


def extract(g: InteractionGraph, s: InteractionGraph) -> InteractionGraph:
    """Remove the edges of ``s`` from ``g``; ``s`` must be a subgraph on the same vertices."""
    if s.m != g.m:
        raise GraphError(f"vertex counts differ: {g.m} vs {s.m}")
    extra = s.edges - g.edges
    if extra:
        raise GraphError(f"edges not present in the host graph: {sorted(extra)}")
    return InteractionGraph(g.m, g.edges - s.edges)


def join(g1: InteractionGraph, g2: InteractionGraph) -> InteractionGraph:
    """Graph join; ``g2`` is shifted to vertices ``g1.m + 1 ..``."""
    off = g1.m
    edges = set(g1.edges)
    edges.update((i + off, j + off) for i, j in g2.edges)
    edges.update((i, j + off) for i in g1.vertices for j in g2.vertices)
    return InteractionGraph(g1.m + g2.m, frozenset(edges))


def induced(g: InteractionGraph, keep: Iterable[int]) -> tuple[InteractionGraph, list[int]]:
    """Induced subgraph relabelled to 1..k, with the list mapping new labels to old ones."""
    order = sorted(set(keep))
    pos = {v: k + 1 for k, v in enumerate(order)}
    edges = frozenset((pos[i], pos[j]) for i, j in g.edges if i in pos and j in pos)
    return InteractionGraph(len(order), edges), order


def fan(k: int, n: int) -> InteractionGraph:
    """F_{k,n}: vertices 1..k are independent, k+1..k+n form a path, all cross edges present."""
    if k < 1 or n < 1:
        raise GraphError("fan parameters must be positive")
    return join(empty_graph(k), path_graph(n))


def is_cycle(g: InteractionGraph) -> bool:
    return g.m >= 3 and is_connected(g) and all(g.degree(v) == 2 for v in g.vertices)


# Cliques and hubs


@dataclass(frozen=True)
class CliqueSet:
    cliques: tuple[Clique, ...]

    def __iter__(self) -> Iterator[Clique]:
        return iter(self.cliques)

    def __len__(self) -> int:
        return len(self.cliques)

    def as_sets(self) -> list[frozenset]:
        return [frozenset(c) for c in self.cliques]


def maximal_cliques(g: InteractionGraph, cap: int = MAX_CLIQUE_VERTICES) -> CliqueSet:
    """All maximal cliques (Bron-Kerbosch with pivoting), sorted lexicographically."""
    if g.m > cap:
        raise ResourceCapError(f"maximal clique enumeration is capped at m <= {cap} (got m={g.m})")
    adj = {v: g.adj[v] for v in g.vertices}
    found: list[Clique] = []

    def expand(r: frozenset, p: set, x: set) -> None:
        if not p and not x:
            found.append(tuple(sorted(r)))
            return
        pivot = max(p | x, key=lambda u: (len(adj[u] & p), -u))
        for v in sorted(p - adj[pivot]):
            expand(r | {v}, p & adj[v], x & adj[v])
            p.remove(v)
            x.add(v)

    expand(frozenset(), set(g.vertices), set())
    return CliqueSet(tuple(sorted(found)))


@dataclass(frozen=True)
class HubResult:
    hub: Optional[frozenset]
    cliques: CliqueSet

    @property
    def present(self) -> bool:
        return self.hub is not None


def hub_of_cliques(cliques: Iterable[Iterable[int]]) -> Optional[frozenset]:
    """Common pairwise intersection of a clique family, or None when intersections differ.

    A single clique is its own hub.
    """
    sets = [frozenset(c) for c in cliques]
    if not sets:
        return None
    if len(sets) == 1:
        return sets[0]
    common = sets[0] & sets[1]
    for a, b in itertools.combinations(sets, 2):
        if a & b != common:
            return None
    return common


def inner_hub(g: InteractionGraph, ignore_isolated: bool = False) -> HubResult:
    """Inner hub of ``g``.

    With ``ignore_isolated`` the isolated vertices are dropped first, so an edgeless
    graph has no cliques and its hub is reported as the empty set.
    """
    if ignore_isolated:
        keep = [v for v in g.vertices if g.adj[v]]
        if not keep:
            return HubResult(frozenset(), CliqueSet(()))
        sub, order = induced(g, keep)
        cs = maximal_cliques(sub)
        cs = CliqueSet(tuple(sorted(tuple(order[i - 1] for i in c) for c in cs)))
    else:
        cs = maximal_cliques(g)
    return HubResult(hub_of_cliques(cs), cs)


def is_complete_k_partite(g: InteractionGraph) -> Optional[list[frozenset]]:
    """Partition classes when the complement is a disjoint union of cliques, else None."""
    h = complement(g)
    classes = components(h)
    for c in classes:
        if any(not h.has_edge(a, b) for a, b in itertools.combinations(sorted(c), 2)):
            return None
    return classes


# Gluing decompositions


@dataclass(frozen=True)
class GluingPart:
    vertices: frozenset
    hub: HubResult


@dataclass(frozen=True)
class GluingDecomposition:
    parts: tuple[GluingPart, ...]
    meta_edges: tuple[tuple[int, int, Clique], ...]

    def to_dict(self) -> dict:
        return {
            "parts": [
                {
                    "vertices": sorted(p.vertices),
                    "hub": sorted(p.hub.hub) if p.hub.present else None,
                    "cliques": [list(c) for c in p.hub.cliques],
                }
                for p in self.parts
            ],
            "meta_edges": [[a, b, list(c)] for a, b, c in self.meta_edges],
        }


def _is_tree(nodes: int, edges: list[tuple[int, int]]) -> bool:
    if len(edges) != nodes - 1:
        return False
    parent = list(range(nodes))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return True


def gluing_problems(g: InteractionGraph, families: list[list[Clique]]) -> tuple[list[str], Optional[GluingDecomposition]]:
    """Check a grouping of g's maximal cliques into parts against the gluing-tree conditions.

    Returns the list of failed conditions and, when there are none, the decomposition.
    """
    problems = []
    all_cliques = set(maximal_cliques(g))
    fams = [tuple(sorted(set(f))) for f in families]
    if not fams:
        return ["no parts"], None
    hubs = []
    for a, fam in enumerate(fams):
        if not fam:
            problems.append(f"part {a} is empty")
            hubs.append(None)
            continue
        stray = [c for c in fam if c not in all_cliques]
        if stray:
            problems.append(f"part {a} lists cliques that are not maximal in the graph: {stray}")
        hubs.append(hub_of_cliques(fam))
        if hubs[-1] is None:
            problems.append(f"part {a} has no inner hub")
    if problems:
        return problems, None
    use = {c: [a for a, fam in enumerate(fams) if c in fam] for c in all_cliques}
    for c, owners in sorted(use.items()):
        if not owners:
            problems.append(f"clique {c} is not covered")
        elif len(owners) > 2:
            problems.append(f"clique {c} lies in more than two parts")
    verts = [frozenset().union(*map(frozenset, fam)) for fam in fams]
    for a, b in itertools.combinations(range(len(fams)), 2):
        if hubs[a] & hubs[b]:
            problems.append(f"hubs of parts {a} and {b} intersect")
    meta: list[tuple[int, int, Clique]] = []
    for a, b in itertools.combinations(range(len(fams)), 2):
        inter = verts[a] & verts[b]
        shared = sorted(set(fams[a]) & set(fams[b]))
        if len(shared) > 1:
            problems.append(f"parts {a} and {b} share more than one clique")
            continue
        if shared and frozenset(shared[0]) == inter:
            meta.append((a, b, shared[0]))
            continue
        if not inter:
            continue
        if any(inter == hubs[c] for c in range(len(fams)) if c not in (a, b)):
            continue
        problems.append(f"parts {a} and {b} meet in {sorted(inter)}, which is neither a shared clique nor another hub")
    if not _is_tree(len(fams), [(a, b) for a, b, _ in meta]):
        problems.append("meta-graph is not a tree")
    if problems:
        return problems, None
    parts = tuple(GluingPart(verts[a], HubResult(hubs[a], CliqueSet(fams[a]))) for a in range(len(fams)))
    return [], GluingDecomposition(parts, tuple(meta))


def _gluing_candidates(g: InteractionGraph, cliques: list[Clique], hub_ok) -> list[tuple[frozenset, tuple[int, ...]]]:
    """Candidate parts as (hub, clique indices): single cliques and hub-compatible families."""
    sets = [frozenset(c) for c in cliques]
    out: dict[tuple[int, ...], frozenset] = {}
    for k, s in enumerate(sets):
        out[(k,)] = s
    hubs = {a & b for a, b in itertools.combinations(sets, 2)} - {frozenset()}
    families: dict[tuple[int, ...], frozenset] = {}
    for hub in sorted(hubs, key=sorted):
        members = [k for k, s in enumerate(sets) if hub <= s]
        compat = {k: {j for j in members if j != k and sets[j] & sets[k] == hub} for k in members}
        subs = []

        def grow(chosen: list[int], pool: list[int]) -> None:
            if len(subs) > _SUBFAMILY_CAP:
                return
            if len(chosen) >= 2:
                subs.append(tuple(chosen))
            for t, k in enumerate(pool):
                grow(chosen + [k], [j for j in pool[t + 1:] if j in compat[k]])

        grow([], members)
        if len(subs) > _SUBFAMILY_CAP:
            # keep only the maximal compatible families
            subs = []
            cg = InteractionGraph(len(members), frozenset(
                (a + 1, b + 1) for a, b in itertools.combinations(range(len(members)), 2)
                if members[b] in compat[members[a]]))
            subs = [tuple(members[i - 1] for i in c) for c in maximal_cliques(cg, cap=10**6) if len(c) >= 2]
        for sub in subs:
            families[sub] = hub
    out.update(families)
    cands = [(h, key) for key, h in out.items()]
    if hub_ok is not None:
        cands = [(h, key) for h, key in cands if hub_ok(h)]
    cands.sort(key=lambda hk: (len(hk[1]) == 1, -len(hk[1]), hk[1]))
    return cands


@dataclass
class GluingSearch:
    """Result of an automatic gluing search; ``complete`` is False when a cap cut it short."""

    decompositions: list[GluingDecomposition]
    complete: bool
    nodes: int


def search_gluings(
    g: InteractionGraph,
    hub_ok=None,
    max_parts: int = MAX_GLUING_PARTS,
    node_cap: int = GLUING_NODE_CAP,
    limit: Optional[int] = None,
) -> GluingSearch:
    """Enumerate gluing-tree decompositions of ``g`` into parts built from its maximal cliques.

    Parts are single maximal cliques or families of maximal cliques sharing a common
    pairwise intersection. ``hub_ok`` filters admissible hubs. The search first covers
    every clique, then tries adding connector parts whose cliques are already covered.
    """
    cliques = list(maximal_cliques(g))
    if len(cliques) > MAX_GLUING_CLIQUES or max_parts < 1:
        return GluingSearch([], False, 0)
    cands = _gluing_candidates(g, cliques, hub_ok)
    containing = [[t for t, (_, key) in enumerate(cands) if k in key] for k in range(len(cliques))]
    found: list[GluingDecomposition] = []
    seen: set = set()
    cover = [0] * len(cliques)
    state = {"nodes": 0, "stopped": False}
    chosen: list[int] = []

    def fits(t: int, used_hub: frozenset) -> bool:
        hub, key = cands[t]
        return t not in chosen and not (hub & used_hub) and all(cover[k] < 2 for k in key)

    def push(t: int) -> None:
        chosen.append(t)
        for k in cands[t][1]:
            cover[k] += 1

    def pop() -> None:
        t = chosen.pop()
        for k in cands[t][1]:
            cover[k] -= 1

    def visit(used_hub: frozenset, last_extra: int) -> None:
        state["nodes"] += 1
        if state["nodes"] > node_cap or (limit is not None and len(found) >= limit):
            state["stopped"] = True
            return
        open_ = next((k for k in range(len(cliques)) if cover[k] == 0), None)
        if open_ is not None:
            if len(chosen) >= max_parts:
                return
            for t in containing[open_]:
                if fits(t, used_hub):
                    push(t)
                    visit(used_hub | cands[t][0], last_extra)
                    pop()
                    if state["stopped"]:
                        return
            return
        key = frozenset(chosen)
        if key not in seen:
            seen.add(key)
            fams = [[cliques[k] for k in cands[t][1]] for t in chosen]
            problems, dec = gluing_problems(g, fams)
            if dec is not None:
                found.append(dec)
        if len(chosen) >= max_parts:
            return
        for t in range(last_extra + 1, len(cands)):
            if fits(t, used_hub):
                push(t)
                visit(used_hub | cands[t][0], t)
                pop()
                if state["stopped"]:
                    return

    visit(frozenset(), -1)
    return GluingSearch(found, not state["stopped"], state["nodes"])


def find_gluing(g: InteractionGraph, hint: Optional[list] = None) -> Optional[GluingDecomposition]:
    """Validate a hinted decomposition, or search for one whose meta-graph is a tree.

    A hint is a list of parts, each given as a vertex set; the part's cliques are the
    maximal cliques of ``g`` inside it. Hubs must be non-empty in the automatic search.
    """
    if hint is not None:
        cliques = list(maximal_cliques(g))
        fams = []
        covered = set()
        for part in hint:
            vs = frozenset(part.vertices if isinstance(part, GluingPart) else part)
            if not vs or any(not (1 <= v <= g.m) for v in vs):
                raise GraphError(f"hint part {sorted(vs)} has vertices outside 1..{g.m}")
            fam = [c for c in cliques if set(c) <= vs]
            if frozenset().union(*map(frozenset, fam)) != vs:
                raise GraphError(f"hint part {sorted(vs)} is not a union of maximal cliques")
            covered |= vs
            fams.append(fam)
        if covered != set(g.vertices):
            raise GraphError("hint parts do not cover every vertex")
        _, dec = gluing_problems(g, fams)
        return dec
    res = search_gluings(g, hub_ok=lambda h: bool(h), limit=None)
    if not res.decompositions:
        return None
    return min(res.decompositions, key=_decomposition_key)


def _decomposition_key(dec: GluingDecomposition):
    return (len(dec.parts), [p.hub.cliques.cliques for p in dec.parts])


def parse_graph_text(text: str) -> InteractionGraph:
    """Parse ``m=<int>`` followed by ``i j`` edge lines, or a JSON object ``{m, edges}``."""
    import json

    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise GraphError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        if not isinstance(obj, dict) or "m" not in obj or "edges" not in obj:
            raise GraphError("structured graph needs fields 'm' and 'edges'")
        edges = []
        for e in obj["edges"]:
            if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) for x in e)):
                raise GraphError(f"bad edge entry {e!r}")
            edges.append(tuple(e))
        return InteractionGraph.from_edges(obj["m"], edges)
    m = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m is None:
            if not line.startswith("m="):
                raise GraphError(f"line {lineno}, column 1: expected 'm=<int>' header")
            try:
                m = int(line[2:])
            except ValueError:
                raise GraphError(f"line {lineno}, column 3: vertex count is not an integer") from None
            continue
        fields = line.split()
        if len(fields) != 2:
            raise GraphError(f"line {lineno}, column 1: expected two vertex indices")
        try:
            i, j = int(fields[0]), int(fields[1])
        except ValueError:
            col = 1 if not fields[0].lstrip("-").isdigit() else raw.find(fields[1]) + 1
            raise GraphError(f"line {lineno}, column {col}: vertex index is not an integer") from None
        if i == j:
            raise GraphError(f"line {lineno}, column 1: self-loop {i} {j}")
        edges.append((i, j))
    if m is None:
        raise GraphError("line 1, column 1: empty graph file")
    try:
        return InteractionGraph.from_edges(m, edges)
    except GraphError as exc:
        raise GraphError(f"{exc}") from None


def format_graph_text(g: InteractionGraph) -> str:
    lines = [f"m={g.m}"] + [f"{i} {j}" for i, j in g.sorted_edges()]
    return "\n".join(lines) + "\n"
