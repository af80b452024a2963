"""Decide which Monge-solution result applies to an interaction graph under a regularity profile.

Positive rules return the set of marginals whose absolute continuity they need.
Negative and open cases return a certificate instead. ``classify`` dispatches over
all of them with a fixed precedence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .graph import (
    GraphError,
    InteractionGraph,
    complement,
    components,
    find_gluing,
    gluing_problems,
    hub_of_cliques,
    induced,
    inner_hub,
    is_complete_k_partite,
    is_connected,
    is_cycle,
    maximal_cliques,
    reachable,
    search_gluings,
)

MONGE_UNIQUE = "MongeUnique"
NEGATIVE = "Negative"
UNKNOWN = "Unknown"

POSITIVE_ORDER = ("Thm3.1-i", "Cor3.2", "Thm4.1", "Thm3.1-ii", "Prop4.2", "Prop4.3")
CYCLE_RULE = "Cycle-m≥5-cited"


@dataclass(frozen=True)
class RegularityProfile:
    m: int
    ac: frozenset = frozenset()
    dirac: frozenset = frozenset()

    def __post_init__(self):
        ac, dirac = frozenset(self.ac), frozenset(self.dirac)
        object.__setattr__(self, "ac", ac)
        object.__setattr__(self, "dirac", dirac)
        bad = [i for i in ac | dirac if not (1 <= i <= self.m)]
        if bad:
            raise GraphError(f"profile indices outside 1..{self.m}: {sorted(bad)}")
        if ac & dirac:
            raise GraphError(f"indices declared both absolutely continuous and Dirac: {sorted(ac & dirac)}")

    def with_ac(self, extra) -> "RegularityProfile":
        extra = frozenset(extra)
        return RegularityProfile(self.m, self.ac | extra, self.dirac - extra)

    def to_dict(self) -> dict:
        return {"ac": sorted(self.ac), "dirac": sorted(self.dirac)}


@dataclass(frozen=True)
class RuleMatch:
    rule: str
    witness: dict
    required_ac: frozenset = frozenset()
    verdict: str = MONGE_UNIQUE


@dataclass
class ClassificationOutcome:
    verdict: str
    rule: Optional[str]
    witness: dict
    required_ac: frozenset
    diagnostics: list = field(default_factory=list)
    matched_rules: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "rule": self.rule,
            "required_ac": sorted(self.required_ac),
            "witness": self.witness,
            "diagnostics": self.diagnostics,
            "matched_rules": [{"rule": r.rule, "required_ac": sorted(r.required_ac)} for r in self.matched_rules],
        }


def _sorted_sets(sets) -> list[list[int]]:
    return sorted(sorted(s) for s in sets)


def extracted_structure(g: InteractionGraph) -> tuple[InteractionGraph, frozenset, Optional[frozenset], list]:
    """The subgraph S with g = C_m minus S, its support V(S), hub and maximal cliques.

    Isolated vertices of S are left out of V(S) and of the hub computation.
    """
    s = complement(g)
    support = frozenset(v for v in s.vertices if s.adj[v])
    hr = inner_hub(s, ignore_isolated=True)
    return s, support, hr.hub, list(hr.cliques)


def check_thm31(g: InteractionGraph, profile: RegularityProfile) -> Optional[RuleMatch]:
    if 1 not in profile.ac or not is_connected(g):
        return None
    s, support, hub, cliques = extracted_structure(g)
    if hub is None:
        return None
    base = {"S_edges": [list(e) for e in s.sorted_edges()], "S_vertices": sorted(support),
            "hub": sorted(hub), "S_cliques": [list(c) for c in cliques]}
    if 1 not in support:
        return RuleMatch("Thm3.1-i", {**base, "condition": "i"}, frozenset({1}))
    s_complete = len(cliques) == 1
    if 1 in hub and not s_complete:
        return None
    for p in sorted(g.adj[1]):
        if p in profile.ac and hub <= g.adj[p]:
            return RuleMatch("Thm3.1-ii", {**base, "condition": "ii", "p": p}, frozenset({1, p}))
    return None


def check_cor32(g: InteractionGraph, profile: RegularityProfile) -> Optional[RuleMatch]:
    m = g.m
    if 1 not in profile.ac or not is_connected(g):
        return None
    if any(g.degree(v) not in (m - 1, m - 2) for v in g.vertices):
        return None
    if g.degree(1) == m - 1:
        return RuleMatch("Cor3.2", {"i": None}, frozenset({1}))
    for i in sorted(g.adj[1]):
        if i in profile.ac:
            return RuleMatch("Cor3.2", {"i": i}, frozenset({1, i}))
    return None


def check_thm41(g: InteractionGraph, profile: RegularityProfile) -> Optional[RuleMatch]:
    if 1 not in profile.ac:
        return None
    hr = inner_hub(g)
    if not hr.hub:
        return None
    witness = {"hub": sorted(hr.hub), "cliques": [list(c) for c in hr.cliques]}
    if 1 in hr.hub:
        return RuleMatch("Thm4.1", {**witness, "p": 1}, frozenset({1}))
    for p in sorted(hr.hub):
        if p in profile.ac:
            return RuleMatch("Thm4.1", {**witness, "p": p}, frozenset({1, p}))
    return None


def _gluing_assessment(dec, ac: frozenset) -> Optional[dict]:
    """Pick p's and the part holding vertex 1; None when the regularity or clique conditions fail."""
    parts = dec.parts
    ps = []
    for part in parts:
        hub = part.hub.hub
        if 1 in hub:
            ps.append(1)
            continue
        cands = sorted(hub & ac)
        if not cands:
            return None
        ps.append(cands[0])
    glued = {}
    for a, b, c in dec.meta_edges:
        glued.setdefault(a, set()).add(c)
        glued.setdefault(b, set()).add(c)
    home = None
    for k, part in enumerate(parts):
        if 1 not in part.vertices:
            continue
        if 1 in part.hub.hub:
            home, how = k, "hub"
            break
        free = [c for c in part.hub.cliques if 1 in c and c not in glued.get(k, set())]
        if free and home is None:
            home, how = k, "free-clique"
    if home is None:
        return None
    star = all(home in (a, b) for a, b, _ in dec.meta_edges)
    if star:
        leaves = [k for k in range(len(parts)) if k != home]
        center_hub = parts[home].hub.hub
        star = all(parts[a].vertices & parts[b].vertices == center_hub
                   for i, a in enumerate(leaves) for b in leaves[i + 1:])
    return {"p": ps, "home": home, "home_condition": how, "star": star,
            "required": frozenset({1, *ps})}


def check_gluing(g: InteractionGraph, profile: RegularityProfile, max_parts: Optional[int] = None,
                 hint=None) -> Optional[RuleMatch]:
    """Best gluing-tree decomposition for the profile, preferring fewer required marginals."""
    if 1 not in profile.ac:
        return None
    ac = profile.ac
    if hint is not None:
        if not hasattr(hint, "parts") and all(isinstance(p, (set, frozenset)) for p in hint):
            dec = find_gluing(g, hint)
        else:
            fams = [list(p.hub.cliques) for p in hint.parts] if hasattr(hint, "parts") else hint
            _, dec = gluing_problems(g, fams)
        decs = [dec] if dec is not None else []
    else:
        kw = {} if max_parts is None else {"max_parts": max_parts}
        decs = search_gluings(g, hub_ok=lambda h: bool(h & ac), **kw).decompositions
    best = None
    for dec in decs:
        info = _gluing_assessment(dec, ac)
        if info is None:
            continue
        key = (len(info["required"]), not info["star"], len(dec.parts), sorted(info["required"]),
               [p.hub.cliques.cliques for p in dec.parts])
        if best is None or key < best[0]:
            best = (key, dec, info)
    if best is None:
        return None
    _, dec, info = best
    rule = "Prop4.2" if info["star"] else "Prop4.3"
    witness = {"decomposition": dec.to_dict(), "p": info["p"], "home_part": info["home"],
               "home_condition": info["home_condition"]}
    return RuleMatch(rule, witness, info["required"])


def _fan_certificate(g: InteractionGraph) -> Optional[dict]:
    h = complement(g)
    comps = components(h)
    if len(comps) != 2:
        return None
    for kpart, rest in (comps, comps[::-1]):
        if any(not h.has_edge(a, b) for a in kpart for b in kpart if a < b):
            continue
        sub, order = induced(g, rest)
        n = sub.m
        if n < 4 or len(sub.edges) != n - 1:
            continue
        degs = sorted(sub.degree(v) for v in sub.vertices)
        if degs == [1, 1] + [2] * (n - 2) and is_connected(sub):
            return {"k": len(kpart), "n": n, "independent": sorted(kpart), "path": order}
    return None


def _lemma62_certificate(g: InteractionGraph) -> Optional[dict]:
    h = complement(g)
    for kpart in components(h):
        if any(not h.has_edge(a, b) for a in kpart for b in kpart if a < b):
            continue
        rest = [v for v in g.vertices if v not in kpart]
        if len(rest) < 2:
            continue
        sub, order = induced(g, rest)
        if not is_connected(sub):
            continue
        if any(sub.degree(v) == sub.m - 1 for v in sub.vertices):
            continue
        # a complete multipartite G gives K_k + G inside the extraction class
        if is_complete_k_partite(sub) is not None:
            continue
        return {"k": len(kpart), "independent": sorted(kpart), "G_vertices": order}
    return None


def check_negative(g: InteractionGraph, profile: RegularityProfile) -> Optional[RuleMatch]:
    """Decisive negatives, in order Prop2.1-1, Prop2.1-2, cited cycles."""
    if not is_connected(g):
        comp = reachable(g, 1)
        bad = [v for v in g.vertices if v not in comp and v not in profile.dirac]
        if bad:
            return RuleMatch("Prop2.1-1", {"component_of_1": sorted(comp), "vertex": bad[0]},
                             verdict=NEGATIVE)
    if 1 not in profile.dirac:
        for i in g.vertices:
            if i == 1 or i in g.adj[1] or i in profile.dirac:
                continue
            if all(j in profile.dirac for j in g.vertices if j not in (1, i)):
                return RuleMatch("Prop2.1-2", {"missing_edge": [1, i]}, verdict=NEGATIVE)
    if g.m >= 5 and is_cycle(g):
        return RuleMatch(CYCLE_RULE, {"cycle_length": g.m}, verdict=NEGATIVE)
    return None


def check_open(g: InteractionGraph) -> Optional[RuleMatch]:
    """Certificates that g lies outside every positive class while the Monge question stays open."""
    cert = _fan_certificate(g)
    if cert is not None:
        return RuleMatch("Prop6.1", cert, verdict=UNKNOWN)
    cert = _lemma62_certificate(g)
    if cert is not None:
        return RuleMatch("Lemma6.2", cert, verdict=UNKNOWN)
    return None


def positive_matches(g: InteractionGraph, profile: RegularityProfile, hint=None) -> list[RuleMatch]:
    """All positive rules that apply, sorted by (required count, precedence)."""
    out = []
    for check in (check_thm31, check_cor32, check_thm41):
        r = check(g, profile)
        if r is not None:
            out.append(r)
    bound = min((len(r.required_ac) for r in out), default=None)
    # a gluing with l parts needs at least l marginals, so only cheaper ones can win
    if bound is None or bound > 1:
        r = check_gluing(g, profile, max_parts=None if bound is None else bound - 1, hint=hint)
        if r is not None:
            out.append(r)
    out.sort(key=lambda r: (len(r.required_ac), POSITIVE_ORDER.index(r.rule)))
    return out


def _best_positive(g, profile) -> Optional[RuleMatch]:
    found = positive_matches(g, profile)
    return found[0] if found else None


def _diagnostics(g: InteractionGraph, profile: RegularityProfile) -> list[dict]:
    """Nearest misses: positive rules that one more absolutely continuous marginal would unlock."""
    if 1 in profile.dirac:
        return [{"message": "every positive rule needs mu_1 absolutely continuous, but it is declared Dirac"}]
    free = [j for j in g.vertices if j not in profile.ac and j not in profile.dirac]
    out = []
    if 1 not in profile.ac:
        out.append({"message": "mu_1 is not declared absolutely continuous"})
    for j in free:
        add = {1, j} - profile.ac
        r = _best_positive(g, profile.with_ac(add))
        if r is not None:
            out.append({"add_ac": sorted(add), "rule": r.rule, "required_ac": sorted(r.required_ac),
                        "message": f"{r.rule} would apply if mu_{j} were absolutely continuous"})
    if not any("rule" in d for d in out):
        r = _best_positive(g, profile.with_ac(free))
        if r is not None:
            out.append({"add_ac": sorted(free), "rule": r.rule, "required_ac": sorted(r.required_ac),
                        "message": f"{r.rule} would apply with mu_i absolutely continuous for i in {sorted(r.required_ac)}"})
        else:
            out.append({"message": "no positive rule applies even with every non-Dirac marginal absolutely continuous"})
    return out


def _outcome(r: RuleMatch, matched=(), diagnostics=None) -> ClassificationOutcome:
    return ClassificationOutcome(r.verdict, r.rule, r.witness, r.required_ac, diagnostics or [], list(matched))


def classify(g: InteractionGraph, profile: RegularityProfile, hint=None) -> ClassificationOutcome:
    """Verdict and rule for ``g`` under ``profile``; ``hint`` lists vertex sets for the gluing search."""
    if profile.m != g.m:
        raise GraphError(f"profile is for m={profile.m} but the graph has m={g.m}")
    neg = check_negative(g, profile)
    if neg is not None:
        return _outcome(neg)
    if not is_connected(g):
        return _classify_component(g, profile)
    found = positive_matches(g, profile, hint)
    if found:
        return _outcome(found[0], found)
    diagnostics = _diagnostics(g, profile)
    cert = check_open(g)
    if cert is not None:
        return _outcome(cert, diagnostics=diagnostics)
    return ClassificationOutcome(UNKNOWN, None, {}, frozenset(), diagnostics, [])


def _classify_component(g: InteractionGraph, profile: RegularityProfile) -> ClassificationOutcome:
    """Every vertex outside the component of 1 is Dirac: solve the problem on that component."""
    sub, order = induced(g, reachable(g, 1))
    back = {k + 1: v for k, v in enumerate(order)}
    fwd = {v: k for k, v in back.items()}
    sp = RegularityProfile(sub.m, {fwd[i] for i in profile.ac if i in fwd},
                           {fwd[i] for i in profile.dirac if i in fwd})
    inner = classify(sub, sp)
    witness = {"reduced_to_component": order, "inner": inner.to_dict()}
    return ClassificationOutcome(
        inner.verdict, inner.rule, witness, frozenset(back[i] for i in inner.required_ac),
        [{**d, **({"add_ac": [back[i] for i in d["add_ac"]]} if "add_ac" in d else {}),
          **({"required_ac": [back[i] for i in d["required_ac"]]} if "required_ac" in d else {})}
         for d in inner.diagnostics],
        [RuleMatch(r.rule, r.witness, frozenset(back[i] for i in r.required_ac), r.verdict)
         for r in inner.matched_rules],
    )


def verify_outcome(g: InteractionGraph, profile: RegularityProfile, out: ClassificationOutcome) -> bool:
    """Re-check the hypotheses of the rule named in ``out`` from its witness alone."""
    w = out.witness
    if "reduced_to_component" in w:
        order = w["reduced_to_component"]
        if sorted(reachable(g, 1)) != order:
            return False
        if any(v not in profile.dirac for v in g.vertices if v not in order):
            return False
        sub, _ = induced(g, order)
        fwd = {v: k + 1 for k, v in enumerate(order)}
        sp = RegularityProfile(sub.m, {fwd[i] for i in profile.ac if i in fwd},
                               {fwd[i] for i in profile.dirac if i in fwd})
        inner = w["inner"]
        io = ClassificationOutcome(inner["verdict"], inner["rule"], inner["witness"],
                                   frozenset(inner["required_ac"]))
        return verify_outcome(sub, sp, io)
    rule, req = out.rule, out.required_ac
    if out.verdict == MONGE_UNIQUE:
        if 1 not in req or not req <= profile.ac:
            return False
    if rule in ("Thm3.1-i", "Thm3.1-ii"):
        if not is_connected(g):
            return False
        s = complement(g)
        if sorted(map(list, s.sorted_edges())) != w["S_edges"]:
            return False
        support = {v for v in s.vertices if s.adj[v]}
        hub = hub_of_cliques(map(frozenset, w["S_cliques"])) if w["S_cliques"] else frozenset()
        if hub is None or sorted(hub) != w["hub"]:
            return False
        if _sorted_sets(w["S_cliques"]) != _sorted_sets(inner_hub(s, ignore_isolated=True).cliques):
            return False
        if rule == "Thm3.1-i":
            return 1 not in support and req == {1}
        p = w["p"]
        complete_s = len(w["S_cliques"]) == 1
        return (p in g.adj[1] and p in profile.ac and set(hub) <= g.adj[p]
                and (complete_s or 1 not in hub) and req == {1, p})
    if rule == "Cor3.2":
        if not is_connected(g) or any(g.degree(v) < g.m - 2 for v in g.vertices):
            return False
        i = w["i"]
        if i is None:
            return g.degree(1) == g.m - 1 and req == {1}
        return i in g.adj[1] and i in profile.ac and req == {1, i}
    if rule == "Thm4.1":
        cl = [frozenset(c) for c in w["cliques"]]
        if _sorted_sets(cl) != _sorted_sets(maximal_cliques(g)):
            return False
        hub = hub_of_cliques(cl)
        p = w["p"]
        return bool(hub) and p in hub and p in profile.ac and req == {1, p}
    if rule in ("Prop4.2", "Prop4.3"):
        fams = [[tuple(c) for c in part["cliques"]] for part in w["decomposition"]["parts"]]
        _, dec = gluing_problems(g, fams)
        if dec is None:
            return False
        info = _gluing_assessment(dec, profile.ac)
        return (info is not None and info["p"] == w["p"] and info["required"] == req
                and (rule == "Prop4.3" or info["star"]))
    if rule == "Prop2.1-1":
        v = w["vertex"]
        return v not in reachable(g, 1) and v not in profile.dirac
    if rule == "Prop2.1-2":
        i = w["missing_edge"][1]
        return (not g.has_edge(1, i) and 1 not in profile.dirac and i not in profile.dirac
                and all(j in profile.dirac for j in g.vertices if j not in (1, i)))
    if rule == CYCLE_RULE:
        return g.m >= 5 and is_cycle(g)
    if rule == "Prop6.1":
        return _fan_certificate(g) == w
    if rule == "Lemma6.2":
        return _lemma62_certificate(g) == w
    return rule is None and out.verdict == UNKNOWN
