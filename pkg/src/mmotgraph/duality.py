"""Dual potentials, b-conjugation, splitting sets and per-instance checks of the swap lemma.

Atom indices are 0-based; graph vertices are 1-based, so vertex ``s`` is coordinate
``s - 1`` of a tuple.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .graph import InteractionGraph, ResourceCapError, neighborhood
from .mmot import CostModel, DualPotentials, cost, cost_tensor, var_cap
from .simplex import outer_sum

SPLIT_TOL = 1e-7
CONJ_TOL = 1e-10
CONJ_SWEEPS = 100


class LemmaInputError(ValueError):
    """The hypothesis sets do not satisfy the neighborhood conditions, so the check does not apply."""


def _exact(pots: DualPotentials) -> bool:
    return all(isinstance(v, (Fraction, int)) for vals in pots.values for v in vals)


def _surplus(cm: CostModel, exact: bool) -> np.ndarray:
    if cm.size > var_cap():
        raise ResourceCapError(f"product grid has {cm.size} tuples, above the variable cap {var_cap()}")
    return cost_tensor(cm, exact=exact)


def _potential_sum(pots: DualPotentials, exact: bool) -> np.ndarray:
    if not exact:
        return outer_sum(pots.values)
    shape = [len(u) for u in pots.values]
    total = np.full(shape, Fraction(0), dtype=object)
    for i, u in enumerate(pots.values):
        s = [1] * len(shape)
        s[i] = shape[i]
        total = total + np.array(u, dtype=object).reshape(s)
    return total


def slack_tensor(pots: DualPotentials, cm: CostModel) -> np.ndarray:
    """``sum_i u_i(x_i) - b`` over the whole product grid."""
    exact = _exact(pots) and all(mu.exact for mu in cm.marginals)
    return _potential_sum(pots, exact) - _surplus(cm, exact)


def dual_violation(pots: DualPotentials, cm: CostModel):
    """Largest amount by which the dual constraint fails (<= 0 means feasible)."""
    return -np.min(slack_tensor(pots, cm))


def duality_gap(pots: DualPotentials, cm: CostModel, primal_value):
    return pots.objective(cm) - primal_value


def b_conjugate(pots: DualPotentials, cm: CostModel, i: int) -> DualPotentials:
    """Replace ``u_i`` (1-based ``i``) by the largest-lower conjugate ``max(b - sum_{j != i} u_j)``."""
    exact = _exact(pots) and all(mu.exact for mu in cm.marginals)
    others = list(pots.values)
    zero = Fraction(0) if exact else 0.0
    others[i - 1] = tuple(zero for _ in others[i - 1])
    rest = _potential_sum(DualPotentials(tuple(others)), exact)
    diff = _surplus(cm, exact) - rest
    axes = tuple(k for k in range(cm.m) if k != i - 1)
    best = diff.max(axis=axes) if axes else diff
    vals = list(pots.values)
    vals[i - 1] = tuple(best.tolist()) if not exact else tuple(Fraction(v) for v in best)
    return DualPotentials(tuple(vals))


def conjugate_sweeps(pots: DualPotentials, cm: CostModel, tol: float = CONJ_TOL,
                     max_sweeps: int = CONJ_SWEEPS) -> tuple[DualPotentials, int]:
    """Cycle the conjugation over i = 1..m until the dual objective stops decreasing."""
    obj = pots.objective(cm)
    for sweep in range(1, max_sweeps + 1):
        for i in range(1, cm.m + 1):
            pots = b_conjugate(pots, cm, i)
        new = pots.objective(cm)
        if obj - new < tol:
            return pots, sweep
        obj = new
    return pots, max_sweeps


def is_conjugate(pots: DualPotentials, cm: CostModel, tol: float = 1e-9) -> bool:
    for i in range(1, cm.m + 1):
        again = b_conjugate(pots, cm, i)
        if any(abs(a - b) > tol for a, b in zip(again.values[i - 1], pots.values[i - 1])):
            return False
    return True


@dataclass(frozen=True)
class SplittingSet:
    tuples: tuple
    tol: object = 0
    potentials: Optional[DualPotentials] = None

    def __contains__(self, t) -> bool:
        return tuple(t) in self._members

    @property
    def _members(self) -> frozenset:
        cache = self.__dict__.get("_cache")
        if cache is None:
            cache = frozenset(self.tuples)
            object.__setattr__(self, "_cache", cache)
        return cache

    def __len__(self) -> int:
        return len(self.tuples)

    def slice(self, x1_index: int) -> list[tuple]:
        return [t for t in self.tuples if t[0] == x1_index]


def extract_splitting_set(pots: DualPotentials, cm: CostModel, tol=None) -> SplittingSet:
    """All tuples where the dual constraint is tight, in row-major order."""
    exact = _exact(pots) and all(mu.exact for mu in cm.marginals)
    if tol is None:
        tol = 0 if exact else SPLIT_TOL
    slack = slack_tensor(pots, cm)
    if exact and tol == 0:
        mask = np.vectorize(lambda v: v == 0, otypes=[bool])(slack)
    else:
        mask = np.abs(slack.astype(float)) <= float(tol)
    tuples = tuple(tuple(int(k) for k in idx) for idx in zip(*np.nonzero(mask)))
    return SplittingSet(tuples, tol, pots)


def _atom(cm: CostModel, s: int, t: Sequence[int]):
    """Atom of vertex ``s`` (1-based) in tuple ``t``."""
    return cm.marginals[s - 1].atoms[t[s - 1]]


def _vsum(cm: CostModel, verts, t) -> tuple:
    d = cm.marginals[0].d
    acc = [0] * d
    for s in verts:
        for k, x in enumerate(_atom(cm, s, t)):
            acc[k] += x
    return tuple(acc)


def _close(a, b, tol) -> bool:
    return all(abs(x - y) <= tol for x, y in zip(a, b))


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


@dataclass
class LemmaReport:
    holds: bool
    applicable: bool = True
    part: str = ""
    violation: Optional[dict] = None
    notes: list = field(default_factory=list)


def _tight(cm: CostModel, w: SplittingSet, t) -> bool:
    """Tightness recomputed from the potentials when available, else set membership."""
    if w.potentials is None:
        return tuple(t) in w
    gap = w.potentials.total(t) - cost(cm, t)
    return abs(gap) <= (w.tol or 0)


def lemma21_check(w: SplittingSet, cm: CostModel, part: str, witness: dict) -> LemmaReport:
    """Check one part of the swap lemma on a pair of splitting-set tuples sharing x_1.

    ``witness`` holds ``pair`` (two index tuples) and the part's data: ``t`` for parts
    2 and 3, ``V1``/``V2`` for part 1, ``p`` and ``t`` for 4a, ``p``/``F1``/``F2``/``F3``
    for 4b. Graph hypotheses that fail raise :class:`LemmaInputError`.
    """
    g = cm.graph
    x1, x2 = (tuple(t) for t in witness["pair"])
    for t in (x1, x2):
        if t not in w:
            raise LemmaInputError(f"tuple {t} is not in the splitting set")
    if x1[0] != x2[0]:
        raise LemmaInputError("the two tuples must share the first coordinate")
    tol = w.tol or 0
    if part == "1":
        v1, v2 = frozenset(witness["V1"]), frozenset(witness["V2"])
        if any(g.adj[s] != v2 for s in v1):
            raise LemmaInputError("every vertex of V1 must have neighborhood exactly V2")
        if not _close(_vsum(cm, v2, x1), _vsum(cm, v2, x2), tol):
            return LemmaReport(True, applicable=False, part=part)
        y = tuple(x2[s - 1] if (s in v1) else x1[s - 1] for s in g.vertices)
        ok = _tight(cm, w, y)
        return LemmaReport(ok, part=part, violation=None if ok else {"pair": [x1, x2], "swapped": y})
    if part == "2":
        ts = [witness["t"]] if "t" in witness else list(g.vertices)
        for t in ts:
            val = _dot(_sub(_atom(cm, t, x2), _atom(cm, t, x1)),
                       _sub(_vsum(cm, g.adj[t], x1), _vsum(cm, g.adj[t], x2)))
            if val > tol:
                return LemmaReport(False, part=part, violation={"pair": [x1, x2], "t": t, "value": val})
        return LemmaReport(True, part=part)
    if part == "3":
        ts = [witness["t"]] if "t" in witness else list(g.vertices)
        applicable = False
        for t in ts:
            closed = neighborhood(g, t, closed=True)
            if not _close(_vsum(cm, closed, x1), _vsum(cm, closed, x2), tol):
                continue
            applicable = True
            if x1[t - 1] != x2[t - 1]:
                return LemmaReport(False, part=part, violation={"pair": [x1, x2], "t": t})
        return LemmaReport(True, applicable=applicable, part=part)
    if part == "4a":
        p, t = witness["p"], witness["t"]
        if t == p or t == 1:
            raise LemmaInputError("t must differ from p and from 1")
        if neighborhood(g, p, closed=True) != neighborhood(g, t, closed=True):
            raise LemmaInputError("closed neighborhoods of p and t differ")
        if not _proxy(cm, p, x1, x2, tol):
            return LemmaReport(True, applicable=False, part=part)
        ok = x1[t - 1] == x2[t - 1]
        return LemmaReport(ok, part=part, violation=None if ok else {"pair": [x1, x2], "p": p, "t": t})
    if part == "4b":
        return _part4b(w, cm, witness, x1, x2, tol)
    raise ValueError(f"unknown part {part!r}")


def _proxy(cm: CostModel, p: int, x1, x2, tol) -> bool:
    """Stand-in for equal gradients of u_p: same x_p and equal sums over N(p)."""
    g = cm.graph
    return x1[p - 1] == x2[p - 1] and _close(_vsum(cm, g.adj[p], x1), _vsum(cm, g.adj[p], x2), tol)


def _part4b(w, cm, witness, x1, x2, tol) -> LemmaReport:
    g = cm.graph
    p = witness["p"]
    f1, f2, f3 = (frozenset(witness[k]) for k in ("F1", "F2", "F3"))
    np_ = g.adj[p]
    if not (f1 <= np_ and f2 <= np_):
        raise LemmaInputError("F1 and F2 must lie in N(p)")
    if any(g.adj[s] != f2 | f3 for s in f1):
        raise LemmaInputError("every vertex of F1 must have neighborhood F2 union F3")
    if not _proxy(cm, p, x1, x2, tol):
        return LemmaReport(True, applicable=False, part="4b")
    fixed = (np_ - (f1 | f2)) | f3
    if any(x1[s - 1] != x2[s - 1] for s in fixed):
        return LemmaReport(True, applicable=False, part="4b")
    notes = []
    for t in sorted(f1):
        v1 = f1 - {t}
        y = tuple(x2[s - 1] if s in v1 else x1[s - 1] for s in g.vertices)
        if not _tight(cm, w, y):
            return LemmaReport(False, part="4b", violation={"pair": [x1, x2], "swapped": y, "stage": "part 1"})
        if not _close(_vsum(cm, np_, y), _vsum(cm, np_, x2), tol):
            notes.append(f"proxy fails for the swapped tuple at t={t}")
            return LemmaReport(True, applicable=False, part="4b", notes=notes)
        if x1[t - 1] != x2[t - 1]:
            return LemmaReport(False, part="4b", violation={"pair": [x1, x2], "p": p, "t": t})
    return LemmaReport(True, part="4b")


def natural_hypotheses(g: InteractionGraph) -> dict:
    """Hypothesis sets read off the graph for an exhaustive lemma scan."""
    part1 = []
    for v2 in sorted({g.adj[v] for v in g.vertices}, key=sorted):
        v1 = frozenset(s for s in g.vertices if g.adj[s] == v2)
        part1.append({"V1": v1, "V2": v2})
    part4a = [{"p": p, "t": t} for p in g.vertices for t in g.vertices
              if t not in (p, 1) and neighborhood(g, p, closed=True) == neighborhood(g, t, closed=True)]
    part4b = []
    for p in g.vertices:
        np_ = g.adj[p]
        for nb in sorted({g.adj[s] for s in np_}, key=sorted):
            f1 = frozenset(s for s in np_ if g.adj[s] == nb)
            f2 = nb & np_
            f3 = nb - np_
            part4b.append({"p": p, "F1": f1, "F2": f2, "F3": f3})
    return {"1": part1, "4a": part4a, "4b": part4b}


@dataclass
class LemmaScan:
    pairs: int = 0
    checks: dict = field(default_factory=dict)
    applicable: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def lemma21_scan(w: SplittingSet, cm: CostModel, parts=("1", "2", "3", "4a", "4b")) -> LemmaScan:
    """Every part on every ordered pair of splitting-set tuples sharing x_1."""
    hyp = natural_hypotheses(cm.graph)
    scan = LemmaScan()
    by_first: dict = {}
    for t in w.tuples:
        by_first.setdefault(t[0], []).append(t)
    for group in by_first.values():
        for a, b in itertools.permutations(group, 2):
            scan.pairs += 1
            for part in parts:
                wits = hyp.get(part, [{}])
                for wit in wits:
                    rep = lemma21_check(w, cm, part, {"pair": (a, b), **wit})
                    scan.checks[part] = scan.checks.get(part, 0) + 1
                    if rep.applicable:
                        scan.applicable[part] = scan.applicable.get(part, 0) + 1
                    if not rep.holds:
                        scan.violations.append({"part": part, **(rep.violation or {})})
    return scan


@dataclass
class TwistReport:
    injective: bool
    slice_size: int
    groups: int
    collisions: list


def twist_probe(w: SplittingSet, cm: CostModel, x1_index: int) -> TwistReport:
    """Is (x_2..x_m) -> sum_{s in N(1)} x_s injective on the slice of ``w`` over ``x1_index``?"""
    g = cm.graph
    tol = w.tol or 0
    tuples = w.slice(x1_index)
    keyed = sorted(((_vsum(cm, g.adj[1], t), t) for t in tuples), key=lambda kv: (tuple(map(float, kv[0])), kv[1]))
    groups: list[list] = []
    for grad, t in keyed:
        if groups and _close(groups[-1][0], grad, tol):
            groups[-1][1].append(t)
        else:
            groups.append([grad, [t]])
    collisions = [members for _, members in groups if len(members) > 1]
    return TwistReport(not collisions, len(tuples), len(groups), collisions)


def twist_probe_all(w: SplittingSet, cm: CostModel) -> bool:
    """Injective on every non-empty slice."""
    firsts = sorted({t[0] for t in w.tuples})
    return all(twist_probe(w, cm, a).injective for a in firsts)


@dataclass
class ComplementaryDuals:
    potentials: DualPotentials
    margin: float  # smallest slack off the support, capped at 1


def complementary_duals(cm: CostModel, support, seed_rows=None) -> ComplementaryDuals:
    """Optimal potentials that are slack off ``support`` by the largest common margin.

    ``support`` must be the support of an optimal plan. A positive margin certifies
    that plan as the only optimum; a zero margin means some other tuple lies on
    every optimal dual face, so another optimal plan exists. Constraints are added
    lazily: only tuples whose slack drops below the current margin join the LP.
    """
    from scipy.optimize import linprog
    from scipy.sparse import csr_matrix, hstack

    from .simplex import potentials_from_rows, restricted_matrix

    b = cost_tensor(cm.converted("float")).ravel()
    if b.size > var_cap():
        raise ResourceCapError(f"product grid has {b.size} tuples, above the variable cap {var_cap()}")
    on_idx = np.array(sorted({int(np.ravel_multi_index(tuple(t), cm.shape)) for t in support}), dtype=np.int64)
    r = sum(cm.shape) - cm.m + 1
    a_on = restricted_matrix(cm.shape, on_idx).T.tocsr()
    a_eq = hstack([a_on, csr_matrix((on_idx.size, 1))]).tocsr()
    active = np.setdiff1d(np.asarray(seed_rows if seed_rows is not None else [], dtype=np.int64), on_idx)
    c = np.zeros(r + 1)
    c[-1] = -1.0
    bounds = [(None, None)] * r + [(0.0, 1.0)]
    scale = 1e-9 * (1.0 + float(np.max(np.abs(b))))
    for _ in range(200):
        if active.size:
            a_off = restricted_matrix(cm.shape, active).T.tocsr()
            a_ub = hstack([-a_off, csr_matrix(np.ones((active.size, 1)))]).tocsr()
            res = linprog(c, A_ub=a_ub, b_ub=-b[active], A_eq=a_eq, b_eq=b[on_idx], bounds=bounds, method="highs")
        else:
            res = linprog(c, A_eq=a_eq, b_eq=b[on_idx], bounds=bounds, method="highs")
        if res.status != 0:
            raise ValueError(f"complementary dual LP failed: {res.message}")
        pots = potentials_from_rows(cm.shape, res.x[:r])
        eps = float(res.x[-1])
        slack = outer_sum(pots).ravel() - b
        slack[on_idx] = np.inf
        slack[active] = np.inf
        new = np.nonzero(slack < eps - scale)[0]
        if new.size == 0:
            return ComplementaryDuals(DualPotentials(pots), eps)
        if new.size > 4 * r:
            new = new[np.argsort(slack[new], kind="stable")[:4 * r]]
        active = np.union1d(active, new)
    raise ValueError("complementary dual row generation did not converge")


def exact_complementary_duals(cm: CostModel, basis, support, approx: DualPotentials,
                              denominator: int = 10**9) -> Optional[DualPotentials]:
    """Exact potentials tight on ``support`` with the slacks of ``approx`` on the rest of ``basis``.

    ``basis`` is an exact optimal basis containing the support. Returns ``None`` when
    the rounded potentials are not dual feasible.
    """
    from .simplex import SimplexLP, _inverse_exact

    support = set(map(tuple, support))
    lp = SimplexLP.for_coupling(cm.shape, [list(mu.weights) for mu in cm.marginals],
                                np.zeros(cm.size), exact=True)
    basis = [tuple(t) for t in basis]
    binv = _inverse_exact(lp._matrix(basis))
    target = []
    for t in basis:
        b = Fraction(cost(cm, t))
        if t not in support:
            gap = float(approx.total(t)) - float(b)
            b += Fraction(gap).limit_denominator(denominator)
        target.append(b)
    y = np.array(target, dtype=object).dot(binv)
    vals, off = [], 0
    for i, n in enumerate(cm.shape):
        if i == 0:
            vals.append(tuple(Fraction(v) for v in y[off:off + n]))
            off += n
        else:
            vals.append(tuple(Fraction(v) for v in y[off:off + n - 1]) + (Fraction(0),))
            off += n - 1
    pots = DualPotentials(tuple(vals))
    if dual_violation(pots, cm) > 0:
        return None
    return pots
