"""Numerical checks of the classifier: Monge and uniqueness probes, counterexample
generators for the negative rules, and the seeded rate experiment."""

from __future__ import annotations

import time
from pathlib import Path
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .classifier import RegularityProfile, classify
from .duality import (
    SPLIT_TOL,
    dual_violation,
    extract_splitting_set,
    lemma21_scan,
    twist_probe_all,
)
from .graph import GraphError, InteractionGraph, induced, reachable
from .mmot import (
    FLOAT,
    RATIONAL,
    CostModel,
    CouplingTensor,
    DiscreteMarginal,
    GAP_TOL,
    SolveResult,
    discretize,
    solve_kp,
)
from .simplex import SimplexLP, highs_restricted

PROBE_TOL = 1e-7
MONGE_MASS_TOL = 1e-6


class VerificationError(ValueError):
    """The base solution handed to a probe is not optimal for the cost model."""


@dataclass
class MongeVerdict:
    is_monge: bool
    map: Optional[dict] = None  # x1 index -> the dominant tuple over it
    worst_split: Optional[dict] = None  # {"atom": k, "masses": {tuple: mass}}

    def to_dict(self) -> dict:
        out = {"is_monge": self.is_monge}
        if self.map is not None:
            out["map"] = {str(k): list(t) for k, t in sorted(self.map.items())}
        if self.worst_split is not None:
            out["worst_split"] = {"atom": self.worst_split["atom"],
                                  "masses": [[list(t), str(v)] for t, v in sorted(self.worst_split["masses"].items())]}
        return out


def _is_exact_plan(plan: CouplingTensor) -> bool:
    return all(isinstance(v, (Fraction, int)) for v in plan.entries.values())


def check_monge(plan: CouplingTensor, mass_tol=None) -> MongeVerdict:
    """Monge when, over each first-marginal atom, one tuple carries all but ``mass_tol`` of the mass."""
    if mass_tol is None:
        mass_tol = 0 if _is_exact_plan(plan) else MONGE_MASS_TOL
    over: dict = {}
    for t, v in plan.entries.items():
        over.setdefault(t[0], {})[t] = v
    mapping = {}
    worst, worst_share = None, None
    for k in sorted(over):
        masses = over[k]
        total = sum(masses.values())
        if total <= 0:
            continue
        top = max(sorted(masses), key=lambda t: masses[t])
        share = masses[top] / total
        if share >= 1 - mass_tol:
            mapping[k] = top
        elif worst_share is None or share < worst_share:
            worst, worst_share = {"atom": k, "masses": dict(masses)}, share
    if worst is not None:
        return MongeVerdict(False, None, worst)
    return MongeVerdict(True, mapping, None)


def pushforward(plan: CouplingTensor, verdict: MongeVerdict, mu1_weights, i: int) -> list:
    """Push the first marginal through the Monge map onto axis ``i`` (0-based)."""
    zero = Fraction(0) if all(isinstance(w, Fraction) for w in mu1_weights) else 0.0
    out = [zero] * plan.shape[i]
    for k, t in verdict.map.items():
        out[t[i]] += mu1_weights[k]
    return out


@dataclass
class UniquenessVerdict:
    unique: bool
    probes_used: int
    second_plan: Optional[CouplingTensor] = None
    tight: int = 0

    def to_dict(self) -> dict:
        out = {"unique": self.unique, "probes_used": self.probes_used, "tight_tuples": self.tight}
        if self.second_plan is not None:
            out["second_plan"] = self.second_plan.to_dict()
        return out


def _same_plan(a: dict, b: dict, exact: bool) -> bool:
    keys = set(a) | set(b)
    if exact:
        return all(a.get(k, 0) == b.get(k, 0) for k in keys)
    return all(abs(a.get(k, 0.0) - b.get(k, 0.0)) <= PROBE_TOL for k in keys)


def _check_optimal(cm: CostModel, base: SolveResult) -> None:
    exact = base.mode == RATIONAL
    viol = dual_violation(base.duals, cm)
    gap = base.duals.objective(cm) - base.coupling.objective(cm)
    if exact:
        if viol > 0 or gap != 0:
            raise VerificationError("base duals do not certify optimality")
    else:
        tol = GAP_TOL * (1.0 + abs(float(base.value)))
        if float(viol) > SPLIT_TOL or abs(float(gap)) > tol:
            raise VerificationError("base duals do not certify optimality")


def probe_uniqueness(cm: CostModel, base: SolveResult, k: int = 8, seed: int = 0) -> UniquenessVerdict:
    """Search the optimal face for a second plan.

    Every optimal plan lives on the tuples that are tight for any optimal duals, so
    the face is the set of couplings supported there. The basis duals are used since
    their tight set holds the warm-start basis. Each probe maximizes a seeded
    random integer functional over that face, and then its negative. ``k=0`` returns
    unique without looking, which says nothing.
    """
    exact = base.mode == RATIONAL
    cm = cm.converted(base.mode)
    _check_optimal(cm, base)
    w = extract_splitting_set(base.basis_duals or base.duals, cm)
    tight = np.array(sorted(int(np.ravel_multi_index(t, cm.shape)) for t in w.tuples), dtype=np.int64)
    rng = np.random.default_rng(seed)
    weights = [list(mu.weights) for mu in cm.marginals]
    probes = 0
    for _ in range(k):
        c = rng.integers(-1000, 1001, size=tight.size)
        for sign in (1, -1):
            probes += 1
            obj = sign * c
            if exact:
                found = _exact_face_max(cm, weights, tight, obj, base)
            else:
                rhs = np.array([float(v) for i, ws in enumerate(weights) for v in (ws if i == 0 else ws[:-1])])
                x, _ = highs_restricted(cm.shape, rhs, obj.astype(float), tight)
                found = {tuple(int(a) for a in np.unravel_index(int(col), cm.shape)): float(v)
                         for col, v in zip(tight, x) if v > 1e-13}
            if _same_plan(found, base.coupling.entries, exact):
                continue
            second = CouplingTensor(cm.shape, found)
            value = second.objective(cm)
            if exact and value != base.value:
                continue
            if not exact and abs(value - base.value) > GAP_TOL * (1.0 + abs(base.value)):
                continue
            return UniquenessVerdict(False, probes, second, int(tight.size))
    return UniquenessVerdict(True, probes, None, int(tight.size))


def _exact_face_max(cm: CostModel, weights, tight: np.ndarray, obj: np.ndarray, base: SolveResult) -> dict:
    full = np.zeros(cm.size, dtype=np.int64)
    full[tight] = obj
    lp = SimplexLP.for_coupling(cm.shape, weights, full, exact=True, cols=tight)
    lp.start(list(base.basis_info))
    lp.optimize()
    out: dict = {}
    for t, v in zip(lp.basis, lp.x):
        if v > 0:
            out[t] = out.get(t, 0) + v
    return out


# counterexamples for the negative rules

@dataclass
class Counterexample:
    kind: str
    cm: CostModel
    optimum: Fraction
    monge_plan: CouplingTensor
    other_plan: CouplingTensor
    solve: SolveResult

    def verify(self) -> bool:
        """Both plans are exact couplings attaining the optimum; only the first is Monge."""
        for plan in (self.monge_plan, self.other_plan):
            for i, mu in enumerate(self.cm.marginals):
                if plan.marginal(i) != list(mu.weights):
                    return False
            if plan.objective(self.cm) != self.optimum:
                return False
        return check_monge(self.monge_plan).is_monge and not check_monge(self.other_plan).is_monge


def _corner_atoms(d: int, rng: np.random.Generator) -> tuple:
    """Two distinct ordered corners of the unit cube: the origin and a nonzero corner."""
    hi = rng.integers(0, 2, size=d)
    hi[rng.integers(0, d)] = 1
    return (tuple(Fraction(0) for _ in range(d)), tuple(Fraction(int(v)) for v in hi))


def gen_counterexample_prop21(kind: str, g: InteractionGraph, seed: int = 0, d: int = 2,
                              dirac=frozenset()) -> Counterexample:
    """Exact instance with an optimal plan that is not Monge.

    ``disconnected``: the marginals outside ``dirac`` sit on the same two corners with
    weights (p, 1-p), and the others are Dirac masses. Removing the Dirac vertices must
    leave some vertex outside the component of 1; that part can then be coupled
    independently at no cost.
    ``missing_edge``: marginal 1 and a non-neighbour j of 1 get two corners, the rest
    are Dirac masses, so x_1 and x_j never interact and every coupling is optimal.
    """
    rng = np.random.default_rng(seed)
    lo, hi = _corner_atoms(d, rng)
    p = Fraction(int(rng.integers(1, 10)), 10)
    weights = (p, 1 - p)
    dirac = frozenset(dirac)
    if kind == "disconnected":
        if 1 in dirac:
            raise GraphError("marginal 1 cannot be a Dirac mass here")
        live = [v for v in g.vertices if v not in dirac]
        sub, order = induced(g, live)
        comp = {order[k - 1] for k in reachable(sub, order.index(1) + 1)}
        outside = [v for v in live if v not in comp]
        if not outside:
            raise GraphError("every non-Dirac vertex is connected to 1")
        marg = tuple(DiscreteMarginal.dirac(hi) if v in dirac else DiscreteMarginal((lo, hi), weights)
                     for v in g.vertices)
        cm = CostModel(g, marg)
        mono = {}
        other: dict = {}
        for a, wa in enumerate(weights):
            mono[tuple(0 if v in dirac else a for v in g.vertices)] = wa
            for b, wb in enumerate(weights):
                t = tuple(0 if v in dirac else (a if v in comp else b) for v in g.vertices)
                other[t] = other.get(t, 0) + wa * wb
    elif kind == "missing_edge":
        far = [v for v in g.vertices if v != 1 and v not in g.adj[1]]
        if not far:
            raise GraphError("vertex 1 is adjacent to every other vertex")
        j = far[0]
        marg = []
        for v in g.vertices:
            if v in (1, j):
                marg.append(DiscreteMarginal((lo, hi), weights))
            else:
                point = tuple(Fraction(int(c)) for c in rng.integers(0, 2, size=d))
                marg.append(DiscreteMarginal.dirac(point))
        cm = CostModel(g, tuple(marg))
        zero = [0] * g.m
        mono = {}
        for a in (0, 1):
            t = list(zero)
            t[0] = t[j - 1] = a
            mono[tuple(t)] = weights[a]
        other = {}
        for a in (0, 1):
            for b in (0, 1):
                t = list(zero)
                t[0], t[j - 1] = a, b
                other[tuple(t)] = weights[a] * weights[b]
    else:
        raise ValueError(f"unknown counterexample kind {kind!r}")
    res = solve_kp(cm, RATIONAL)
    return Counterexample(kind, cm, res.value, CouplingTensor(cm.shape, mono),
                          CouplingTensor(cm.shape, other), res)


# seeded experiment

def _trial_seed(seed: int, trial: int, i: int) -> int:
    return int(np.random.SeedSequence([seed, trial, i]).generate_state(1)[0])


def trial_marginals(g: InteractionGraph, profile: RegularityProfile, n: int, d: int, seed: int, trial: int,
                    mode: str = FLOAT, density: str = "uniform") -> tuple:
    """Generic n-atom marginals, Dirac masses where the profile asks for them."""
    out = []
    for v in g.vertices:
        s = _trial_seed(seed, trial, v)
        if v in profile.dirac:
            rng = np.random.default_rng(s)
            point = tuple(Fraction(int(c), 10**6) for c in rng.integers(0, 10**6, size=d))
            mu = DiscreteMarginal.dirac(point)
            out.append(mu if mode == RATIONAL else mu.converted(FLOAT))
        else:
            out.append(discretize(density, n, d, seed=s, mode=mode))
    return tuple(out)


def run_experiment(g: InteractionGraph, profile: RegularityProfile, trials: int = 100, n: int = 4, d: int = 2,
                   seed: int = 0, mode: str = FLOAT, density: str = "uniform", probes: int = 8,
                   lemma: bool = False, bundle_dir=None) -> dict:
    """Solve seeded instances and report how often the plan is Monge, unique and twisted.

    The twist is read off the splitting set of the solver's strictly complementary
    duals, which is the support itself when the optimum is unique. A trial is a violation
    when the duals fail to certify the solve, or when the verdict is positive and the
    plan is not a unique Monge map. With ``bundle_dir`` set, each violating instance
    is written there as a problem bundle.
    """
    from .io import write_bundle, write_solution

    outcome = classify(g, profile)
    monge = unique = twist = 0
    solve_ms = []
    violations = []
    lemma_checks = 0
    for trial in range(trials):
        cm = CostModel(g, trial_marginals(g, profile, n, d, seed, trial, mode, density))
        t0 = time.perf_counter()
        res = solve_kp(cm, mode)
        solve_ms.append(1000.0 * (time.perf_counter() - t0))
        is_monge = check_monge(res.coupling).is_monge
        uq = probe_uniqueness(cm, res, k=probes, seed=_trial_seed(seed, trial, 0))
        feas = float(dual_violation(res.duals, cm))
        gap = abs(float(res.duals.objective(cm) - res.value)) / (1.0 + abs(float(res.value)))
        w = extract_splitting_set(res.duals, cm)
        injective = twist_probe_all(w, cm)
        monge += is_monge
        unique += uq.unique
        twist += injective
        problems = []
        if feas > SPLIT_TOL:
            problems.append(f"dual infeasible by {feas:.3g}")
        if gap > GAP_TOL:
            problems.append(f"duality gap {gap:.3g}")
        if lemma:
            scan = lemma21_scan(extract_splitting_set(res.basis_duals or res.duals, cm), cm)
            lemma_checks += sum(scan.checks.values())
            problems.extend(f"lemma part {v['part']} fails" for v in scan.violations)
        if outcome.verdict == "MongeUnique" and not (is_monge and uq.unique and injective):
            problems.append("positive verdict but plan is not a unique Monge map")
        if problems:
            entry = {"trial": trial, "problems": problems, "bundle": None}
            if bundle_dir is not None:
                root = write_bundle(Path(bundle_dir) / f"trial_{trial:04d}", cm)
                write_solution(root, res.coupling, res.duals, res.value)
                entry["bundle"] = str(root)
            violations.append(entry)
    report = {
        "graph": {"m": g.m, "edges": [list(e) for e in g.sorted_edges()]},
        "profile": profile.to_dict(),
        "verdict": outcome.verdict,
        "rule": outcome.rule,
        "trials": trials,
        "n": n,
        "d": d,
        "seed": seed,
        "mode": mode,
        "density": density,
        "monge_rate": monge / trials if trials else 0.0,
        "unique_rate": unique / trials if trials else 0.0,
        "twist_rate": twist / trials if trials else 0.0,
        "mean_solve_ms": float(np.mean(solve_ms)) if solve_ms else 0.0,
        "violations": violations,
    }
    if lemma:
        report["lemma_checks"] = lemma_checks
    return report
