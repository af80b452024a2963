"""Discrete marginals, the bilinear graph surplus, and the Kantorovich LP.

Two arithmetic modes are supported: ``"rational"`` keeps atoms, weights, plans and
potentials as :class:`fractions.Fraction`; ``"float"`` uses doubles and numpy.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .graph import InteractionGraph, ResourceCapError
from .simplex import LPError, SimplexLP, colgen_float, complete_basis, staircase_basis

RATIONAL = "rational"
FLOAT = "float"
MODES = (RATIONAL, FLOAT)

DEFAULT_VAR_CAP = 200_000
FEAS_TOL = 1e-9
GAP_TOL = 1e-8


class ProblemError(ValueError):
    """Inconsistent transport problem data."""


def var_cap() -> int:
    raw = os.environ.get("MMOT_VAR_CAP")
    return int(raw) if raw else DEFAULT_VAR_CAP


def _as_number(x, mode: str):
    if mode == RATIONAL:
        if isinstance(x, float):
            return Fraction(x).limit_denominator(10**12) if not x.is_integer() else Fraction(int(x))
        return Fraction(x)
    return float(x)


@dataclass(frozen=True)
class DiscreteMarginal:
    atoms: tuple  # tuple of d-tuples
    weights: tuple

    def __post_init__(self):
        atoms = tuple(tuple(a) for a in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", tuple(self.weights))
        if len(atoms) != len(self.weights) or not atoms:
            raise ProblemError("a marginal needs as many weights as atoms, and at least one atom")
        dims = {len(a) for a in atoms}
        if len(dims) != 1:
            raise ProblemError("atoms of one marginal have different dimensions")
        if len(set(atoms)) != len(atoms):
            raise ProblemError("atoms must be pairwise distinct")
        if any(w < 0 for w in self.weights):
            raise ProblemError("weights must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.atoms)

    @property
    def d(self) -> int:
        return len(self.atoms[0])

    @property
    def exact(self) -> bool:
        return all(isinstance(w, (Fraction, int)) for w in self.weights) and all(
            isinstance(x, (Fraction, int)) for a in self.atoms for x in a)

    def converted(self, mode: str) -> "DiscreteMarginal":
        return DiscreteMarginal(tuple(tuple(_as_number(x, mode) for x in a) for a in self.atoms),
                                tuple(_as_number(w, mode) for w in self.weights))

    def total(self):
        return sum(self.weights)

    @classmethod
    def dirac(cls, point: Sequence) -> "DiscreteMarginal":
        return cls((tuple(point),), (Fraction(1),))

    @classmethod
    def uniform(cls, atoms: Sequence[Sequence]) -> "DiscreteMarginal":
        return cls(tuple(tuple(a) for a in atoms), tuple(Fraction(1, len(atoms)) for _ in atoms))


@dataclass(frozen=True)
class CostModel:
    graph: InteractionGraph
    marginals: tuple

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))
        if len(self.marginals) != self.graph.m:
            raise ProblemError(f"{len(self.marginals)} marginals for a graph on {self.graph.m} vertices")
        if len({mu.d for mu in self.marginals}) != 1:
            raise ProblemError("all marginals must share one dimension")

    @property
    def m(self) -> int:
        return self.graph.m

    @property
    def shape(self) -> tuple:
        return tuple(mu.n for mu in self.marginals)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    def converted(self, mode: str) -> "CostModel":
        return CostModel(self.graph, tuple(mu.converted(mode) for mu in self.marginals))


def cost(cm: CostModel, idx: Sequence[int]):
    """Surplus at one tuple of atom indices (0-based)."""
    if len(idx) != cm.m:
        raise ProblemError(f"expected {cm.m} indices, got {len(idx)}")
    for i, (k, mu) in enumerate(zip(idx, cm.marginals)):
        if not (0 <= k < mu.n):
            raise ProblemError(f"atom index {k} out of range for marginal {i + 1} (n={mu.n})")
    total = 0
    for i, j in cm.graph.sorted_edges():
        a, b = cm.marginals[i - 1].atoms[idx[i - 1]], cm.marginals[j - 1].atoms[idx[j - 1]]
        total += sum(x * y for x, y in zip(a, b))
    return total


def cost_tensor(cm: CostModel, exact: bool = False) -> np.ndarray:
    """Dense surplus tensor of shape ``cm.shape``, built from per-edge Gram matrices."""
    if cm.size > var_cap():
        raise ResourceCapError(f"product grid has {cm.size} tuples, above the variable cap {var_cap()}")
    dtype = object if exact else float
    out = np.zeros(cm.shape, dtype=dtype)
    if exact:
        out = np.full(cm.shape, Fraction(0), dtype=object)
    arrays = [np.array(mu.atoms, dtype=dtype) for mu in cm.marginals]
    for i, j in cm.graph.sorted_edges():
        gram = arrays[i - 1].dot(arrays[j - 1].T)
        shape = [1] * cm.m
        shape[i - 1], shape[j - 1] = cm.shape[i - 1], cm.shape[j - 1]
        out = out + gram.reshape(shape)
    return out


@dataclass(frozen=True)
class CouplingTensor:
    shape: tuple
    entries: dict  # tuple -> positive mass

    def marginal(self, i: int) -> list:
        """Axis-``i`` marginal, 0-based axis."""
        zero = Fraction(0) if any(isinstance(v, Fraction) for v in self.entries.values()) else 0.0
        out = [zero] * self.shape[i]
        for t, v in self.entries.items():
            out[t[i]] += v
        return out

    def support(self) -> frozenset:
        return frozenset(self.entries)

    def objective(self, cm: CostModel):
        return sum(v * cost(cm, t) for t, v in self.entries.items())

    def total(self):
        return sum(self.entries.values())

    def to_dict(self) -> dict:
        return {"shape": list(self.shape),
                "entries": [[list(t), str(v)] for t, v in sorted(self.entries.items())]}


@dataclass(frozen=True)
class DualPotentials:
    values: tuple  # per marginal, a tuple of numbers

    def objective(self, cm: CostModel):
        return sum(u * w for vals, mu in zip(self.values, cm.marginals) for u, w in zip(vals, mu.weights))

    def total(self, idx: Sequence[int]):
        return sum(self.values[i][k] for i, k in enumerate(idx))

    def shifted(self, i: int, c) -> "DualPotentials":
        vals = list(self.values)
        vals[i] = tuple(u + c for u in vals[i])
        return DualPotentials(tuple(vals))


@dataclass(frozen=True)
class SolveResult:
    coupling: CouplingTensor
    value: object
    duals: DualPotentials
    basis_info: tuple  # basic tuples in basis order
    mode: str
    pivots: int = 0
    basis_duals: Optional[DualPotentials] = None  # the basis's own duals, before recentering
    margin: Optional[float] = None  # least slack off the support under ``duals``


def check_feasible_weights(cm: CostModel, mode: str) -> None:
    totals = [mu.total() for mu in cm.marginals]
    if mode == RATIONAL:
        if any(t != 1 for t in totals):
            raise ProblemError(f"marginal weights must each sum to 1 exactly, got {[str(t) for t in totals]}")
    elif any(abs(float(t) - 1.0) > FEAS_TOL for t in totals):
        raise ProblemError(f"marginal weights must each sum to 1, got {[float(t) for t in totals]}")


def solve_kp(cm: CostModel, mode: str = RATIONAL, recenter: bool = True) -> SolveResult:
    """Maximize the expected surplus over all couplings of the marginals.

    Float mode runs column generation with HiGHS on the restricted master. Rational
    mode crash-starts the exact simplex from the float support and prices every
    tuple exactly before declaring optimality. With ``recenter`` the returned duals
    are strictly complementary (see :func:`recenter_duals`).
    """
    if mode not in MODES:
        raise ProblemError(f"unknown mode {mode!r}")
    if cm.size > var_cap():
        raise ResourceCapError(f"product grid has {cm.size} tuples, above the variable cap {var_cap()}")
    cm = cm.converted(mode)
    check_feasible_weights(cm, mode)
    weights = [list(mu.weights) for mu in cm.marginals]
    fcost = cost_tensor(cm.converted(FLOAT) if mode == RATIONAL else cm)
    stair = staircase_basis(cm.shape, weights, mode == RATIONAL)
    if mode == FLOAT:
        start = [int(np.ravel_multi_index(t, cm.shape)) for t in stair]
        fweights = [[float(w) for w in ws] for ws in weights]
        cols, x, pots, rounds = colgen_float(cm.shape, fweights, fcost, start)
        entries = {}
        for c, v in zip(cols, x):
            if v > 1e-13:
                t = tuple(int(k) for k in np.unravel_index(int(c), cm.shape))
                entries[t] = float(v)
        value = float(sum(v * fcost[t] for t, v in entries.items()))
        res = SolveResult(CouplingTensor(cm.shape, entries), value, DualPotentials(pots),
                          tuple(sorted(entries)), mode, rounds)
    else:
        lp = SimplexLP.for_coupling(cm.shape, weights, fcost, exact=True, exact_cost=lambda t: cost(cm, t))
        lp.start(_crash_basis(lp, cm, fcost, stair))
        lp.optimize()
        res = result_from_lp(lp, cm, mode)
    return recenter_duals(cm, res) if recenter else res


def recenter_duals(cm: CostModel, res: SolveResult) -> SolveResult:
    """Swap the basis duals for strictly complementary ones.

    A degenerate basis leaves tuples off the support with zero slack. The replacement
    potentials are slack off the support by the largest common margin, so their tight
    set is exactly the union of the supports of all optimal plans. In rational mode the
    potentials are rebuilt exactly from the basis; if rounding breaks feasibility the
    basis duals are kept.
    """
    from .duality import complementary_duals, exact_complementary_duals, slack_tensor

    fcm = cm.converted(FLOAT)
    fbase = DualPotentials(tuple(tuple(float(v) for v in u) for u in res.duals.values))
    seed_rows = np.nonzero(np.abs(slack_tensor(fbase, fcm).ravel()) <= 1e-7)[0]
    comp = complementary_duals(fcm, res.coupling.entries, seed_rows=seed_rows)
    duals = comp.potentials
    if res.mode == RATIONAL:
        duals = exact_complementary_duals(cm, res.basis_info, res.coupling.entries, comp.potentials)
        if duals is None:
            return replace(res, basis_duals=res.duals)
    return replace(res, duals=duals, basis_duals=res.duals, margin=comp.margin)


def _crash_basis(lp: SimplexLP, cm: CostModel, fcost: np.ndarray, stair: list) -> list:
    """Exact basis around the float optimum's support, or the staircase if that fails."""
    try:
        fw = [[float(w) for w in mu.weights] for mu in cm.marginals]
        start = [int(np.ravel_multi_index(t, cm.shape)) for t in stair]
        cols, x, _, _ = colgen_float(cm.shape, fw, fcost, start)
        support = [tuple(int(k) for k in np.unravel_index(int(c), cm.shape))
                   for c, v in zip(cols, x) if v > 1e-9]
        basis = complete_basis(lp, support, stair)
        probe = SimplexLP.for_coupling(cm.shape, [list(mu.weights) for mu in cm.marginals], fcost,
                                       exact=True, exact_cost=lambda t: cost(cm, t))
        probe.start(basis)
        return basis
    except (LPError, ValueError, np.linalg.LinAlgError):
        return stair


def result_from_lp(lp: "SimplexLP", cm: CostModel, mode: str) -> SolveResult:
    exact = mode == RATIONAL
    entries = {}
    for t, v in zip(lp.basis, lp.x):
        if (v > 0) if exact else (v > 1e-13):
            entries[t] = entries.get(t, 0) + (v if exact else float(v))
    coupling = CouplingTensor(cm.shape, entries)
    duals = DualPotentials(lp.potentials())
    value = sum(v * cost(cm, t) for t, v in entries.items())
    if not exact:
        value = float(value)
    return SolveResult(coupling, value, duals, tuple(lp.basis), mode, lp.pivots)


def product_grid(shape: Sequence[int]):
    return itertools.product(*(range(n) for n in shape))


def discretize(density: str = "uniform", n: int = 4, d: int = 2, seed: int = 0,
               mode: str = FLOAT, grid: int = 10**6, max_tries: int = 1000) -> DiscreteMarginal:
    """Seeded generic atoms with uniform weights, a desk stand-in for an absolutely continuous law.

    ``density`` is ``"uniform"`` (unit box) or ``"gaussian"`` (clipped standard normal).
    Coordinates are multiples of ``1/grid`` so both modes see the same points.
    """
    if n < 1 or d < 1:
        raise ProblemError("n and d must be positive")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        if density == "uniform":
            raw = rng.integers(0, grid, size=(n, d))
        elif density == "gaussian":
            raw = np.clip(np.rint(rng.standard_normal((n, d)) * grid / 6 + grid / 2), 0, grid - 1).astype(int)
        else:
            raise ProblemError(f"unknown density {density!r}")
        atoms = [tuple(Fraction(int(v), grid) for v in row) for row in raw]
        if general_position(atoms):
            weights = [Fraction(1, n)] * n
            mu = DiscreteMarginal(tuple(atoms), tuple(weights))
            return mu if mode == RATIONAL else mu.converted(FLOAT)
    raise ProblemError("could not draw atoms in general position")


def general_position(atoms: Sequence[Sequence], tol: float = 1e-9) -> bool:
    """Atoms distinct, with pairwise distinct coordinate sums and no repeated coordinate."""
    if len(set(map(tuple, atoms))) != len(atoms):
        return False
    sums = sorted(float(sum(a)) for a in atoms)
    if any(b - a <= tol for a, b in zip(sums, sums[1:])):
        return False
    for k in range(len(atoms[0])):
        col = sorted(float(a[k]) for a in atoms)
        if any(b - a <= tol for a, b in zip(col, col[1:])):
            return False
    return True
