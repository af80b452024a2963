"""Revised primal simplex on the multi-index transportation polytope.

Rows are the marginal constraints: every atom of marginal 1, and every atom but the
last of marginals 2..m (the dropped rows are implied by total mass). A column is a
tuple of atom indices and has a single 1 in each block. The objective is maximized.

Pricing is Dantzig's rule until the objective stalls, then Bland's rule. All ties are
broken by the flat (row-major) index of the tuple, so runs are reproducible.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

MAX_PIVOTS = 200_000
REFACTOR_EVERY = 64


class LPError(RuntimeError):
    pass


def _inverse_exact(mat: np.ndarray) -> np.ndarray:
    n = mat.shape[0]
    a = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(mat)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise LPError("singular basis")
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [v * inv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
    return np.array([row[n:] for row in a], dtype=object)


def staircase_basis(shape: Sequence[int], weights: Sequence[Sequence], exact: bool) -> list[tuple]:
    """North-west-corner path through the grid, advancing one coordinate per step.

    Returns ``sum(n_i) - m + 1`` tuples, some possibly carrying zero mass.
    """
    m = len(shape)
    rem = [list(w) for w in weights]
    t = [0] * m
    path = []
    while True:
        path.append(tuple(t))
        val = min(rem[i][t[i]] for i in range(m))
        for i in range(m):
            rem[i][t[i]] -= val
        movable = [i for i in range(m) if t[i] < shape[i] - 1]
        if not movable:
            break
        tol = 0 if exact else 1e-15
        done = [i for i in movable if rem[i][t[i]] <= tol]
        i = done[0] if done else min(movable, key=lambda k: (rem[k][t[k]], k))
        t[i] += 1
    return path


class SimplexLP:
    def __init__(self, shape, rhs_blocks, obj_full: np.ndarray, cols: Optional[np.ndarray], exact: bool,
                 exact_obj: Optional[Callable] = None):
        self.shape = tuple(shape)
        self.m = len(shape)
        self.exact = exact
        self.exact_obj = exact_obj
        self.offsets = []
        off = 0
        for i, n in enumerate(shape):
            self.offsets.append(off)
            off += n if i == 0 else n - 1
        self.R = off
        rhs = []
        for i, w in enumerate(rhs_blocks):
            rhs.extend(w if i == 0 else w[:-1])
        self.rhs = np.array(rhs, dtype=object if exact else float)
        self.obj_full = np.asarray(obj_full, dtype=float).ravel()
        n_all = self.obj_full.size
        self.cols = np.arange(n_all) if cols is None else np.asarray(sorted(set(int(c) for c in cols)))
        self.coords = np.unravel_index(self.cols, self.shape)
        scale = float(np.max(np.abs(self.obj_full[self.cols]))) if self.cols.size else 0.0
        self.tol = 1e-10 * (1.0 + scale)
        self.pivots = 0
        self.bland = False
        self._obj_cache: dict = {}

    @classmethod
    def for_coupling(cls, shape, weights, cost_tensor, exact, exact_cost=None, cols=None):
        return cls(shape, weights, cost_tensor, cols, exact, exact_cost)

    # column helpers

    def rows_of(self, t: Sequence[int]) -> list[int]:
        rows = [t[0]]
        for i in range(1, self.m):
            if t[i] < self.shape[i] - 1:
                rows.append(self.offsets[i] + t[i])
        return rows

    def flat(self, t: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(t), self.shape))

    def obj(self, t: tuple):
        if not self.exact:
            return float(self.obj_full[self.flat(t)])
        v = self._obj_cache.get(t)
        if v is None:
            v = Fraction(self.exact_obj(t)) if self.exact_obj else Fraction(int(self.obj_full[self.flat(t)]))
            self._obj_cache[t] = v
        return v

    def _matrix(self, basis) -> np.ndarray:
        mat = np.zeros((self.R, len(basis)), dtype=object if self.exact else float)
        zero, one = (Fraction(0), Fraction(1)) if self.exact else (0.0, 1.0)
        if self.exact:
            mat[:] = zero
        for k, t in enumerate(basis):
            for r in self.rows_of(t):
                mat[r, k] = one
        return mat

    # basis management

    def start(self, basis: list[tuple], x: Optional[list] = None) -> None:
        if len(basis) != self.R:
            raise LPError(f"basis has {len(basis)} columns, expected {self.R}")
        self.basis = [tuple(int(v) for v in t) for t in basis]
        self.refactor()
        if x is not None:
            self.x = np.array(x, dtype=object if self.exact else float)
        if any((v < 0) if self.exact else (v < -1e-9) for v in self.x):
            raise LPError("starting basis is not primal feasible")

    def refactor(self) -> None:
        mat = self._matrix(self.basis)
        if self.exact:
            self.binv = _inverse_exact(mat)
        else:
            self.binv = np.linalg.inv(mat)
        x = self.binv.dot(self.rhs)
        if not self.exact:
            x = np.where(np.abs(x) < 1e-14, 0.0, x)
        self.x = x

    def duals(self) -> np.ndarray:
        cb = np.array([self.obj(t) for t in self.basis], dtype=object if self.exact else float)
        return cb.dot(self.binv)

    def potentials(self) -> tuple:
        y = self.duals()
        zero = Fraction(0) if self.exact else 0.0
        out = []
        for i, n in enumerate(self.shape):
            vals = []
            for a in range(n):
                if i == 0:
                    vals.append(y[a])
                elif a < n - 1:
                    vals.append(y[self.offsets[i] + a])
                else:
                    vals.append(zero)
            out.append(tuple(v if self.exact else float(v) for v in vals))
        return tuple(out)

    def objective_value(self):
        return sum(self.obj(t) * v for t, v in zip(self.basis, self.x))

    def reduced_costs(self, pots) -> np.ndarray:
        """Float reduced costs over the candidate columns."""
        d = self.obj_full[self.cols].astype(float).copy()
        for i in range(self.m):
            d -= np.asarray(pots[i], dtype=float)[self.coords[i]]
        return d

    def _exact_rc(self, t, pots):
        return self.obj(t) - sum(pots[i][t[i]] for i in range(self.m))

    def _entering(self, pots) -> Optional[tuple]:
        d = self.reduced_costs(pots)
        if not self.exact:
            pos = np.nonzero(d > self.tol)[0]
            if pos.size == 0:
                return None
            k = pos[0] if self.bland else pos[np.argmax(d[pos])]
            return tuple(int(c[k]) for c in self.coords)
        screen = np.nonzero(d > -1e-7 * (1.0 + float(np.max(np.abs(d))) if d.size else 1.0))[0]
        best = None
        for k in screen:
            t = tuple(int(c[k]) for c in self.coords)
            rc = self._exact_rc(t, pots)
            if rc > 0:
                if self.bland:
                    return t
                if best is None or rc > best[0]:
                    best = (rc, t)
        if best is not None:
            return best[1]
        # certify optimality with a full exact scan
        screened = set(screen.tolist())
        for k in range(self.cols.size):
            if k in screened:
                continue
            t = tuple(int(c[k]) for c in self.coords)
            if self._exact_rc(t, pots) > 0:
                return t
        return None

    def optimize(self) -> None:
        last_obj = None
        stall = 0
        stall_limit = max(20, self.R)
        while True:
            pots = self.potentials()
            t = self._entering(pots)
            if t is None:
                return
            rows = self.rows_of(t)
            w = self.binv[:, rows].sum(axis=1)
            if self.exact:
                cand = [k for k in range(self.R) if w[k] > 0]
            else:
                cand = [k for k in range(self.R) if w[k] > 1e-11]
            if not cand:
                raise LPError("unbounded direction on a bounded polytope")
            ratios = [(self.x[k] / w[k], self.flat(self.basis[k]), k) for k in cand]
            theta = min(r[0] for r in ratios)
            if self.exact:
                ties = [r for r in ratios if r[0] == theta]
            else:
                ties = [r for r in ratios if r[0] <= theta + 1e-12]
            _, _, r = min(ties, key=lambda q: q[1])
            self._pivot(r, t, w, theta)
            self.pivots += 1
            if self.pivots > MAX_PIVOTS:
                raise LPError("pivot limit reached")
            obj = self.objective_value()
            if last_obj is not None and not (obj > last_obj + (0 if self.exact else self.tol)):
                stall += 1
                if stall >= stall_limit:
                    self.bland = True
            else:
                stall = 0
            last_obj = obj if last_obj is None or obj > last_obj else last_obj
            if not self.exact and self.pivots % REFACTOR_EVERY == 0:
                self.refactor()

    def _pivot(self, r: int, t: tuple, w: np.ndarray, theta) -> None:
        x = self.x - theta * w
        x[r] = theta
        if not self.exact:
            x = np.where(np.abs(x) < 1e-14, 0.0, x)
        self.x = x
        self.basis[r] = t
        piv = w[r]
        row = self.binv[r, :] / piv
        self.binv = self.binv - np.outer(w, row)
        self.binv[r, :] = row


def row_index(shape: Sequence[int], coords) -> list[np.ndarray]:
    """Constraint rows hit by each column (one array per block; -1 where the row is dropped)."""
    out, off = [], 0
    for i, n in enumerate(shape):
        c = np.asarray(coords[i])
        if i == 0:
            out.append(c + off)
            off += n
        else:
            out.append(np.where(c < n - 1, c + off, -1))
            off += n - 1
    return out


def restricted_matrix(shape: Sequence[int], cols: np.ndarray):
    from scipy.sparse import coo_matrix

    coords = np.unravel_index(cols, shape)
    rows = row_index(shape, coords)
    r_all, c_all = [], []
    for r in rows:
        keep = r >= 0
        r_all.append(r[keep])
        c_all.append(np.nonzero(keep)[0])
    n_rows = sum(shape) - len(shape) + 1
    r_all, c_all = np.concatenate(r_all), np.concatenate(c_all)
    return coo_matrix((np.ones(r_all.size), (r_all, c_all)), shape=(n_rows, cols.size)).tocsc()


def outer_sum(pots: Sequence[Sequence[float]]) -> np.ndarray:
    shape = [len(u) for u in pots]
    total = np.zeros(shape)
    for i, u in enumerate(pots):
        s = [1] * len(shape)
        s[i] = shape[i]
        total = total + np.asarray(u, dtype=float).reshape(s)
    return total


def potentials_from_rows(shape: Sequence[int], y: np.ndarray) -> tuple:
    out, off = [], 0
    for i, n in enumerate(shape):
        if i == 0:
            out.append(tuple(float(v) for v in y[off:off + n]))
            off += n
        else:
            out.append(tuple(float(v) for v in y[off:off + n - 1]) + (0.0,))
            off += n - 1
    return tuple(out)


def highs_restricted(shape, rhs: np.ndarray, obj: np.ndarray, cols: np.ndarray):
    """Maximize ``obj`` over the columns ``cols``; returns (x, row duals) or raises LPError."""
    from scipy.optimize import linprog

    a = restricted_matrix(shape, cols)
    res = linprog(-obj, A_eq=a, b_eq=rhs, bounds=(0, None), method="highs-ds")
    if res.status != 0:
        raise LPError(f"restricted master failed: {res.message}")
    return res.x, -np.asarray(res.eqlin.marginals)


def colgen_float(shape, weights, cost: np.ndarray, start_cols, batch: Optional[int] = None):
    """Column generation: HiGHS on a restricted master, full-grid pricing with numpy.

    Returns (cols, x, potentials, rounds).
    """
    shape = tuple(shape)
    flat_cost = np.asarray(cost, dtype=float).ravel()
    rhs = []
    for i, w in enumerate(weights):
        rhs.extend(float(v) for v in (w if i == 0 else w[:-1]))
    rhs = np.array(rhs)
    cols = np.array(sorted(set(int(c) for c in start_cols)), dtype=np.int64)
    tol = 1e-10 * (1.0 + float(np.max(np.abs(flat_cost))))
    batch = batch or max(32, 4 * sum(shape))
    rounds = 0
    while True:
        rounds += 1
        x, y = highs_restricted(shape, rhs, flat_cost[cols], cols)
        pots = potentials_from_rows(shape, y)
        rc = flat_cost - outer_sum(pots).ravel()
        rc[cols] = -np.inf
        cand = np.nonzero(rc > tol)[0]
        if cand.size == 0 or rounds > 500:
            if cand.size:
                raise LPError("column generation did not converge")
            return cols, x, pots, rounds
        if cand.size > batch:
            cand = cand[np.argsort(-rc[cand], kind="stable")[:batch]]
        cols = np.union1d(cols, cand)


def complete_basis(lp: SimplexLP, first: Sequence[tuple], fill: Sequence[tuple]) -> list[tuple]:
    """Extend independent columns ``first`` to a basis using columns from ``fill`` (exact elimination)."""
    pivots: dict[int, list] = {}  # pivot row -> reduced vector
    chosen = []

    def reduce(vec: list) -> Optional[int]:
        for r, pv in pivots.items():
            if vec[r] != 0:
                f = vec[r]
                vec[:] = [a - f * b for a, b in zip(vec, pv)]
        return next((r for r, v in enumerate(vec) if v != 0), None)

    for t in list(first) + list(fill):
        if len(chosen) == lp.R:
            break
        if t in chosen:
            continue
        vec = [Fraction(0)] * lp.R
        for r in lp.rows_of(t):
            vec[r] = Fraction(1)
        lead = reduce(vec)
        if lead is None:
            if t in first:
                raise LPError("support columns are linearly dependent")
            continue
        inv = 1 / vec[lead]
        vec = [v * inv for v in vec]
        for r, pv in pivots.items():
            if pv[lead] != 0:
                f = pv[lead]
                pivots[r] = [a - f * b for a, b in zip(pv, vec)]
        pivots[lead] = vec
        chosen.append(t)
    if len(chosen) != lp.R:
        raise LPError("could not complete the basis")
    return chosen
