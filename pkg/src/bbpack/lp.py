"""Bounded-variable primal simplex for packing relaxations and equality slices.

Two entry points share one core:

* :func:`solve_lp`: ``max <c,x> : A x <= b, 0 <= x <= 1`` with optional
  variables fixed to 0 or 1 (the node LPs of branch and bound);
* :func:`solve_eq_lp`: the same objective over ``A x = b'``, the slice of
  the box through a prescribed occupancy vector.

Upper bounds are handled natively (nonbasic variables sit at either bound,
so a bound can change without a basis exchange), which keeps every returned
solution a vertex with at most m fractional coordinates. Equality rows are
slacks with zero-width bounds; infeasible starts go through a phase-1 with
artificial variables. Anti-cycling: Dantzig pricing switches to Bland's rule
after a degeneracy streak. Numerical failure (iteration cap, basis
singularity) raises :class:`LpError`; it is never reported as an answer.

The pivot loop is compiled with numba; all arithmetic is plain IEEE double,
so repeated solves of the same data give bit-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numba import njit

from .instance import PackingInstance

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
INT_TOL = 1e-6
_PH1_TOL = 1e-7
_BLAND_AFTER = 50
_ITER_FACTOR = 100


class LpError(RuntimeError):
    """Hard diagnostic: the simplex could not certify an answer."""


@dataclass(frozen=True)
class FixedSets:
    """Disjoint index sets of variables pinned to 0 and to 1."""

    j0: frozenset
    j1: frozenset

    def __post_init__(self):
        j0 = frozenset(int(j) for j in self.j0)
        j1 = frozenset(int(j) for j in self.j1)
        if j0 & j1:
            raise ValueError(f"variables fixed both ways: {sorted(j0 & j1)}")
        object.__setattr__(self, "j0", j0)
        object.__setattr__(self, "j1", j1)

    @classmethod
    def empty(cls) -> "FixedSets":
        return cls(frozenset(), frozenset())

    def with_zero(self, j: int) -> "FixedSets":
        return FixedSets(self.j0 | {j}, self.j1)

    def with_one(self, j: int) -> "FixedSets":
        return FixedSets(self.j0, self.j1 | {j})


@dataclass(frozen=True)
class LpSolution:
    """Outcome of one LP solve.

    For status ``"optimal"``: ``x`` is a vertex, ``fractional`` the indices
    strictly between the integrality tolerance, ``lam`` the row duals and
    ``mu`` the upper-bound duals (for a variable fixed to 1, ``mu`` holds the
    fixing dual, which may be negative). For ``"infeasible"`` everything is
    None; infeasibility is never encoded by a sentinel value.
    """

    status: str
    x: np.ndarray | None
    value: float | None
    fractional: tuple
    lam: np.ndarray | None
    mu: np.ndarray | None


_PIV_EPS = 1e-9
_RATIO_TIE = 1e-12
_REFRESH_EVERY = 64


@njit(cache=True)
def _gauss_solve(A, rhs, out):
    """Solve the tiny system A out = rhs by partial pivoting; A, rhs scratched.

    Returns False when the matrix is singular to working precision.
    """
    m = A.shape[0]
    for col in range(m):
        piv = col
        best = abs(A[col, col])
        for r in range(col + 1, m):
            v = abs(A[r, col])
            if v > best:
                best = v
                piv = r
        if best < 1e-12:
            return False
        if piv != col:
            for k in range(m):
                t = A[col, k]
                A[col, k] = A[piv, k]
                A[piv, k] = t
            t = rhs[col]
            rhs[col] = rhs[piv]
            rhs[piv] = t
        inv = 1.0 / A[col, col]
        for r in range(col + 1, m):
            f = A[r, col] * inv
            if f != 0.0:
                for k in range(col, m):
                    A[r, k] -= f * A[col, k]
                rhs[r] -= f * rhs[col]
    for col in range(m - 1, -1, -1):
        s = rhs[col]
        for k in range(col + 1, m):
            s -= A[col, k] * out[k]
        out[col] = s / A[col, col]
    return True


@njit(cache=True)
def _refresh_basics(T, b, basis, vstat, x):
    """Recompute basic values from scratch to shed accumulated drift."""
    m, ncols = T.shape
    rhs = np.empty(m)
    for i in range(m):
        rhs[i] = b[i]
    for j in range(ncols):
        if vstat[j] != 2 and x[j] != 0.0:
            xj = x[j]
            for i in range(m):
                rhs[i] -= T[i, j] * xj
    B = np.empty((m, m))
    for i in range(m):
        for k in range(m):
            B[i, k] = T[i, basis[k]]
    out = np.empty(m)
    if not _gauss_solve(B, rhs, out):
        return False
    for k in range(m):
        x[basis[k]] = out[k]
    return True


@njit(cache=True)
def _pivot_loop(T, b, cost, lo, up, basis, vstat, x, art0, maxiter, bland_after):
    """Run primal pivots to optimality.

    vstat: 0 nonbasic at lower, 1 nonbasic at upper, 2 basic. Artificial
    columns (index >= art0) are frozen (up := lo := 0) the moment they leave
    the basis so they can never re-enter. Returns 0 optimal, 1 iteration cap
    hit, 2 numerical failure.
    """
    m, ncols = T.shape
    BT = np.empty((m, m))
    Bm = np.empty((m, m))
    cb = np.empty(m)
    y = np.empty(m)
    col = np.empty(m)
    w = np.empty(m)
    streak = 0
    it = 0
    while True:
        it += 1
        if it > maxiter:
            return 1
        if it % _REFRESH_EVERY == 0:
            if not _refresh_basics(T, b, basis, vstat, x):
                return 2

        # Duals: B^T y = c_B.
        for k in range(m):
            cb[k] = cost[basis[k]]
            for i in range(m):
                BT[k, i] = T[i, basis[k]]
        if not _gauss_solve(BT, cb, y):
            return 2

        bland = streak >= bland_after
        t = -1
        tdir = 0
        best_score = 0.0
        for j in range(ncols):
            vs = vstat[j]
            if vs == 2 or up[j] - lo[j] <= 0.0:
                continue
            dj = cost[j]
            for i in range(m):
                dj -= y[i] * T[i, j]
            if vs == 0 and dj > OPT_TOL:
                score = dj
                dirj = 1
            elif vs == 1 and dj < -OPT_TOL:
                score = -dj
                dirj = -1
            else:
                continue
            if bland:
                t = j
                tdir = dirj
                break
            if score > best_score:
                best_score = score
                t = j
                tdir = dirj
        if t < 0:
            if not _refresh_basics(T, b, basis, vstat, x):
                return 2
            return 0

        # Direction of basic change per unit move of the entering variable:
        # g = -tdir * B^{-1} T[:, t].
        for i in range(m):
            col[i] = T[i, t]
            for k in range(m):
                Bm[i, k] = T[i, basis[k]]
        if not _gauss_solve(Bm, col, w):
            return 2

        limit = up[t] - lo[t]
        best_ratio = np.inf
        leave = -1
        leave_up = False
        leave_mag = 0.0
        for k in range(m):
            gk = -w[k] if tdir == 1 else w[k]
            bk = basis[k]
            if gk < -_PIV_EPS:
                r = (x[bk] - lo[bk]) / (-gk)
                to_up = False
            elif gk > _PIV_EPS:
                ub = up[bk]
                if ub == np.inf:
                    continue
                r = (ub - x[bk]) / gk
                to_up = True
            else:
                continue
            if r < 0.0:
                r = 0.0
            mag = gk if gk > 0.0 else -gk
            if r < best_ratio - _RATIO_TIE:
                best_ratio = r
                leave = k
                leave_up = to_up
                leave_mag = mag
            elif r <= best_ratio + _RATIO_TIE:
                take = False
                if bland:
                    take = leave < 0 or basis[k] < basis[leave]
                else:
                    take = mag > leave_mag
                if take:
                    if r < best_ratio:
                        best_ratio = r
                    leave = k
                    leave_up = to_up
                    leave_mag = mag

        if limit <= best_ratio:
            delta = limit
        else:
            delta = best_ratio
        if delta == np.inf:
            return 2
        if delta > 1e-12:
            streak = 0
        else:
            streak += 1

        if delta > 0.0:
            if tdir == 1:
                x[t] += delta
            else:
                x[t] -= delta
            for k in range(m):
                gk = -w[k] if tdir == 1 else w[k]
                if gk != 0.0:
                    x[basis[k]] += gk * delta

        if limit <= best_ratio:
            # Bound flip: the entering variable crosses to its other bound.
            if vstat[t] == 0:
                vstat[t] = 1
                x[t] = up[t]
            else:
                vstat[t] = 0
                x[t] = lo[t]
        else:
            lv = basis[leave]
            if leave_up:
                vstat[lv] = 1
                x[lv] = up[lv]
            else:
                vstat[lv] = 0
                x[lv] = lo[lv]
            if lv >= art0:
                up[lv] = 0.0
                lo[lv] = 0.0
                x[lv] = 0.0
            basis[leave] = t
            vstat[t] = 2


@njit(cache=True)
def _drive_out(T, lo, up, basis, vstat, x, k, art0):
    """Swap the basic artificial in row position k for any usable real column."""
    m = T.shape[0]
    BT = np.empty((m, m))
    ek = np.zeros(m)
    u = np.empty(m)
    for r in range(m):
        ek[r] = 0.0
        for i in range(m):
            BT[r, i] = T[i, basis[r]]
    ek[k] = 1.0
    if not _gauss_solve(BT, ek, u):
        return False
    best = 1e-9
    q = -1
    for j in range(art0):
        if vstat[j] == 2:
            continue
        v = 0.0
        for i in range(m):
            v += u[i] * T[i, j]
        av = v if v > 0.0 else -v
        if av > best:
            best = av
            q = j
    if q < 0:
        return False
    old = basis[k]
    basis[k] = q
    vstat[q] = 2
    vstat[old] = 0
    x[old] = 0.0
    up[old] = 0.0
    lo[old] = 0.0
    return True


@njit(cache=True)
def _lp_core(T, b, cost, lo, up, init_upper, art0, maxiter, bland_after):
    """Set up the starting basis, run phase 1 if needed, then phase 2.

    Returns (status, x, vstat, basis) with status 0 optimal, 1 iteration cap,
    2 numerical failure, 3 infeasible.
    """
    m, ncols = T.shape
    slack0 = art0 - m
    x = np.zeros(ncols)
    vstat = np.zeros(ncols, dtype=np.int8)
    basis = np.empty(m, dtype=np.int64)

    for j in range(slack0):
        if init_upper[j] and up[j] < np.inf:
            x[j] = up[j]
            vstat[j] = 1
        else:
            x[j] = lo[j]
            vstat[j] = 0

    need_art = False
    for i in range(m):
        r = b[i]
        for j in range(slack0):
            if x[j] != 0.0:
                r -= T[i, j] * x[j]
        sj = slack0 + i
        if lo[sj] - 1e-11 <= r <= up[sj] + 1e-11:
            x[sj] = r
            vstat[sj] = 2
            basis[i] = sj
        else:
            if r > up[sj]:
                x[sj] = up[sj]
                vstat[sj] = 1
                resid = r - up[sj]
            else:
                x[sj] = lo[sj]
                vstat[sj] = 0
                resid = r - lo[sj]
            aj = art0 + i
            g = 1.0 if resid > 0.0 else -1.0
            T[i, aj] = g
            lo[aj] = 0.0
            up[aj] = np.inf
            x[aj] = resid * g
            vstat[aj] = 2
            basis[i] = aj
            need_art = True

    if need_art:
        cost_ph1 = np.zeros(ncols)
        for i in range(m):
            if basis[i] >= art0:
                cost_ph1[basis[i]] = -1.0
        st = _pivot_loop(T, b, cost_ph1, lo, up, basis, vstat, x, art0, maxiter, bland_after)
        if st != 0:
            return st, x, vstat, basis
        total = 0.0
        for j in range(art0, ncols):
            if x[j] > 0.0:
                total += x[j]
        if total > _PH1_TOL:
            return 3, x, vstat, basis
        for k in range(m):
            if basis[k] >= art0:
                if not _drive_out(T, lo, up, basis, vstat, x, k, art0):
                    return 2, x, vstat, basis
        for j in range(art0, ncols):
            up[j] = 0.0
            lo[j] = 0.0
            if vstat[j] != 2:
                x[j] = 0.0

    st = _pivot_loop(T, b, cost, lo, up, basis, vstat, x, art0, maxiter, bland_after)
    return st, x, vstat, basis


@njit(cache=True)
def _crash_fill(A, order, resid, init_upper):
    m = A.shape[0]
    for idx in range(order.shape[0]):
        j = order[idx]
        ok = True
        for i in range(m):
            if A[i, j] > resid[i] - 1e-9:
                ok = False
                break
        if ok:
            init_upper[j] = True
            for i in range(m):
                resid[i] -= A[i, j]


def _solve_box_lp(A, b, c, lower, upper, equality: bool, crash: bool):
    """Shared driver: build the tableau, run the core, extract the solution."""
    m, n = A.shape
    art0 = n + m
    ncols = art0 + m
    T = np.zeros((m, ncols), dtype=np.float64)
    T[:, :n] = A
    for i in range(m):
        T[i, n + i] = 1.0
    cost = np.zeros(ncols, dtype=np.float64)
    cost[:n] = c
    lo = np.zeros(ncols, dtype=np.float64)
    up = np.zeros(ncols, dtype=np.float64)
    lo[:n] = lower
    up[:n] = upper
    if not equality:
        up[n:art0] = np.inf
    # artificial block stays [0, 0] unless phase 1 activates a column

    init_upper = np.zeros(ncols, dtype=np.bool_)
    if crash and not equality:
        # Greedy warm start: push attractive free variables to 1 while every
        # row keeps slack, so phase 2 begins near the optimum. Any choice of
        # nonbasic bounds is a legal start; this one just saves pivots.
        free = np.flatnonzero(upper - lower > 0.0)
        if free.size:
            weight = A[:, free].sum(axis=0) + 1e-12
            order = free[np.argsort(-c[free] / weight, kind="stable")]
            resid = b - A @ lower
            _crash_fill(np.ascontiguousarray(A), order, resid, init_upper)

    maxiter = _ITER_FACTOR * (n + m)
    status, x, vstat, basis = _lp_core(
        T, b.astype(np.float64), cost, lo, up, init_upper, art0, maxiter, _BLAND_AFTER
    )
    if status == 3:
        return LpSolution("infeasible", None, None, (), None, None)
    if status == 1:
        raise LpError(f"simplex iteration cap {maxiter} exceeded (m={m}, n={n})")
    if status == 2:
        raise LpError(f"simplex numerical failure (m={m}, n={n})")

    # Duals and reduced costs at the final basis.
    B = T[:, basis]
    try:
        y = np.linalg.solve(B.T, cost[basis])
    except np.linalg.LinAlgError as exc:
        raise LpError("final basis singular") from exc
    d = cost - y @ T

    xs = np.minimum(np.maximum(x[:n], lower), upper)
    value = float(c @ xs)
    fractional = tuple(
        int(j) for j in np.flatnonzero((xs > INT_TOL) & (xs < 1.0 - INT_TOL))
    )
    lam = y.copy()
    mu = np.zeros(n, dtype=np.float64)
    at_upper = (vstat[:n] != 2) & (xs > 0.5)
    mu[at_upper] = d[:n][at_upper]
    xs.setflags(write=False)
    lam.setflags(write=False)
    mu.setflags(write=False)
    return LpSolution("optimal", xs, value, fractional, lam, mu)


def solve_lp(inst: PackingInstance, fixed: FixedSets | None = None) -> LpSolution:
    """Solve the box relaxation ``max <c,x> : Ax <= b, 0 <= x <= 1``
    with the variables in ``fixed`` pinned to their values.

    With multiple optima the solver returns whichever optimal vertex it
    reaches; callers must not rely on which one.
    """
    if fixed is None:
        fixed = FixedSets.empty()
    n = inst.n
    for j in fixed.j0 | fixed.j1:
        if not 0 <= j < n:
            raise ValueError(f"fixed index {j} out of range for n={n}")
    lower = np.zeros(n)
    upper = np.ones(n)
    if fixed.j1:
        lower[list(fixed.j1)] = 1.0
    if fixed.j0:
        upper[list(fixed.j0)] = 0.0
    return _solve_box_lp(inst.A, inst.b, inst.c, lower, upper, equality=False, crash=True)


def solve_eq_lp(inst: PackingInstance, bprime) -> LpSolution:
    """Solve the slice LP ``max <c,x> : Ax = b', 0 <= x <= 1``.

    ``b'`` must be componentwise nonnegative. The returned row duals are the
    multipliers of the equality rows (free in sign).
    """
    bprime = np.asarray(bprime, dtype=np.float64).reshape(-1)
    if bprime.shape != (inst.m,):
        raise ValueError(f"bprime has shape {bprime.shape}, expected {(inst.m,)}")
    if np.any(bprime < 0.0):
        raise ValueError("bprime must be componentwise nonnegative")
    lower = np.zeros(inst.n)
    upper = np.ones(inst.n)
    return _solve_box_lp(inst.A, bprime, inst.c, lower, upper, equality=True, crash=False)


def lp_value(inst: PackingInstance) -> float:
    """Optimal value of the root relaxation."""
    return solve_lp(inst).value
