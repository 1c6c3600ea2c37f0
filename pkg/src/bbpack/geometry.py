"""Dual-induced partial assignments and the counting geometry behind them.

A multiplier vector lam prices the rows; the reduced costs
``r_j = c_j - <lam, A^j>`` split the variables into forced-one (r > 0),
forced-zero (r < 0) and undecided "stars" (r = 0). Each column is also a
point ``(c_j, A^j)`` whose distance to the hyperplane with normal
``(1, -lam)`` is ``|r_j| / sqrt(1 + |lam|^2)``; grouping non-star columns by
that distance in dyadic bands of width log(n)/n gives the buckets that cap
how much a near-optimal 0/1 point can disagree with the assignment. Summing
the allowed disagreement patterns over all assignments reachable by some
lam (for m == 1, an exactly enumerable line arrangement) bounds the size of
the good set from above; slab counting bounds how many columns can crowd any
band. All logs are natural unless a dyadic exponent is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import oracle as _oracle
from .instance import PackingInstance

STAR = 2  # assignment code; 0 and 1 mean forced values
STAR_TOL = 1e-9


@dataclass(frozen=True)
class PartialSolution:
    """Assignment induced by one multiplier vector."""

    lam: np.ndarray
    assignment: np.ndarray    # int8 per variable: 0, 1, or STAR
    reduced_costs: np.ndarray

    def __post_init__(self):
        for name in ("lam", "assignment", "reduced_costs"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    def distances(self) -> np.ndarray:
        """Column distances to the pricing hyperplane: |r| / sqrt(1+|lam|^2)."""
        scale = math.sqrt(1.0 + float(self.lam @ self.lam))
        return np.abs(self.reduced_costs) / scale

    def stars(self) -> np.ndarray:
        return np.flatnonzero(self.assignment == STAR)


def dual_solution(inst: PackingInstance, lam) -> PartialSolution:
    """Classify every variable by the sign of its reduced cost under ``lam``."""
    lam = np.asarray(lam, dtype=np.float64).reshape(-1)
    if lam.shape != (inst.m,):
        raise ValueError(f"lam has shape {lam.shape}, expected {(inst.m,)}")
    r = inst.c - inst.A.T @ lam
    assignment = np.full(inst.n, STAR, dtype=np.int8)
    assignment[r > STAR_TOL] = 1
    assignment[r < -STAR_TOL] = 0
    return PartialSolution(lam=lam.copy(), assignment=assignment, reduced_costs=r)


def compatible(x, p: PartialSolution) -> bool:
    """Does the 0/1 point agree with the assignment outside its stars?"""
    x = np.asarray(x).reshape(-1)
    decided = p.assignment != STAR
    return bool(np.all(x[decided] == p.assignment[decided]))


def enumerate_cells_1d(inst: PackingInstance) -> list:
    """All assignments reachable by a single multiplier (m == 1), exactly.

    The breakpoints lam_j = c_j / A[0][j] cut the line into open intervals
    and isolated points; interval cells carry no stars, point cells star
    exactly the columns whose breakpoint equals that value (symbolic ties
    from the construction, not a float tolerance). At most 2n+1 cells.
    """
    if inst.m != 1:
        raise ValueError(f"the line arrangement needs m == 1, got m={inst.m}")
    a = inst.A[0]
    c = inst.c
    n = inst.n

    bps = sorted({float(c[j] / a[j]) for j in range(n) if a[j] > 0.0})

    def interval_cell(lam_rep, lo_val, hi_val):
        # On (lo, hi): r_j > 0 iff lam_j >= hi (r_j decreasing in lam for a_j > 0).
        assignment = np.empty(n, dtype=np.int8)
        for j in range(n):
            if a[j] > 0.0:
                bp = float(c[j] / a[j])
                assignment[j] = 1 if bp >= hi_val else 0
            else:
                # constant reduced cost c_j for every lam
                assignment[j] = 1 if c[j] > 0.0 else (0 if c[j] < 0.0 else STAR)
        lamv = np.array([lam_rep])
        return PartialSolution(lamv, assignment, c - a * lam_rep)

    def point_cell(t):
        assignment = np.empty(n, dtype=np.int8)
        for j in range(n):
            if a[j] > 0.0:
                bp = float(c[j] / a[j])
                if bp == t:
                    assignment[j] = STAR
                else:
                    assignment[j] = 1 if bp > t else 0
            else:
                assignment[j] = 1 if c[j] > 0.0 else (0 if c[j] < 0.0 else STAR)
        lamv = np.array([t])
        return PartialSolution(lamv, assignment, c - a * t)

    cells = []
    if not bps:
        cells.append(interval_cell(0.0, -np.inf, np.inf))
        return cells
    cells.append(interval_cell(bps[0] - 1.0, -np.inf, bps[0]))
    for k, t in enumerate(bps):
        cells.append(point_cell(t))
        hi = bps[k + 1] if k + 1 < len(bps) else np.inf
        rep = t + 1.0 if hi == np.inf else 0.5 * (t + hi)
        cells.append(interval_cell(rep, t, hi))
    return cells


def default_radius(inst: PackingInstance) -> float:
    """Sampling radius that covers every optimum-relevant multiplier."""
    norms = np.linalg.norm(inst.A, axis=0)
    positive = norms[norms > 0]
    if positive.size == 0:
        return 1.0
    return (inst.m + 1) * float(inst.c.max()) / float(positive.min())


def sample_cells(inst: PackingInstance, trials: int, seed: int,
                 radius: float | None = None, extra_lambdas=()) -> list:
    """Distinct assignments hit by ``trials`` uniform draws from a ball.

    Multipliers encountered elsewhere (e.g. slice duals) can be passed
    through ``extra_lambdas`` to guarantee their cells are represented. The
    result is deterministic in ``seed`` and grows monotonically with
    ``trials``.
    """
    if radius is None:
        radius = default_radius(inst)
    rng = np.random.default_rng(seed)
    seen = {}
    out = []

    def add(lam):
        p = dual_solution(inst, lam)
        key = p.assignment.tobytes()
        if key not in seen:
            seen[key] = True
            out.append(p)

    for _ in range(trials):
        g = rng.standard_normal(inst.m)
        norm = float(np.linalg.norm(g))
        if norm == 0.0:
            continue
        u = g / norm
        r = radius * float(rng.random()) ** (1.0 / inst.m)
        add(u * r)
    for lam in extra_lambdas:
        add(lam)
    return out


@dataclass(frozen=True)
class DistanceBuckets:
    """Dyadic distance bands of the non-star columns, plus the remainder."""

    buckets: dict          # level l >= 1 -> ascending index array
    remainder: np.ndarray  # ascending indices in no band
    distances: np.ndarray


def bucketize(p: PartialSolution, inst: PackingInstance) -> DistanceBuckets:
    """Band the non-star columns by hyperplane distance.

    Level l holds the j with ``(log n / n) * 2^l < d_j <= (log n / n) * 2^(l+1)``;
    both edges use exact float comparison, so a distance equal to the lower
    edge of level 1 falls to the remainder. Stars are always remainder.
    """
    n = inst.n
    d = p.distances()
    base = math.log(n) / n
    buckets: dict = {}
    rem = []
    for j in range(n):
        dj = float(d[j])
        if p.assignment[j] == STAR or base <= 0.0 or dj <= base * 2.0:
            rem.append(j)
            continue
        lvl = max(1, int(math.floor(math.log2(dj / base))))
        while dj <= base * (2.0 ** lvl):
            lvl -= 1
        while dj > base * (2.0 ** (lvl + 1)):
            lvl += 1
        if lvl < 1:
            rem.append(j)
        else:
            buckets.setdefault(lvl, []).append(j)
    return DistanceBuckets(
        buckets={l: np.array(js, dtype=np.int64) for l, js in sorted(buckets.items())},
        remainder=np.array(rem, dtype=np.int64),
        distances=d,
    )


class ParetoBoundCheck(NamedTuple):
    lhs: float              # pareto gap of x
    rhs: float              # sum of distances over decided disagreements
    holds: bool             # lhs >= rhs - 1e-7
    reduced_cost_sum: float # same sum with |r_j|; equals lhs for exact duals


def pareto_distance_bound(inst: PackingInstance, x, p: PartialSolution) -> ParetoBoundCheck:
    """Check that disagreement distances lower-bound the pareto gap.

    ``rhs`` sums hyperplane distances over the decided coordinates where x
    differs from the assignment; since each distance is |r_j| shrunk by the
    normal's length, ``reduced_cost_sum`` dominates rhs and equals lhs
    exactly when p came from an optimal dual of x's own slice.
    """
    x = np.asarray(x).reshape(-1).astype(np.int8)
    lhs = _oracle.pareto_gap(inst, x)
    mism = (p.assignment != STAR) & (x != p.assignment)
    rhs = float(p.distances()[mism].sum())
    rc = float(np.abs(p.reduced_costs[mism]).sum())
    return ParetoBoundCheck(lhs=lhs, rhs=rhs, holds=lhs >= rhs - 1e-7, reduced_cost_sum=rc)


def disagreement_budget(inst: PackingInstance, ip_gap: float) -> float:
    """The flip budget C = ip_gap * n / log n (zero when the gap is zero)."""
    return max(float(ip_gap), 0.0) * inst.n / math.log(inst.n)


def disagreement_caps(inst: PackingInstance, x, p: PartialSolution, ip_gap: float) -> bool:
    """Per-band disagreement caps for a good point.

    A point whose pareto gap is within ``ip_gap`` can differ from the
    assignment on at most ``ceil(C / 2^l)`` columns of band l, where
    ``C = ip_gap * n / log n``. Returns True iff every band obeys its cap.
    """
    x = np.asarray(x).reshape(-1).astype(np.int8)
    C = disagreement_budget(inst, ip_gap)
    bands = bucketize(p, inst)
    for lvl, idx in bands.buckets.items():
        disagreements = int(np.sum(x[idx] != p.assignment[idx]))
        if disagreements > math.ceil(C / (2.0 ** lvl)):
            return False
    return True


class CountingBoundCheck(NamedTuple):
    bound: int
    census_count: int
    holds: bool


def counting_bound(inst: PackingInstance, cells, ip_gap: float,
                   census: "_oracle.CensusReport | None" = None) -> CountingBoundCheck:
    """Upper-bound the good set by summing flip patterns over the cells.

    Each cell contributes ``2^{|remainder|} * prod_l C(|band_l|, <= ceil(C/2^l))``
    with the product over ``1 <= l <= ceil(log2 C)``; beyond that level the
    cap is below one, so no flips are allowed there. With ip_gap == 0 the
    factor collapses to ``2^{|remainder|}``. The census count is taken from
    ``census`` if given, else recomputed.
    """
    report = census if census is not None else _oracle.good_set(inst)
    C = disagreement_budget(inst, ip_gap)
    top = math.ceil(math.log2(C)) if C > 1.0 else 0
    bound = 0
    for p in cells:
        bands = bucketize(p, inst)
        factor = 1 << int(bands.remainder.size)
        for lvl in range(1, top + 1):
            size = int(bands.buckets.get(lvl, np.empty(0)).size)
            cap = math.ceil(C / (2.0 ** lvl))
            factor *= _oracle.comb_le(size, cap)
        bound += factor
    return CountingBoundCheck(bound=bound, census_count=report.good_count,
                              holds=report.good_count <= bound)


def column_points(inst: PackingInstance) -> np.ndarray:
    """The n points (c_j, A^j) in R^(m+1) whose geometry the slabs measure."""
    return np.ascontiguousarray(np.vstack([inst.c, inst.A]).T)


@dataclass(frozen=True)
class SlabReport:
    u: np.ndarray
    w: float
    count: int
    bound: float          # 60 * n * w * k
    within_bound: bool


def slab_count(points, u, w: float) -> SlabReport:
    """Count points within distance w of the hyperplane through 0 normal to u.

    ``u`` must be unit length to 1e-9; the slab is closed:
    ``|<u, y>| <= w``. The reported bound ``60 n w k`` is the uniform bound
    that random instances respect with failure probability at most 1/n.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError("points must be a 2-d array (one point per row)")
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    if points.shape[1] != u.shape[0]:
        raise ValueError(
            f"dimension mismatch: points in R^{points.shape[1]}, u in R^{u.shape[0]}"
        )
    norm = float(np.linalg.norm(u))
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"u must be a unit vector; |u| = {norm}")
    if w < 0:
        raise ValueError("slab width must be nonnegative")
    n, k = points.shape
    count = int(np.sum(np.abs(points @ u) <= w))
    bound = 60.0 * n * w * k
    return SlabReport(u=u.copy(), w=float(w), count=count, bound=bound,
                      within_bound=count <= bound)


class VolumeCheck(NamedTuple):
    estimate: float
    bound: float     # 2 * sqrt(2) * w
    passed: bool     # estimate <= bound + 3 * stderr
    stderr: float


def slab_volume_check(k: int, u, w: float, samples: int = 200_000,
                      seed: int = 0) -> VolumeCheck:
    """Monte-Carlo check that a slab's share of the unit cube is at most
    ``2 sqrt(2) w`` (max cube cross-section sqrt(2), thickness 2w)."""
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    if u.shape != (k,):
        raise ValueError(f"u has shape {u.shape}, expected {(k,)}")
    norm = float(np.linalg.norm(u))
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"u must be a unit vector; |u| = {norm}")
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    chunk = 100_000
    while done < samples:
        take = min(chunk, samples - done)
        pts = rng.random((take, k))
        hits += int(np.sum(np.abs(pts @ u) <= w))
        done += take
    est = hits / samples
    stderr = math.sqrt(max(est * (1.0 - est), 0.0) / samples)
    bound = 2.0 * math.sqrt(2.0) * w
    return VolumeCheck(estimate=est, bound=bound,
                       passed=est <= bound + 3.0 * stderr, stderr=stderr)
