"""Exhaustive ground truth for small instances.

Everything here enumerates all of {0,1}^n, so it is capped (n <= 25 for the
IP optimum, n <= 20 for the census) and exists to certify the solver and the
tree-size bound rather than to scale. The census classifies each 0/1 point x
by its pareto gap

    pareto(x) = (max <c,y> : Ay = Ax, y in [0,1]^n) - <c,x>,

the shortfall of x against the best point of its own occupancy slice. The
good set G collects the points whose gap is at most the instance's
integrality gap; a completed best-bound tree can visit at most
``2 * |G| * sum_{k<=m} C(n,k) + 1`` nodes, and every branched node's LP
vertex must agree with some good point outside its fractional coordinates,
injectively. Both facts are checked here against recorded trees.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from . import lp as _lp
from .instance import PackingInstance

IP_CAP = 25
CENSUS_CAP = 20
GOOD_TOL = 1e-9
_CHUNK_BITS = 16


def comb_le(n: int, m: int) -> int:
    """Number of index subsets of [n] of size at most m."""
    return sum(math.comb(n, k) for k in range(min(n, m) + 1))


def ip_opt(inst: PackingInstance, cap: int = IP_CAP):
    """Exact IP optimum by enumeration. Returns (value, x as int8 array).

    Refuses n beyond ``cap``; ties resolve to the first maximizer in integer
    enumeration order (variable j is bit j).
    """
    n = inst.n
    if n > cap:
        raise ValueError(
            f"refusing exhaustive enumeration: n={n} exceeds the cap {cap}"
        )
    A, b, c = inst.A, inst.b, inst.c
    bits_per_chunk = min(_CHUNK_BITS, n)
    cols = np.arange(n, dtype=np.uint64)
    best_val = -np.inf
    best_x = None
    for start in range(0, 1 << n, 1 << bits_per_chunk):
        count = min(1 << bits_per_chunk, (1 << n) - start)
        ints = np.arange(start, start + count, dtype=np.uint64)
        X = ((ints[:, None] >> cols) & 1).astype(np.float64)
        feasible = np.all(X @ A.T <= b + 1e-9, axis=1)
        if not np.any(feasible):
            continue
        vals = X @ c
        vals[~feasible] = -np.inf
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val = float(vals[k])
            best_x = X[k].astype(np.int8)
    if best_x is None:
        raise ValueError("no feasible 0/1 point (negative capacity?)")
    return best_val, best_x


def pareto_gap(inst: PackingInstance, x) -> float:
    """Slice shortfall of one 0/1 point: LP over {Ay = Ax} minus <c, x>."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape != (inst.n,):
        raise ValueError(f"x has shape {x.shape}, expected {(inst.n,)}")
    sol = _lp.solve_eq_lp(inst, inst.A @ x)
    if sol.status != "optimal":
        raise _lp.LpError("slice through a box point reported infeasible")
    return sol.value - float(inst.c @ x)


@dataclass
class CensusReport:
    """Everything the good-solution census establishes about one instance."""

    m: int
    n: int
    ip_opt: float
    lp_opt: float
    ip_gap: float
    good_points: np.ndarray  # (count, n) int8, lexicographically sorted
    good_count: int
    theorem_bound: int
    observed_nodes: int | None = None
    bound_satisfied: bool | None = None

    def to_json(self) -> str:
        payload = {
            "m": self.m,
            "n": self.n,
            "ip_opt": self.ip_opt,
            "lp_opt": self.lp_opt,
            "ip_gap": self.ip_gap,
            "good_count": self.good_count,
            "good_points": ["".join(str(int(v)) for v in row) for row in self.good_points],
            "theorem_bound": self.theorem_bound,
            "observed_nodes": self.observed_nodes,
            "bound_satisfied": self.bound_satisfied,
        }
        return json.dumps(payload, sort_keys=True)


def good_set(inst: PackingInstance, cap: int = CENSUS_CAP) -> CensusReport:
    """Census of the good set: every x in {0,1}^n with
    ``pareto(x) <= ip_gap + 1e-9``.

    Enumeration follows the binary reflected Gray code so the occupancy
    vector updates by one column per step; it is refreshed periodically to
    cap drift. One equality LP is solved per point, which dominates the cost.
    """
    n = inst.n
    if n > cap:
        raise ValueError(f"refusing census: n={n} exceeds the cap {cap}")
    ip_val, _ = ip_opt(inst, cap=max(cap, IP_CAP))
    lp_val = _lp.lp_value(inst)
    gap = lp_val - ip_val
    threshold = gap + GOOD_TOL

    A, c = inst.A, inst.c
    x = np.zeros(n, dtype=np.int8)
    ax = np.zeros(inst.m, dtype=np.float64)
    cx = 0.0
    good = []

    def check():
        sol = _lp.solve_eq_lp(inst, np.maximum(ax, 0.0))
        if sol.value - cx <= threshold:
            good.append(x.copy())

    check()
    for i in range(1, 1 << n):
        j = (i & -i).bit_length() - 1
        if x[j]:
            x[j] = 0
            ax -= A[:, j]
            cx -= float(c[j])
        else:
            x[j] = 1
            ax += A[:, j]
            cx += float(c[j])
        if i % 1024 == 0:
            ax = A @ x.astype(np.float64)
            cx = float(c @ x)
        check()

    good_arr = np.array(sorted(map(tuple, good)), dtype=np.int8).reshape(len(good), n)
    bound = 2 * len(good) * comb_le(n, inst.m) + 1
    return CensusReport(
        m=inst.m,
        n=n,
        ip_opt=ip_val,
        lp_opt=lp_val,
        ip_gap=gap,
        good_points=good_arr,
        good_count=len(good),
        theorem_bound=bound,
    )


def verify_tree_bound(inst: PackingInstance, result, census: CensusReport | None = None,
                      cap: int = CENSUS_CAP) -> CensusReport:
    """Census the instance and record whether a recorded tree fits the bound."""
    report = census if census is not None else good_set(inst, cap=cap)
    report.observed_nodes = result.node_count
    report.bound_satisfied = result.node_count <= report.theorem_bound
    return report


def verify_branch_association(inst: PackingInstance, result,
                              census: CensusReport | None = None,
                              cap: int = CENSUS_CAP) -> bool:
    """Check the tree-bound counting argument node by node.

    Every branched node's LP vertex must coincide with some good point
    outside its fractional coordinates, and the (good point, fractional set)
    pairs must be assignable injectively across branched nodes. Existence is
    decided by maximum bipartite matching: True iff every branched node is
    matched.
    """
    report = census if census is not None else good_set(inst, cap=cap)
    branched = [node for node in result.tree if node.status == "branched"]
    if not branched:
        return True
    good_rows = {row.tobytes(): k for k, row in enumerate(report.good_points)}

    pair_ids: dict = {}
    rows, cols = [], []
    for r, node in enumerate(branched):
        sol = node.lp
        if sol.x is None:
            raise ValueError(
                "tree was recorded without LP vectors; rerun with keep_solutions=True"
            )
        frac = sol.fractional
        base = np.rint(sol.x).astype(np.int8)
        matched_any = False
        for mask in range(1 << len(frac)):
            cand = base.copy()
            for pos, j in enumerate(frac):
                cand[j] = (mask >> pos) & 1
            k = good_rows.get(cand.tobytes())
            if k is None:
                continue
            key = (k, frac)
            pid = pair_ids.setdefault(key, len(pair_ids))
            rows.append(r)
            cols.append(pid)
            matched_any = True
        if not matched_any:
            return False

    graph = csr_matrix(
        (np.ones(len(rows), dtype=np.int8), (rows, cols)),
        shape=(len(branched), len(pair_ids)),
    )
    match = maximum_bipartite_matching(graph, perm_type="column")
    return bool(np.all(match >= 0))
