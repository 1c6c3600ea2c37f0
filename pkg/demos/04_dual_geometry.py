"""Partial solutions from dual multipliers, the exact line arrangement for
one row, distance buckets, and the counting bound on the good set."""

import numpy as np

from bbpack import generate, good_set
from bbpack.geometry import (
    bucketize,
    counting_bound,
    dual_solution,
    enumerate_cells_1d,
    pareto_distance_bound,
    sample_cells,
)
from bbpack.lp import solve_eq_lp

inst = generate(m=1, n=9, beta=(0.3,), seed=21)

# a multiplier prices capacity; the sign of each reduced cost decides a
# variable, a vanishing one leaves a star
p = dual_solution(inst, [0.8])
print("assignment at lambda=0.8:", list(p.assignment), "(2 = star)")

cells = enumerate_cells_1d(inst)
print("exact arrangement cells:", len(cells), "(at most", 2 * inst.n + 1, ")")
sampled = sample_cells(inst, trials=2000, seed=3)
print("cells hit by 2000 sampled multipliers:", len(sampled))

# distances to the pricing hyperplane, banded dyadically
bands = bucketize(cells[4], inst)
print("\nbucket sizes:", {lvl: len(ix) for lvl, ix in bands.buckets.items()},
      "remainder:", len(bands.remainder))

# the slice dual of any 0/1 point certifies its pareto gap exactly
x = np.array([1, 0, 1, 0, 0, 1, 0, 0, 0], dtype=np.int8)
lam = solve_eq_lp(inst, inst.A @ x).lam
chk = pareto_distance_bound(inst, x, dual_solution(inst, lam))
print("\npareto gap:", round(chk.lhs, 6),
      "= sum of disagreement reduced costs:", round(chk.reduced_cost_sum, 6))
print("distance lower bound", round(chk.rhs, 6), "holds:", chk.holds)

report = good_set(inst)
cb = counting_bound(inst, cells, report.ip_gap, census=report)
print("\n|G| =", cb.census_count, "<= cell counting bound", cb.bound, ":", cb.holds)
