"""Exhaustive census of the good set and the node-count bound it implies.

A 0/1 point x is good when the LP optimum over its own slice {y : Ay = Ax}
beats <c,x> by no more than the instance's integrality gap. The solver's tree
can never have more than 2|G|(n choose <= m) + 1 nodes.
"""

import json

from bbpack import generate, good_set, solve
from bbpack.oracle import verify_branch_association, verify_tree_bound

inst = generate(m=2, n=12, beta=(0.25, 0.3), seed=5)

report = good_set(inst)
print("LP optimum: ", report.lp_opt)
print("IP optimum: ", report.ip_opt)
print("gap:        ", report.ip_gap)
print("|G| =", report.good_count, "of", 2 ** inst.n, "points")
print("node bound: ", report.theorem_bound)

res = solve(inst, var_rule="most-fractional")
report = verify_tree_bound(inst, res, census=report)
print("\nobserved nodes:", report.observed_nodes,
      "<=", report.theorem_bound, ":", report.bound_satisfied)

# each branched node is matched injectively to a (good point, coordinate set)
# pair that explains its fractional pattern
print("branch association:", verify_branch_association(inst, res, census=report))

# the whole report serializes to one JSON object
blob = json.loads(report.to_json())
print("\ncensus JSON keys:", sorted(blob))
