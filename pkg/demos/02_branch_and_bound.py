"""Walk the branch-and-bound tree of a tiny knapsack by hand, then compare
branching rules on a random instance."""

import sys

import numpy as np

from bbpack import PackingInstance, generate, solve

# two items, capacity for roughly one and a half of them
inst = PackingInstance(
    m=1, n=2,
    A=np.array([[0.6, 0.5]]),
    c=np.array([0.9, 0.5]),
    b=np.array([0.8]),
)

res = solve(inst, var_rule="first")
print("optimum", res.opt_value, "at", list(res.opt_solution))
print("tree has", res.node_count, "nodes,", res.branched_count, "branched:\n")
res.dump_tree(sys.stdout)

# the same engine on something bigger; every rule reaches the same optimum
inst = generate(m=2, n=14, beta=(0.25, 0.3), seed=99)
print("\nrandom instance, n = 14:")
for rule in ("first", "most-fractional", "random"):
    r = solve(inst, var_rule=rule, seed=1)
    print(f"  {rule:16s} nodes={r.node_count:4d} opt={r.opt_value:.6f}")

# an adversarial script replays any recorded branching decision sequence
rec = solve(inst, var_rule=lambda x, frac: frac[-1])
script = [j for _, j in rec.branch_sequence]
rep = solve(inst, var_rule="adversarial-replay", script=script)
print(f"  worst-index replay nodes={rep.node_count:4d} opt={rep.opt_value:.6f}")
print("\nprune reasons:", rep.prune_counts)
