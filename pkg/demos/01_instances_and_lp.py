"""Generate a random packing instance, save/load it, and inspect its LP
relaxation and dual prices."""

import io

import numpy as np

from bbpack import FixedSets, generate, load, save, solve_lp, solve_eq_lp

inst = generate(m=2, n=10, beta=(0.25, 0.35), seed=7)
print("instance: m =", inst.m, "n =", inst.n, "b =", inst.b)

# the text format round-trips bit for bit
buf = io.StringIO()
save(inst, buf)
print("\nfirst lines of the file format:")
print("\n".join(buf.getvalue().splitlines()[:4]))
buf.seek(0)
assert load(buf).same_data(inst)

sol = solve_lp(inst)
print("\nLP optimum:", sol.value)
print("solution:", np.round(sol.x, 4))
print("fractional coordinates:", sol.fractional, "(never more than m =", str(inst.m) + ")")
print("row prices lambda:", np.round(sol.lam, 4))

# dual identity: value = <lambda, b> + sum of upper-bound prices
print("duality residual:", sol.value - (sol.lam @ inst.b + sol.mu.sum()))

# fixing variables shrinks the relaxation
fixed = FixedSets(j0=frozenset({0}), j1=frozenset({1}))
print("\nwith x0 = 0 and x1 = 1 forced:", solve_lp(inst, fixed).value)

# the equality-slice variant optimizes over Ax = b' instead of Ax <= b
x = np.zeros(10)
x[3] = 1.0
print("slice through a unit vector:", solve_eq_lp(inst, inst.A @ x).value,
      "vs its own objective", float(inst.c @ x))
