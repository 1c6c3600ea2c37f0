"""How many instance columns fall in a thin slab? Counts against the uniform
bound, plus a Monte-Carlo look at slab volume inside the unit cube."""

import math

import numpy as np

from bbpack import generate
from bbpack.geometry import column_points, slab_count, slab_volume_check

inst = generate(m=1, n=500, beta=(0.3,), seed=13)
pts = column_points(inst)  # one point (c_j, A_j) per column
print("points:", pts.shape)

base = math.log(inst.n) / inst.n
rng = np.random.default_rng(2)
g = rng.standard_normal(2)
u = g / np.linalg.norm(g)

print("\nwidth      count   bound 60nwk")
for i in range(5):
    w = base * 2.0 ** i
    rep = slab_count(pts, u, w)
    print(f"{w:.5f} {rep.count:8d} {rep.bound:10.1f}  within: {rep.within_bound}")

# a slab of half-width w cuts at most 2*sqrt(2)*w of the cube's volume,
# whatever its direction; this one slices through the cube's center
chk = slab_volume_check(k=3, u=np.array([1.0, -1.0, 0.0]) / math.sqrt(2), w=0.1,
                        samples=300_000, seed=4)
print("\nvolume estimate:", round(chk.estimate, 5),
      "bound:", round(chk.bound, 5), "passed:", chk.passed)
