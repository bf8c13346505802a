"""
Streamlines on the Klein bottle
===============================

RK4 runs in the covering plane; samples are folded into the unit square for
plotting. Trajectories from symmetric seeds are images of each other.
"""
import sys
from pathlib import Path

import numpy as np

from kleinforge import fields, flow
from kleinforge import space as ks

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)

K = ks.standard_klein()
V = fields.focus_field()
trajs = flow.streamline_grid(V, K, grid_density=6, step=1e-2, n_steps=800, record_every=10)
flow.write_csv(trajs, out / "focus_streamlines.csv", K)
print(f"{len(trajs)} streamlines written to {out / 'focus_streamlines.csv'}")
# distance in the quotient, so x = 0.999 counts as next to x = 0
gaps = [K.quotient_distance((t.folded[-1, :1], t.folded[-1, 1:]), ([0.0], [0.5])) for t in trajs]
print("largest distance of an end point from the focus (0, 1/2):", max(gaps))

# equivariance: start from g.seed and compare with g applied to the trajectory
g = ks.GroupElement((1,), (1,))
seed = np.array([0.2, 0.3])
a = flow.integrate(V, K, seed, step=1e-2, n_steps=500)
gx, gy = K.act(g, seed[:1], seed[1:])
b = flow.integrate(V, K, np.concatenate([gx, gy]), step=1e-2, n_steps=500)
mx, my = K.act(g, a.lifted[:, :1], a.lifted[:, 1:])
print("equivariance error:", np.max(np.abs(np.c_[mx, my] - b.lifted)))
