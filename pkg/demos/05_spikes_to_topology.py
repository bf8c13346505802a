"""
From spikes to point clouds
===========================

A random strongly connected network is kicked once. The inter-spike
intervals of one node are embedded with sliding windows; 2NN estimates the
dimension of the cloud and Rips persistence summarises its shape.
"""
import numpy as np

from kleinforge import sds, tda

graph = sds.generate_graph(50, 0.06, seed=3)
net = sds.SpikeNet.from_graph(graph, delta=0.3, transit_seed=1003)
print(f"{len(graph.edges)} edges, diameter {graph.diameter()}, {graph.tries} tries")

rec = sds.simulate(net, kick=0, observe=0, max_spikes=800)
isi = sds.extract_isi(rec, 0, burn_in=100)
print("intervals:", isi.intervals.size, "min:", isi.intervals.min())
print("period:", sds.detect_period(isi))

# once the run settles, a period-p sequence has at most p distinct windows
tail = isi.intervals[isi.intervals.size // 2:]
for W in (2, 4, 8):
    cloud = tda.window_embed(tail, W)
    print(f"W={W}: {len(cloud)} distinct windows in the settled half")

# reference clouds: a flat torus and a noisy circle
rng = np.random.default_rng(0)
th = rng.uniform(0, 2 * np.pi, (2, 1500))
torus = np.c_[np.cos(th[0]), np.sin(th[0]), np.cos(th[1]), np.sin(th[1])]
print("\n2NN on a flat torus in R^4:", round(tda.dim_2nn(torus).d_hat, 3))

ring = np.c_[np.cos(th[0][:120]), np.sin(th[0][:120])] + 0.05 * rng.normal(size=(120, 2))
h0, h1 = tda.rips_persistence(ring, 2.0)
top = sorted(h1.persistences(), reverse=True)[:3]
print("noisy circle, largest H1 persistences:", np.round(top, 3))
