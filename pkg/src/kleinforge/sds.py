"""Event-driven spiking dynamical systems.

Nodes are excitable and refractory: a spike arriving at a ready node fires it
instantly, sending spikes down every out-edge with that edge's transit time.
A node that fired at ``t`` ignores arrivals until ``t + delta``.

Event order is the tuple (arrival time, destination node, edge id); among
simultaneous arrivals at one node the lowest edge id fires it and the rest
fall inside the refractory window. An arrival exactly ``delta`` after the
last firing fires the node.
"""
from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from kleinforge.rng import Xoshiro256

DEFAULT_TRANSIT = (0.5, 1.5)
DEFAULT_BURN_IN = 1500


class GenerationExhausted(RuntimeError):
    pass


class InsufficientSpikes(ValueError):
    pass


class InvalidNet(ValueError):
    pass


@dataclass(frozen=True)
class DiGraph:
    n: int
    edges: tuple[tuple[int, int], ...]
    seed: int
    tries: int

    @property
    def density(self) -> float:
        return len(self.edges) / (self.n * (self.n - 1))

    def adjacency(self) -> csr_matrix:
        src = [s for s, _ in self.edges]
        dst = [d for _, d in self.edges]
        return csr_matrix((np.ones(len(self.edges)), (src, dst)), shape=(self.n, self.n))

    def diameter(self) -> int:
        d = shortest_path(self.adjacency(), unweighted=True, directed=True)
        return int(np.max(d)) if np.all(np.isfinite(d)) else -1


def strongly_connected(n: int, edges) -> bool:
    if n == 1:
        return True
    g = DiGraph(n, tuple(edges), 0, 0).adjacency()
    return connected_components(g, directed=True, connection="strong")[0] == 1


def generate_graph(n: int, density: float, seed: int, max_tries: int = 1000) -> DiGraph:
    """Independent edges with probability ``density``, resampled until strongly connected."""
    if n < 2:
        raise ValueError("need at least two nodes")
    if not 0.0 < density <= 1.0:
        raise ValueError("density must be in (0, 1]")
    rng = Xoshiro256(seed)
    for attempt in range(1, max_tries + 1):
        edges = tuple((i, j) for i in range(n) for j in range(n) if i != j and rng.random() < density)
        if strongly_connected(n, edges):
            return DiGraph(n, edges, seed, attempt)
    raise GenerationExhausted(f"no strongly connected graph after {max_tries} tries")


@dataclass(frozen=True)
class SpikeNet:
    n: int
    edges: tuple[tuple[int, int, float], ...]
    delta: float
    seeds: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.delta <= 0:
            raise InvalidNet("refractory period must be positive")
        for s, d, tau in self.edges:
            if s == d:
                raise InvalidNet(f"self-loop at node {s}")
            if not tau > 0:
                raise InvalidNet(f"edge {s}->{d} has non-positive transit time")
            if not (0 <= s < self.n and 0 <= d < self.n):
                raise InvalidNet(f"edge {s}->{d} out of range")
        if not strongly_connected(self.n, [(s, d) for s, d, _ in self.edges]):
            raise InvalidNet("network must be strongly connected")

    @classmethod
    def from_graph(cls, graph: DiGraph, delta: float, transit_seed: int,
                   transit_range: tuple[float, float] = DEFAULT_TRANSIT) -> "SpikeNet":
        rng = Xoshiro256(transit_seed)
        lo, hi = transit_range
        edges = tuple((s, d, rng.uniform(lo, hi)) for s, d in graph.edges)
        seeds = {"graph": graph.seed, "transit": transit_seed, "transit_range": list(transit_range)}
        return cls(graph.n, edges, float(delta), seeds)

    def scaled(self, s: float) -> "SpikeNet":
        return SpikeNet(self.n, tuple((a, b, tau * s) for a, b, tau in self.edges), self.delta * s, dict(self.seeds))

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [[s, d, tau] for s, d, tau in self.edges], "delta": self.delta, "seeds": self.seeds}

    @classmethod
    def from_dict(cls, d: dict) -> "SpikeNet":
        return cls(int(d["n"]), tuple((int(s), int(t), float(tau)) for s, t, tau in d["edges"]), float(d["delta"]), d.get("seeds", {}))

    @classmethod
    def from_json(cls, path) -> "SpikeNet":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class SpikeRecord:
    times: list[np.ndarray]  # per node, ascending
    trace: list[tuple[float, int, int]] | None = None  # (time, node, causing edge id or -1)

    def pairs(self):
        """(node, time) for every firing, ordered by time then node."""
        rows = [(float(t), node) for node, ts in enumerate(self.times) for t in ts]
        return [(node, t) for t, node in sorted(rows)]


def simulate(net: SpikeNet, kick: int = 0, observe: int = 0, max_time: float | None = None,
             max_spikes: int | None = None, trace: bool = False) -> SpikeRecord:
    """Run the network from a single firing of ``kick`` at t = 0.

    Stops when ``observe`` has fired ``max_spikes`` times, when the next event
    is later than ``max_time``, or when activity dies out.
    """
    if max_time is None and max_spikes is None:
        raise ValueError("give max_time and/or max_spikes")
    if not (0 <= kick < net.n and 0 <= observe < net.n):
        raise ValueError("kick/observe node out of range")
    out_edges: list[list[tuple[int, int, float]]] = [[] for _ in range(net.n)]
    for eid, (s, d, tau) in enumerate(net.edges):
        out_edges[s].append((eid, d, tau))
    delta = net.delta
    last = [None] * net.n
    times: list[list[float]] = [[] for _ in range(net.n)]
    log = [] if trace else None
    queue: list[tuple[float, int, int]] = []

    def fire(t, node, cause):
        last[node] = t
        times[node].append(t)
        if log is not None:
            log.append((t, node, cause))
        for eid, d, tau in out_edges[node]:
            heapq.heappush(queue, (t + tau, d, eid))

    fire(0.0, kick, -1)
    while queue:
        if max_spikes is not None and len(times[observe]) >= max_spikes:
            break
        t, node, eid = heapq.heappop(queue)
        if max_time is not None and t > max_time:
            break
        prev = last[node]
        # same subtraction as the ISIs, so every recorded ISI is >= delta exactly
        if prev is None or t - prev >= delta:
            fire(t, node, eid)
    return SpikeRecord([np.asarray(ts) for ts in times], log)


@dataclass(frozen=True)
class ISISequence:
    node: int
    intervals: np.ndarray
    burn_in_discarded: int


def extract_isi(record: SpikeRecord, node: int, burn_in: int = DEFAULT_BURN_IN) -> ISISequence:
    ts = np.asarray(record.times[node], dtype=float)
    isi = np.diff(ts)[burn_in:]
    if isi.size == 0:
        raise InsufficientSpikes(f"node {node} fired {ts.size} times; need more than {burn_in + 1}")
    return ISISequence(node, isi, burn_in)


def detect_period(isi, tol: float = 1e-9) -> int | None:
    """Smallest period of the trailing half of an ISI sequence, or None.

    A candidate ``p`` (at most half the full length) must satisfy
    ``|isi[k] - isi[k + p]| <= tol`` throughout the trailing half, with at
    least one comparison.
    """
    seq = np.asarray(isi.intervals if isinstance(isi, ISISequence) else isi, dtype=float)
    if seq.size < 4:
        raise ValueError("need at least 4 intervals")
    tail = seq[seq.size // 2:]
    for p in range(1, seq.size // 2 + 1):
        if p >= tail.size:
            break
        if np.all(np.abs(tail[:-p] - tail[p:]) <= tol):
            return p
    return None


def write_spikes_csv(record: SpikeRecord, path):
    with open(path, "w") as fh:
        for node, t in record.pairs():
            fh.write(f"{node},{t!r}\n")


def read_spikes_csv(path, n: int | None = None) -> SpikeRecord:
    rows = [line.split(",") for line in Path(path).read_text().splitlines() if line.strip() and not line.startswith("#")]
    nodes = [int(r[0]) for r in rows]
    n = n if n is not None else (max(nodes) + 1 if nodes else 0)
    times: list[list[float]] = [[] for _ in range(n)]
    for r in rows:
        times[int(r[0])].append(float(r[1]))
    return SpikeRecord([np.sort(np.asarray(ts)) for ts in times])
