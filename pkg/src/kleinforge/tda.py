"""Point clouds from ISI sequences: window embedding, 2NN dimension, Rips persistence."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist, squareform

MAX_RIPS_POINTS = 400


class SequenceTooShort(ValueError):
    pass


class DegenerateCloud(ValueError):
    pass


class CloudTooLarge(ValueError):
    pass


@dataclass
class PointCloud:
    points: np.ndarray  # (n, W)
    window: int | None = None
    dedup_tol: float | None = None
    source: str = ""

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class DimensionEstimate:
    d_hat: float
    n_used: int
    method: str
    discard_fraction: float


@dataclass
class PersistenceDiagram:
    degree: int
    pairs: list[tuple[float, float]] = field(default_factory=list)

    def persistences(self) -> np.ndarray:
        return np.array([d - b for b, d in self.pairs], dtype=float)


def _as_points(cloud) -> np.ndarray:
    pts = cloud.points if isinstance(cloud, PointCloud) else cloud
    pts = np.asarray(pts, dtype=float)
    return pts[:, None] if pts.ndim == 1 else pts


# embedding

def window_embed(seq, W: int, dedup_tol: float = 0.0, source: str = "") -> PointCloud:
    """Sliding windows of length W; drops any window within dedup_tol of an earlier kept one."""
    seq = np.asarray(seq, dtype=float).ravel()
    if W < 1:
        raise ValueError("window length must be >= 1")
    if seq.size < W:
        raise SequenceTooShort(f"sequence of length {seq.size} is shorter than the window {W}")
    windows = np.lib.stride_tricks.sliding_window_view(seq, W)
    if dedup_tol < 0:
        raise ValueError("dedup tolerance must be non-negative")
    keep: list[int] = []
    tree_pts: list[np.ndarray] = []
    # exact dedup is cheap via hashing; the tolerant path checks against kept points
    if dedup_tol == 0:
        seen = set()
        for i, w in enumerate(windows):
            key = w.tobytes()
            if key not in seen:
                seen.add(key)
                keep.append(i)
    else:
        for i, w in enumerate(windows):
            if tree_pts:
                kept = np.asarray(tree_pts)
                if np.min(np.linalg.norm(kept - w, axis=1)) <= dedup_tol:
                    continue
            tree_pts.append(w)
            keep.append(i)
    return PointCloud(np.array(windows[keep]), W, dedup_tol, source)


# 2NN

def two_nn_ratios(cloud) -> np.ndarray:
    """mu_i = r2 / r1 for every point (ties broken by index through the KD query)."""
    pts = _as_points(cloud)
    if pts.shape[0] < 3:
        raise DegenerateCloud("need at least three points")
    dist, _ = cKDTree(pts).query(pts, k=3)
    r1, r2 = dist[:, 1], dist[:, 2]
    if np.any(r1 == 0):
        raise DegenerateCloud("duplicate points: a nearest-neighbour distance is zero")
    return r2 / r1


def dim_2nn(cloud, discard_fraction: float = 0.1, method: str = "mle") -> DimensionEstimate:
    """Intrinsic dimension from nearest-neighbour distance ratios.

    ``mle`` treats the discarded largest ratios as right-censored at the
    largest kept ratio, which keeps the Pareto likelihood unbiased. ``cdf_fit``
    regresses ``-ln(1 - F)`` on ``ln mu`` through the origin over the kept ratios.
    """
    if not 0.0 <= discard_fraction < 1.0:
        raise ValueError("discard_fraction must lie in [0, 1)")
    pts = _as_points(cloud)
    if pts.shape[0] < 10:
        raise DegenerateCloud("need at least 10 points")
    mu = np.sort(two_nn_ratios(pts))
    n = mu.size
    n_used = n - int(math.floor(discard_fraction * n))
    logs = np.log(mu)
    if method == "mle":
        denom = logs[:n_used].sum() + (n - n_used) * logs[n_used - 1]
    elif method == "cdf_fit":
        i = np.arange(1, n_used + 1)
        x = logs[:n_used]
        yv = -np.log(1.0 - i / n)
        sxx = float(np.dot(x, x))
        if sxx <= 0:
            raise DegenerateCloud("all distance ratios equal one")
        return DimensionEstimate(float(np.dot(x, yv) / sxx), n_used, method, discard_fraction)
    else:
        raise ValueError(f"unknown method {method!r}")
    if denom <= 0:
        raise DegenerateCloud("all distance ratios equal one")
    return DimensionEstimate(float(n_used / denom), n_used, method, discard_fraction)


def dimension_profile(isi, W_range, dedup_tol: float = 0.0, discard_fraction: float = 0.1,
                      method: str = "mle") -> list[tuple[int, float, int]]:
    seq = getattr(isi, "intervals", isi)
    rows = []
    for W in W_range:
        cloud = window_embed(seq, W, dedup_tol)
        est = dim_2nn(cloud, discard_fraction, method)
        rows.append((int(W), est.d_hat, len(cloud)))
    return rows


# Rips persistence

class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i


def _edges(dm: np.ndarray, r_max: float):
    n = dm.shape[0]
    iu, ju = np.triu_indices(n, 1)
    w = dm[iu, ju]
    mask = w <= r_max
    iu, ju, w = iu[mask], ju[mask], w[mask]
    order = np.lexsort((ju, iu, w))
    return [(float(w[k]), int(iu[k]), int(ju[k])) for k in order]


def h0_union_find(dm: np.ndarray, r_max: float) -> PersistenceDiagram:
    n = dm.shape[0]
    uf = _UnionFind(n)
    pairs = []
    # all vertices are born at 0 so the elder rule reduces to keeping the smaller root
    for w, i, j in _edges(dm, r_max):
        a, b = uf.find(i), uf.find(j)
        if a == b:
            continue
        if a > b:
            a, b = b, a
        uf.parent[b] = a
        if w > 0:
            pairs.append((0.0, w))
    roots = {uf.find(i) for i in range(n)}
    pairs.extend((0.0, math.inf) for _ in roots)
    return PersistenceDiagram(0, sorted(pairs, key=lambda p: (p[1], p[0])))


def _reduce(columns: list[int]) -> list[int]:
    """Standard GF(2) column reduction; returns the low index of each reduced column (-1 if zero)."""
    low_owner: dict[int, int] = {}
    lows = []
    cols = list(columns)
    for j, c in enumerate(cols):
        while c:
            low = c.bit_length() - 1
            k = low_owner.get(low)
            if k is None:
                low_owner[low] = j
                break
            c ^= cols[k]
        cols[j] = c
        lows.append(c.bit_length() - 1 if c else -1)
    return lows


def _filtration(dm: np.ndarray, r_max: float, max_dim: int):
    """Simplices of the Rips complex up to ``max_dim`` in filtration order."""
    n = dm.shape[0]
    simplices = [(0.0, 0, (i,)) for i in range(n)]
    edges = _edges(dm, r_max)
    simplices += [(w, 1, (i, j)) for w, i, j in edges]
    if max_dim >= 2:
        adj = [set() for _ in range(n)]
        for _, i, j in edges:
            adj[i].add(j)
            adj[j].add(i)
        for _, i, j in edges:
            for k in adj[i] & adj[j]:
                if k > j:
                    w = max(dm[i, j], dm[i, k], dm[j, k])
                    simplices.append((float(w), 2, (i, j, k)))
    simplices.sort(key=lambda s: (s[0], s[1], s[2]))
    return simplices


def rips_persistence(cloud, r_max: float, max_degree: int = 1,
                     max_points: int = MAX_RIPS_POINTS) -> list[PersistenceDiagram]:
    """Degree-0 and degree-1 Rips persistence over GF(2), truncated at ``r_max``.

    Bars of zero length are dropped; classes alive at ``r_max`` get death inf.
    """
    pts = _as_points(cloud)
    if pts.shape[0] > max_points:
        raise CloudTooLarge(f"{pts.shape[0]} points exceeds the cap of {max_points}")
    if not r_max > 0:
        raise ValueError("r_max must be positive")
    if max_degree not in (0, 1):
        raise ValueError("max_degree must be 0 or 1")
    dm = squareform(pdist(pts)) if pts.shape[0] > 1 else np.zeros((pts.shape[0],) * 2)
    out = [h0_union_find(dm, r_max)]
    if max_degree >= 1:
        out.append(_h1_reduction(dm, r_max))
    return out


def _triangle_table(dm: np.ndarray, r_max: float):
    """Filtration values of all Rips triangles in order, and a rank lookup keyed by vertex triple.

    A triple i < j < k is keyed by the combinatorial number C(k,3) + C(j,2) + i.
    """
    n = dm.shape[0]
    if n < 3:
        return np.zeros(0), np.full(1, -1, dtype=np.int64)
    i, j, k = _triples(n)
    w = np.maximum(np.maximum(dm[i, j], dm[i, k]), dm[j, k])
    mask = w <= r_max
    i, j, k, w = i[mask], j[mask], k[mask], w[mask]
    order = np.lexsort((k, j, i, w))
    lookup = np.full(_tri_key(n - 3, n - 2, n - 1) + 1, -1, dtype=np.int64)
    lookup[_tri_key(i, j, k)[order]] = np.arange(order.size)
    return w[order], lookup


def _triples(n: int):
    """All vertex triples i < j < k, grouped by k."""
    parts = []
    for c in range(2, n):
        a, b = np.triu_indices(c, 1)
        parts.append((a, b, np.full(a.size, c)))
    return tuple(np.concatenate([p[q] for p in parts]).astype(np.int64) for q in range(3))


def _tri_key(i, j, k):
    return k * (k - 1) * (k - 2) // 6 + j * (j - 1) // 2 + i


def _h1_reduction(dm: np.ndarray, r_max: float) -> PersistenceDiagram:
    """Degree-1 pairs by reducing the coboundary matrix (edges in reverse order).

    Edges that merge components cannot create cycles and are skipped (clearing).
    Columns are sorted arrays of triangle ranks and the pivot is the earliest
    triangle. Most columns need no additions; the rest are reduced in a dense
    boolean work vector, since loop-carrying columns can fill in heavily.
    """
    n = dm.shape[0]
    edges = _edges(dm, r_max)
    uf = _UnionFind(n)
    negative = set()
    for idx, (_, i, j) in enumerate(edges):
        a, b = uf.find(i), uf.find(j)
        if a != b:
            uf.parent[max(a, b)] = min(a, b)
            negative.add(idx)
    tri_w, lookup = _triangle_table(dm, r_max)
    within = dm <= r_max
    owner: dict[int, np.ndarray] = {}
    pairs = []
    work = None
    for idx in range(len(edges) - 1, -1, -1):
        if idx in negative:
            continue
        w, i, j = edges[idx]
        ks = np.nonzero(within[i] & within[j])[0]
        ks = ks[(ks != i) & (ks != j)]
        trip = np.sort(np.stack([np.full(ks.size, i), np.full(ks.size, j), ks], axis=1), axis=1)
        col = np.sort(lookup[_tri_key(trip[:, 0], trip[:, 1], trip[:, 2])])
        piv = int(col[0]) if col.size else -1
        if piv >= 0 and piv in owner:
            if work is None:
                work = np.zeros(tri_w.size, dtype=bool)
            work[col] = True
            while piv >= 0 and piv in owner:
                work[owner[piv]] ^= True
                # additions only remove the current pivot, so scan forward from it
                step = int(np.argmax(work[piv:]))
                piv = piv + step if work[piv + step] else -1
            col = np.flatnonzero(work) if piv >= 0 else col[:0]
            work[col] = False
        if piv < 0:
            pairs.append((w, math.inf))
            continue
        owner[piv] = col
        death = float(tri_w[piv])
        if death > w:
            pairs.append((w, death))
    return PersistenceDiagram(1, sorted(pairs, key=lambda p: (p[0], p[1])))


def h0_matrix_reduction(cloud, r_max: float) -> PersistenceDiagram:
    """Degree-0 diagram from reducing the edge boundary matrix (cross-check for union-find)."""
    pts = _as_points(cloud)
    n = pts.shape[0]
    dm = squareform(pdist(pts)) if n > 1 else np.zeros((n, n))
    edges = _edges(dm, r_max)
    lows = _reduce([(1 << i) | (1 << j) for _, i, j in edges])
    pairs = [(0.0, edges[e][0]) for e, low in enumerate(lows) if low >= 0 and edges[e][0] > 0]
    n_inf = n - sum(1 for low in lows if low >= 0)
    pairs.extend((0.0, math.inf) for _ in range(n_inf))
    return PersistenceDiagram(0, sorted(pairs, key=lambda p: (p[1], p[0])))


def euler_characteristic(cloud, r: float) -> int:
    """V - E + T of the Rips 2-skeleton at scale r."""
    pts = _as_points(cloud)
    dm = squareform(pdist(pts)) if pts.shape[0] > 1 else np.zeros((pts.shape[0],) * 2)
    counts = [0, 0, 0]
    for _, d, _ in _filtration(dm, r, 2):
        counts[d] += 1
    return counts[0] - counts[1] + counts[2]


def betti_at(diagrams: list[PersistenceDiagram], r: float) -> list[int]:
    return [sum(1 for b, d in dg.pairs if b <= r < d) for dg in diagrams]


def write_diagrams_csv(diagrams: list[PersistenceDiagram], path):
    with open(path, "w") as fh:
        fh.write("degree,birth,death\n")
        for dg in diagrams:
            for b, d in dg.pairs:
                fh.write(f"{dg.degree},{b!r},{'inf' if math.isinf(d) else repr(d)}\n")


def read_cloud_csv(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", comments="#", ndmin=2))
