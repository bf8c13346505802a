"""Independent slow reference implementations used to cross-check the library."""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np


# persistence

def dense_rips_diagrams(points, r_max):
    """Standard homology reduction over the whole 2-skeleton, simplices as Python sets.

    Returns (H0 pairs, H1 pairs), each sorted, zero-length bars removed.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    dm = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    simp = [(0.0, (i,)) for i in range(n)]
    for i, j in itertools.combinations(range(n), 2):
        if dm[i, j] <= r_max:
            simp.append((dm[i, j], (i, j)))
    for i, j, k in itertools.combinations(range(n), 3):
        w = max(dm[i, j], dm[i, k], dm[j, k])
        if w <= r_max:
            simp.append((w, (i, j, k)))
    simp.sort(key=lambda s: (s[0], len(s[1]), s[1]))
    index = {s[1]: q for q, s in enumerate(simp)}
    cols = []
    for _, s in simp:
        faces = itertools.combinations(s, len(s) - 1) if len(s) > 1 else ()
        cols.append({index[f] for f in faces})
    low_of = {}
    for j in range(len(cols)):
        c = cols[j]
        while c and max(c) in low_of:
            c = c ^ cols[low_of[max(c)]]
        cols[j] = c
        if c:
            low_of[max(c)] = j
    out = {0: [], 1: []}
    for q, (w, s) in enumerate(simp):
        if len(s) > 2 or cols[q]:
            continue
        death = simp[low_of[q]][0] if q in low_of else math.inf
        if death > w:
            out[len(s) - 1].append((float(w), float(death)))
    return sorted(out[0]), sorted(out[1])


def gf2_rank_bruteforce(rows):
    """Rank of a 0/1 matrix by counting the distinct vectors in its row span."""
    rows = [tuple(int(v) & 1 for v in r) for r in rows]
    span = {tuple(0 for _ in rows[0])} if rows else {()}
    for r in rows:
        span |= {tuple((a + b) & 1 for a, b in zip(v, r)) for v in span}
    return int(round(math.log2(len(span))))


def gf2_kernel_bruteforce(rows, ncols):
    """All x in GF(2)^ncols with M x = 0, by enumeration."""
    out = []
    for bits in itertools.product((0, 1), repeat=ncols):
        if all(sum(r[c] * bits[c] for c in range(ncols)) % 2 == 0 for r in rows):
            out.append(bits)
    return out


# switching functions

def switching_expansion(B_row, y):
    """T1, T2 by expanding prod (u_k + v_k) with u = (1 + c)/2, v = -(1 - c)/2.

    Terms with an even number of v factors are positive and go into T1; odd
    ones are negative and their magnitude goes into T2.
    """
    cs = [math.cos(math.pi * yk) for yk, b in zip(y, B_row) if b]
    t1 = 0.0
    t2 = 0.0
    for choice in itertools.product((0, 1), repeat=len(cs)):
        term = 1.0
        for c, pick in zip(cs, choice):
            term *= (1 + c) / 2 if pick == 0 else (1 - c) / 2
        if sum(choice) % 2 == 0:
            t1 += term
        else:
            t2 += term
    return t1, t2


# spiking network

def naive_spike_trace(n, edges, delta, kick, t_end):
    """Time-stepping over a sorted list rebuilt on every event; no heap.

    Returns list of (time, node) firings with t <= t_end.
    """
    pending = [(tau, d, eid) for eid, (s, d, tau) in enumerate(edges) if s == kick]
    last = {kick: 0.0}
    fired = [(0.0, kick)]
    while pending:
        pending.sort()
        t, node, eid = pending.pop(0)
        if t > t_end:
            break
        if node in last and t - last[node] < delta:
            continue
        last[node] = t
        fired.append((t, node))
        pending.extend((t + tau, d, e) for e, (s, d, tau) in enumerate(edges) if s == node)
    return fired


def exact_fraction_matrix(rows):
    return [[Fraction(v) for v in r] for r in rows]
