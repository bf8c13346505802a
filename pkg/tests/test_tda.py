import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import pdist, squareform

from kleinforge import gf2, tda
from oracles import dense_rips_diagrams

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def circle(n, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    th = rng.uniform(0, 2 * np.pi, n)
    return np.c_[np.cos(th), np.sin(th)] + noise * rng.normal(size=(n, 2))


# embedding

def test_window_embed_examples():
    c = tda.window_embed([1, 2, 3, 4, 5], 3)
    assert c.points.tolist() == [[1, 2, 3], [2, 3, 4], [3, 4, 5]]
    c = tda.window_embed([1, 2, 1, 2, 1, 2], 2)
    assert c.points.tolist() == [[1, 2], [2, 1]]
    c = tda.window_embed([1.0, 1.05, 3.0], 1, dedup_tol=0.1)
    assert c.points.tolist() == [[1.0], [3.0]]
    with pytest.raises(tda.SequenceTooShort):
        tda.window_embed([1, 2], 3)
    with pytest.raises(ValueError):
        tda.window_embed([1, 2], 0)


# 2NN

def test_2nn_circle_and_plane():
    assert 0.85 <= tda.dim_2nn(circle(2000)).d_hat <= 1.15
    rng = np.random.default_rng(1)
    assert 1.8 <= tda.dim_2nn(rng.uniform(size=(2000, 2))).d_hat <= 2.2


def test_2nn_methods_and_n_used():
    pts = np.random.default_rng(2).uniform(size=(500, 3))
    mle = tda.dim_2nn(pts)
    fit = tda.dim_2nn(pts, method="cdf_fit")
    assert mle.n_used == fit.n_used == 450
    assert abs(mle.d_hat - 3) < 0.5 and abs(fit.d_hat - 3) < 0.6
    with pytest.raises(ValueError):
        tda.dim_2nn(pts, method="other")
    with pytest.raises(ValueError):
        tda.dim_2nn(pts, discard_fraction=1.0)


def test_2nn_invariances():
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(400, 3))
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    d0 = tda.dim_2nn(pts).d_hat
    assert abs(tda.dim_2nn(pts @ q.T).d_hat - d0) <= 1e-9
    assert abs(tda.dim_2nn(pts * 7.5 + 3.0).d_hat - d0) <= 1e-9


def test_2nn_degenerate():
    with pytest.raises(tda.DegenerateCloud):
        tda.dim_2nn(np.zeros((20, 2)))
    with pytest.raises(tda.DegenerateCloud):
        tda.dim_2nn(np.random.default_rng(0).uniform(size=(5, 2)))


def test_profile():
    rng = np.random.default_rng(4)
    seq = rng.uniform(size=600)
    rows = tda.dimension_profile(seq, range(1, 4))
    assert [r[0] for r in rows] == [1, 2, 3]
    assert all(n == 600 - W + 1 for W, _, n in rows)
    for W, d, _ in rows:
        assert d >= 0.8 * W
    with pytest.raises(tda.DegenerateCloud):
        tda.dimension_profile(np.ones(100), [2])


# Rips

def test_square_diagram():
    h0, h1 = tda.rips_persistence(SQUARE, 2.0)
    assert h0.pairs == [(0.0, 1.0)] * 3 + [(0.0, math.inf)]
    assert len(h1.pairs) == 1
    b, d = h1.pairs[0]
    assert b == 1.0 and abs(d - math.sqrt(2)) <= 1e-12


def test_two_points_and_truncation():
    h0, h1 = tda.rips_persistence([[0.0], [3.0]], 5.0)
    assert h0.pairs == [(0.0, 3.0), (0.0, math.inf)] and h1.pairs == []
    h0, _ = tda.rips_persistence([[0.0], [3.0]], 1.0)
    assert h0.pairs == [(0.0, math.inf)] * 2
    # the square's hole is still open below the diagonal length
    _, h1 = tda.rips_persistence(SQUARE, 1.2)
    assert h1.pairs == [(1.0, math.inf)]


def test_duplicate_points_drop_zero_bars():
    h0, _ = tda.rips_persistence([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]], 2.0)
    assert h0.pairs == [(0.0, 1.0), (0.0, math.inf)]


def test_rips_errors():
    with pytest.raises(tda.CloudTooLarge):
        tda.rips_persistence(np.zeros((401, 2)), 1.0)
    with pytest.raises(ValueError):
        tda.rips_persistence(SQUARE, 0.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 25))
def test_h0_union_find_matches_matrix_reduction(seed, n):
    pts = np.random.default_rng(seed).uniform(size=(n, 2))
    r = 0.6
    uf = tda.rips_persistence(pts, r, max_degree=0)[0]
    mr = tda.h0_matrix_reduction(pts, r)
    assert uf.pairs == mr.pairs


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(3, 8), st.floats(0.3, 2.0))
def test_rips_matches_dense_oracle(seed, n, r_max):
    pts = np.random.default_rng(seed).uniform(size=(n, 2))
    h0, h1 = tda.rips_persistence(pts, r_max)
    o0, o1 = dense_rips_diagrams(pts, r_max)
    assert sorted(h0.pairs) == o0
    assert sorted(h1.pairs) == o1


def test_rips_matches_oracle_on_circle():
    pts = circle(30, noise=0.05, seed=9)
    h0, h1 = tda.rips_persistence(pts, 1.5)
    o0, o1 = dense_rips_diagrams(pts, 1.5)
    assert sorted(h0.pairs) == o0 and sorted(h1.pairs) == o1


def _b2(pts, r):
    """dim ker of the triangle boundary map (no tetrahedra in the 2-skeleton)."""
    dm = squareform(pdist(pts))
    simp = tda._filtration(dm, r, 2)
    edges = {s: q for q, s in enumerate(s for _, d, s in simp if d == 1)}
    tris = [s for _, d, s in simp if d == 2]
    if not tris:
        return 0
    mat = np.zeros((len(edges), len(tris)), dtype=int)
    for c, (i, j, k) in enumerate(tris):
        for e in ((i, j), (i, k), (j, k)):
            mat[edges[e], c] = 1
    return len(gf2.rank_kernel_image(mat).kernel_basis)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(3, 12), st.floats(0.1, 1.2))
def test_euler_characteristic(seed, n, r):
    pts = np.random.default_rng(seed).uniform(size=(n, 3))
    dgs = tda.rips_persistence(pts, 2.0)
    b0, b1 = tda.betti_at(dgs, r)
    assert tda.euler_characteristic(pts, r) == b0 - b1 + _b2(pts, r)


def test_noisy_circle_dominant_bar():
    pts = circle(200, noise=0.05, seed=1)
    _, h1 = tda.rips_persistence(pts, 2.0)
    p = np.sort(h1.persistences())[::-1]
    assert p[0] >= 5 * p[1]


def test_diagram_csv(tmp_path):
    path = tmp_path / "d.csv"
    tda.write_diagrams_csv(tda.rips_persistence(SQUARE, 2.0), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "degree,birth,death"
    assert "0,0.0,inf" in lines and "1,1.0,1.4142135623730951" in lines
