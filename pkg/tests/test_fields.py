import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kleinforge import fields
from kleinforge import space as ks
from kleinforge.fields import ScalarAnsatz, TrigPoly, VectorAnsatz
from oracles import switching_expansion
from test_space import random_diagonal_space

SIN = TrigPoly(((1, 0.0, 1.0),))


def test_switching_examples():
    s = ks.standard_klein()
    assert np.allclose(fields.switching(s, 0, np.array([0.0])), (1, 0, 1))
    assert np.allclose(fields.switching(s, 0, np.array([1.0])), (0, 1, -1))
    h = ks.full_coupling(1, 2)
    assert np.allclose(fields.switching(h, 0, np.array([0.5, 0.5])), (0.5, 0.5, 0), atol=1e-15)


def test_switching_rejects_matrix_mode():
    with pytest.raises(ks.ModeUnsupported):
        fields.switching(ks.swap_flip(), 0, np.array([0.1]))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_switching_identities_and_exchange(seed):
    rng = np.random.default_rng(seed)
    sp = random_diagonal_space(rng)
    y = rng.uniform(-3, 3, (200, sp.k2))
    t1, t2, s = fields.switching_all(sp, y)
    assert np.max(np.abs(t1 + t2 - 1)) <= 1e-12
    assert np.max(np.abs(t1 - t2 - s)) <= 1e-12
    assert t1.min() >= -1e-15 and t2.min() >= -1e-15
    for k in range(sp.k2):
        e = np.zeros(sp.k2)
        e[k] = 1
        u1, u2, _ = fields.switching_all(sp, y + e)
        flips = sp.B[:, k] == 1
        assert np.allclose(u1[:, flips], t2[:, flips], atol=1e-12)
        assert np.allclose(u1[:, ~flips], t1[:, ~flips], atol=1e-12)
        assert np.allclose(u2[:, flips], t1[:, flips], atol=1e-12)
        w1, _, _ = fields.switching_all(sp, y + 2 * e)
        assert np.allclose(w1, t1, atol=1e-12)


def test_switching_matches_expansion_oracle():
    rng = np.random.default_rng(7)
    for _ in range(10):
        sp = random_diagonal_space(rng, max_k2=3)
        for _ in range(20):
            y = rng.uniform(-2, 2, sp.k2)
            t1, t2, _ = fields.switching_all(sp, y)
            for i in range(sp.k1):
                o1, o2 = switching_expansion(sp.B[i], y)
                assert abs(o1 - t1[i]) <= 1e-12 and abs(o2 - t2[i]) <= 1e-12


def test_scalar_ansatz_examples():
    s = ks.standard_klein()
    F = ScalarAnsatz((SIN,)).bind(s)
    assert np.isclose(F(np.array([0.25]), np.array([1.0])), -1.0)
    x = np.array([[0.1], [0.37]])
    assert np.allclose(F(x, np.zeros((2, 1))), np.sin(2 * np.pi * x[:, 0]))
    sp = ks.full_coupling(2, 2)
    one = ScalarAnsatz((TrigPoly.constant(), TrigPoly.constant())).bind(sp)
    rng = np.random.default_rng(0)
    assert np.allclose(one(rng.uniform(size=(20, 2)), rng.uniform(size=(20, 2))), 1.0)
    F = ScalarAnsatz((SIN, SIN)).bind(sp)
    xs = rng.uniform(size=(10, 2))
    assert np.allclose(F(xs, np.zeros((10, 2))), np.prod(np.sin(2 * np.pi * xs), axis=1))


def test_vector_ansatz_examples():
    s = ks.standard_klein()
    V = VectorAnsatz(((SIN,),), ((TrigPoly.constant(),),)).bind(s)
    X, Y = V(np.array([0.25]), np.array([1.0]))
    assert np.allclose(X, [1.0]) and np.allclose(Y, [1.0])
    X0, _ = V(np.array([0.75]), np.array([0.0]))
    assert np.allclose(X, -X0)
    sp = ks.full_coupling(2, 1)
    rng = np.random.default_rng(1)
    va = VectorAnsatz.random(sp, rng)
    x = rng.uniform(size=(5, 2))
    X, _ = va.bind(sp)(x, np.zeros((5, 1)))
    for i in range(2):
        expect = np.prod([va.f[i][j](x[:, j]) for j in range(2)], axis=0)
        assert np.allclose(X[:, i], expect)


def test_ansatz_shape_errors():
    sp = ks.full_coupling(2, 1)
    with pytest.raises(ValueError):
        fields.eval_scalar_ansatz(sp, ScalarAnsatz((SIN,)), np.zeros(2), np.zeros(1))
    with pytest.raises(ValueError):
        fields.eval_vector_ansatz(sp, VectorAnsatz(((SIN,),), ()), np.zeros(2), np.zeros(1))


@pytest.mark.parametrize("seed", range(4))
def test_random_ansatz_fields_are_symmetric(seed):
    rng = np.random.default_rng(seed)
    sp = random_diagonal_space(rng)
    rep = fields.check_scalar_symmetry(ScalarAnsatz.random(sp, rng).bind(sp), sp, n_samples=300)
    assert rep.passed, rep
    rep = fields.check_vector_symmetry(VectorAnsatz.random(sp, rng).bind(sp), sp, n_samples=300)
    assert rep.passed, rep


def test_symmetry_check_counterexamples():
    s = ks.standard_klein()
    rep = fields.check_scalar_symmetry(lambda x, y: x[..., 0], s)
    assert not rep.passed and rep.worst_generator is not None
    rep = fields.check_scalar_symmetry(lambda x, y: np.full(x.shape[:-1], 3.0), s)
    assert rep.max_residual == 0.0
    const_x = lambda x, y: (np.ones(x.shape), np.zeros(y.shape))
    assert not fields.check_vector_symmetry(const_x, s).passed


def test_worked_example_fields_pass():
    s = ks.standard_klein()
    assert fields.check_vector_symmetry(fields.example_field(), s).passed
    assert fields.check_vector_symmetry(fields.focus_field(), s).passed
    # the example field matches its product form
    rng = np.random.default_rng(2)
    x, y = rng.uniform(-1, 1, (50, 1)), rng.uniform(-1, 1, (50, 1))
    X, Y = fields.example_field()(x, y)
    tp = 2 * np.pi
    u = np.cos(tp * x) * np.cos(np.pi * y) + np.sin(tp * x) * np.sin(tp * y)
    v = np.sin(tp * x) * np.sin(np.pi * y) + np.cos(tp * x) * np.cos(tp * y)
    assert np.allclose(X, u) and np.allclose(Y, v)


def test_focus_field_has_focus():
    X, Y = fields.focus_field()(np.array([0.0]), np.array([0.5]))
    assert np.allclose(X, 0, atol=1e-14) and np.allclose(Y, 0, atol=1e-14)


def test_load_field_kinds(tmp_path):
    sp = ks.standard_klein()
    spec = ScalarAnsatz((SIN,)).to_dict()
    p = tmp_path / "f.json"
    p.write_text(json.dumps(spec))
    f, kind = fields.load_field(p, sp)
    assert kind == "scalar" and np.isclose(f(np.array([0.25]), np.array([1.0])), -1.0)
    va = VectorAnsatz.random(sp, np.random.default_rng(0))
    g, kind = fields.load_field(va.to_dict(), sp)
    x, y = np.array([0.3]), np.array([0.6])
    assert kind == "vector" and np.allclose(g(x, y)[0], va.bind(sp)(x, y)[0])
    ff = fields.example_field()
    h, kind = fields.load_field({"kind": "fourier_vector", "X": [ff.X[0].to_list()], "Y": [ff.Y[0].to_list()]}, sp)
    assert np.allclose(h(x, y)[1], ff(x, y)[1])
    with pytest.raises(ValueError):
        fields.load_field({"kind": "nope"}, sp)


def test_trig_series_string():
    assert str(fields.TrigSeries(((-2, (1, -1), (-1, -1), "sin"),))) == "-2*sin(2pi(x1 - x2) + pi(-y1 - y2))"
    assert str(fields.TrigSeries(((1, (0,), (0,), "cos"),))) == "cos(0)"
