"""Scalar and vector fields that respect the Klein-bottle identifications.

Fields are plain callables on the covering space: a scalar field maps
``(x, y) -> F`` and a vector field maps ``(x, y) -> (X, Y)``, with ``x`` of
shape (..., k1) and ``y`` of shape (..., k2). Everything here is vectorised
over the leading axes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from kleinforge.space import GroupElement, KleinSpace, ModeUnsupported

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TrigPoly:
    """1-periodic profile ``f(x) = sum a cos(2 pi n x) + b sin(2 pi n x)``."""

    terms: tuple[tuple[int, float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((int(n), float(a), float(b)) for n, a, b in self.terms))

    @classmethod
    def constant(cls, c: float = 1.0) -> "TrigPoly":
        return cls(((0, c, 0.0),))

    @classmethod
    def random(cls, rng: np.random.Generator, max_freq: int = 3, n_terms: int = 3) -> "TrigPoly":
        freqs = rng.integers(0, max_freq + 1, size=n_terms)
        coefs = rng.normal(size=(n_terms, 2))
        return cls(tuple((int(f), float(a), float(b)) for f, (a, b) in zip(freqs, coefs)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for n, a, b in self.terms:
            arg = TWO_PI * n * x
            out = out + a * np.cos(arg) + b * np.sin(arg)
        return out

    def to_list(self) -> list:
        return [list(t) for t in self.terms]


def _poly(p) -> TrigPoly:
    return p if isinstance(p, TrigPoly) else TrigPoly(tuple(p))


# switching functions

def _require_diagonal(space: KleinSpace):
    if space.mode != "diagonal":
        raise ModeUnsupported("switching-function ansatz needs a binary matrix B")


def switching_all(space: KleinSpace, y):
    """(T1, T2, S) for every toroidal index; each of shape (..., k1)."""
    _require_diagonal(space)
    c = np.cos(np.pi * np.asarray(y, dtype=float))
    # prod_k cos(pi y_k)^B_ik, with 0^0 = 1 for uncoupled k
    factors = np.where(space.B.astype(bool), c[..., None, :], 1.0)
    s = np.prod(factors, axis=-1)
    return (1.0 + s) / 2.0, (1.0 - s) / 2.0, s


def switching(space: KleinSpace, i: int, y):
    """Switching pair and sign function for toroidal index ``i`` (0-based)."""
    t1, t2, s = switching_all(space, y)
    return t1[..., i], t2[..., i], s[..., i]


# ansatz fields

@dataclass(frozen=True)
class ScalarAnsatz:
    """Separable scalar field built from one profile per toroidal coordinate."""

    profiles: tuple[TrigPoly, ...]

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(_poly(p) for p in self.profiles))

    @classmethod
    def random(cls, space: KleinSpace, rng: np.random.Generator, **kw) -> "ScalarAnsatz":
        return cls(tuple(TrigPoly.random(rng, **kw) for _ in range(space.k1)))

    def bind(self, space: KleinSpace) -> Callable:
        return lambda x, y: eval_scalar_ansatz(space, self, x, y)

    def to_dict(self) -> dict:
        return {"kind": "scalar_ansatz", "profiles": [p.to_list() for p in self.profiles]}


@dataclass(frozen=True)
class VectorAnsatz:
    """``f[i][j]`` shapes X_i along x_j; ``g[i][j]`` shapes Y_i along x_j."""

    f: tuple[tuple[TrigPoly, ...], ...]
    g: tuple[tuple[TrigPoly, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "f", tuple(tuple(_poly(p) for p in row) for row in self.f))
        object.__setattr__(self, "g", tuple(tuple(_poly(p) for p in row) for row in self.g))

    @classmethod
    def random(cls, space: KleinSpace, rng: np.random.Generator, **kw) -> "VectorAnsatz":
        f = tuple(tuple(TrigPoly.random(rng, **kw) for _ in range(space.k1)) for _ in range(space.k1))
        g = tuple(tuple(TrigPoly.random(rng, **kw) for _ in range(space.k1)) for _ in range(space.k2))
        return cls(f, g)

    def bind(self, space: KleinSpace) -> Callable:
        return lambda x, y: eval_vector_ansatz(space, self, x, y)

    def to_dict(self) -> dict:
        return {
            "kind": "vector_ansatz",
            "f": [[p.to_list() for p in row] for row in self.f],
            "g": [[p.to_list() for p in row] for row in self.g],
        }


def _factor(t1, t2, prof: TrigPoly, xj, sign: float = 1.0):
    return t1 * prof(xj) + sign * t2 * prof(1.0 - xj)


def eval_scalar_ansatz(space: KleinSpace, ansatz: ScalarAnsatz, x, y):
    x = np.asarray(x, dtype=float)
    if len(ansatz.profiles) != space.k1:
        raise ValueError(f"need {space.k1} profiles, got {len(ansatz.profiles)}")
    t1, t2, _ = switching_all(space, y)
    out = np.ones(np.broadcast_shapes(x.shape[:-1], t1.shape[:-1]))
    for i, prof in enumerate(ansatz.profiles):
        out = out * _factor(t1[..., i], t2[..., i], prof, x[..., i])
    return out


def eval_vector_ansatz(space: KleinSpace, ansatz: VectorAnsatz, x, y):
    x = np.asarray(x, dtype=float)
    k1, k2 = space.k1, space.k2
    if len(ansatz.f) != k1 or any(len(r) != k1 for r in ansatz.f):
        raise ValueError(f"f must be {k1} x {k1}")
    if len(ansatz.g) != k2 or any(len(r) != k1 for r in ansatz.g):
        raise ValueError(f"g must be {k2} x {k1}")
    t1, t2, _ = switching_all(space, y)
    shape = np.broadcast_shapes(x.shape[:-1], t1.shape[:-1])
    X = np.empty(shape + (k1,))
    for i in range(k1):
        acc = np.ones(shape)
        for j in range(k1):
            # own coordinate uses the antisymmetric pair so X_i flips with x_i
            acc = acc * _factor(t1[..., j], t2[..., j], ansatz.f[i][j], x[..., j], -1.0 if j == i else 1.0)
        X[..., i] = acc
    Y = np.empty(shape + (k2,))
    for i in range(k2):
        acc = np.ones(shape)
        for j in range(k1):
            acc = acc * _factor(t1[..., j], t2[..., j], ansatz.g[i][j], x[..., j])
        Y[..., i] = acc
    return X, Y


# Fourier-built fields

@dataclass(frozen=True)
class TrigSeries:
    """Real series ``sum c * cos|sin(2 pi lam.x + pi zeta.y)``.

    ``terms`` holds ``(coef, lam, zeta, kind)`` with ``kind`` in {"cos", "sin"}.
    Coefficients may be Fractions; they are converted at evaluation.
    """

    terms: tuple = ()

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast_shapes(x.shape[:-1], y.shape[:-1]))
        for coef, lam, zeta, kind in self.terms:
            arg = TWO_PI * (x @ np.asarray(lam, dtype=float)) + np.pi * (y @ np.asarray(zeta, dtype=float))
            out = out + float(coef) * (np.cos(arg) if kind == "cos" else np.sin(arg))
        return out

    def __str__(self):
        if not self.terms:
            return "0"
        out = ""
        for coef, lam, zeta, kind in self.terms:
            neg = coef < 0
            mag = -coef if neg else coef
            body = f"{kind}({_phase_str(lam, zeta)})" if mag == 1 else f"{mag}*{kind}({_phase_str(lam, zeta)})"
            if not out:
                out = f"-{body}" if neg else body
            else:
                out += f" - {body}" if neg else f" + {body}"
        return out

    def to_list(self) -> list:
        return [[str(c), list(map(int, lam)), list(map(int, zeta)), kind] for c, lam, zeta, kind in self.terms]

    @classmethod
    def from_list(cls, rows) -> "TrigSeries":
        return cls(tuple((float(_num(c)), tuple(lam), tuple(zeta), kind) for c, lam, zeta, kind in rows))


def _num(c):
    if isinstance(c, str) and "/" in c:
        n, d = c.split("/")
        return float(n) / float(d)
    return float(c)


def _phase_str(lam, zeta) -> str:
    def lin(coefs, name):
        out = []
        for i, c in enumerate(coefs):
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            mag = "" if abs(c) == 1 else f"{abs(c)}"
            out.append(f"{sign} {mag}{name}{i + 1}")
        s = " ".join(out)
        if s.startswith("+ "):
            return s[2:]
        return "-" + s[2:] if s.startswith("- ") else s
    xs, ys = lin(lam, "x"), lin(zeta, "y")
    bits = []
    if xs:
        bits.append(f"2pi({xs})")
    if ys:
        bits.append(f"pi({ys})")
    return " + ".join(bits) if bits else "0"


@dataclass(frozen=True)
class VectorTrigSeries:
    X: tuple[TrigSeries, ...]
    Y: tuple[TrigSeries, ...]

    def __call__(self, x, y):
        X = np.stack([s(x, y) for s in self.X], axis=-1)
        if self.Y:
            Y = np.stack([s(x, y) for s in self.Y], axis=-1)
        else:
            Y = np.zeros(X.shape[:-1] + (0,))
        return X, Y


def example_field() -> VectorTrigSeries:
    """Vector field on the standard Klein bottle used as a worked example.

    u = cos2pix cospiy + sin2pix sin2piy, v = sin2pix sinpiy + cos2pix cos2piy.
    """
    # cos A cos B = (cos(A+B) + cos(A-B))/2, sin A sin B = (cos(A-B) - cos(A+B))/2
    u = TrigSeries((
        (0.5, (1,), (1,), "cos"), (0.5, (1,), (-1,), "cos"),
        (0.5, (1,), (-2,), "cos"), (-0.5, (1,), (2,), "cos"),
    ))
    v = TrigSeries((
        (0.5, (1,), (-1,), "cos"), (-0.5, (1,), (1,), "cos"),
        (0.5, (1,), (2,), "cos"), (0.5, (1,), (-2,), "cos"),
    ))
    return VectorTrigSeries((u,), (v,))


def focus_field(eps: float = 0.3) -> VectorTrigSeries:
    """Field on the standard Klein bottle with a stable focus at (0, 1/2).

    X = eps sin2pix cos2piy - 2 cos2pix cospiy,
    Y = -sin2pix sinpiy + eps cos2pix sin2piy.
    The Jacobian at the focus is 2 pi [[-eps, 1], [-1, -eps]], eigenvalues
    2 pi (-eps +- i).
    """
    X = TrigSeries((
        (eps / 2, (1,), (2,), "sin"), (eps / 2, (1,), (-2,), "sin"),
        (-1.0, (1,), (1,), "cos"), (-1.0, (1,), (-1,), "cos"),
    ))
    Y = TrigSeries((
        (-0.5, (1,), (-1,), "cos"), (0.5, (1,), (1,), "cos"),
        (eps / 2, (1,), (2,), "sin"), (-eps / 2, (1,), (-2,), "sin"),
    ))
    return VectorTrigSeries((X,), (Y,))


# symmetry checks

@dataclass(frozen=True)
class SymmetryReport:
    max_residual: float
    worst_point: tuple
    worst_generator: GroupElement | None
    tol: float
    n_samples: int

    @property
    def passed(self) -> bool:
        return bool(self.max_residual <= self.tol)


def sample_generators(space: KleinSpace, rng: np.random.Generator, n: int, radius: int = 3) -> list[GroupElement]:
    """Half reduced (or basic) generators, half random elements with entries in [-radius, radius]."""
    gens = [r.element for r in space.test_generators()]
    out = []
    for k in range(n):
        if k % 2 == 0:
            out.append(gens[rng.integers(len(gens))])
        else:
            out.append(GroupElement(rng.integers(-radius, radius + 1, space.k1), rng.integers(-radius, radius + 1, space.k2)))
    return out


def _sample(space, rng, n_samples, box):
    x = rng.uniform(-box, box, size=(n_samples, space.k1))
    y = rng.uniform(-box, box, size=(n_samples, space.k2))
    return x, y, sample_generators(space, rng, n_samples)


def _group_by_element(gens):
    groups: dict[GroupElement, list[int]] = {}
    for idx, g in enumerate(gens):
        groups.setdefault(g, []).append(idx)
    return groups


def check_scalar_symmetry(field: Callable, space: KleinSpace, n_samples: int = 1000, tol: float = 1e-10,
                          seed: int = 0, box: float = 2.0) -> SymmetryReport:
    """Max of |F(p) - F(g.p)| over random points and group elements."""
    rng = np.random.default_rng(seed)
    x, y, gens = _sample(space, rng, n_samples, box)
    base = np.asarray(field(x, y), dtype=float)
    resid = np.zeros(n_samples)
    gen_of = [None] * n_samples
    for g, idx in _group_by_element(gens).items():
        idx = np.asarray(idx)
        gx, gy = space.act(g, x[idx], y[idx])
        resid[idx] = np.abs(base[idx] - np.asarray(field(gx, gy), dtype=float))
        for i in idx:
            gen_of[i] = g
    return _report(resid, x, y, gen_of, tol, n_samples)


def check_vector_symmetry(field: Callable, space: KleinSpace, n_samples: int = 1000, tol: float = 1e-10,
                          seed: int = 0, box: float = 2.0) -> SymmetryReport:
    """Max of |H(b) X(p) - X(g.p)| + |Y(p) - Y(g.p)| (sup norms)."""
    rng = np.random.default_rng(seed)
    x, y, gens = _sample(space, rng, n_samples, box)
    X, Y = field(x, y)
    X, Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    resid = np.zeros(n_samples)
    gen_of = [None] * n_samples
    for g, idx in _group_by_element(gens).items():
        idx = np.asarray(idx)
        gx, gy = space.act(g, x[idx], y[idx])
        gX, gY = field(gx, gy)
        h = space.holonomy(g.b).astype(float)
        rx = np.max(np.abs(X[idx] @ h.T - np.asarray(gX)), axis=-1)
        ry = np.max(np.abs(Y[idx] - np.asarray(gY)), axis=-1) if space.k2 else 0.0
        resid[idx] = rx + ry
        for i in idx:
            gen_of[i] = g
    return _report(resid, x, y, gen_of, tol, n_samples)


def _report(resid, x, y, gen_of, tol, n):
    resid = np.where(np.isfinite(resid), resid, np.inf)
    w = int(np.argmax(resid))
    point = (tuple(x[w].tolist()), tuple(y[w].tolist()))
    return SymmetryReport(float(resid[w]), point, gen_of[w], tol, n)


# field files

def load_field(spec, space: KleinSpace):
    """Build a callable field from a dict or JSON path.

    Kinds: ``scalar_ansatz``, ``vector_ansatz``, ``fourier_scalar`` and
    ``fourier_vector``. Returns ``(callable, "scalar" | "vector")``.
    """
    if not isinstance(spec, dict):
        spec = json.loads(Path(spec).read_text())
    kind = spec.get("kind")
    if kind == "scalar_ansatz":
        return ScalarAnsatz(tuple(TrigPoly(tuple(map(tuple, p))) for p in spec["profiles"])).bind(space), "scalar"
    if kind == "vector_ansatz":
        f = tuple(tuple(TrigPoly(tuple(map(tuple, p))) for p in row) for row in spec["f"])
        g = tuple(tuple(TrigPoly(tuple(map(tuple, p))) for p in row) for row in spec["g"])
        return VectorAnsatz(f, g).bind(space), "vector"
    if kind == "fourier_scalar":
        return TrigSeries.from_list(spec["terms"]), "scalar"
    if kind == "fourier_vector":
        X = tuple(TrigSeries.from_list(t) for t in spec["X"])
        Y = tuple(TrigSeries.from_list(t) for t in spec["Y"])
        if len(X) != space.k1 or len(Y) != space.k2:
            raise ValueError("fourier_vector component counts do not match the space")
        return VectorTrigSeries(X, Y), "vector"
    raise ValueError(f"unknown field kind {kind!r}")


def sample_grid(field: Callable, grid: int):
    """Evaluate a field on a grid over [0,1)^2 (cell centres); 2-d spaces only."""
    t = (np.arange(grid) + 0.5) / grid
    xx, yy = np.meshgrid(t, t, indexing="xy")
    return xx, yy, field(xx[..., None], yy[..., None])
