"""Equivariant Fourier analysis on generalised Klein bottles.

Fields on the space are lifted to the torus R^n / (Z^k1 x (2Z)^k2), on which
the finite group Z_2^k2 acts by ``beta . (x, y) = (H(beta) x, y + beta)``.
A field is a lift iff it is fixed by the group-average projection ``P``;
equivalently it lies in the kernel of ``L = I - P``. On Fourier coefficients
``c(lam, zeta)`` (modes ``exp(2 pi i lam.x) exp(pi i zeta.y)``) the dual
operator ``L*`` is block diagonal over orbits of ``lam -> H(beta)^T lam``.

All operator matrices and kernels are exact (``fractions.Fraction``).
"""
from __future__ import annotations

import cmath
import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import gcd, lcm
from typing import Callable, Sequence

import numpy as np
import sympy

from kleinforge.fields import TrigSeries, VectorTrigSeries
from kleinforge.space import KleinSpace

Vec = tuple[int, ...]


class ConjugateNotInBox(ValueError):
    """A block's complex-conjugate block is missing, so no real basis can be formed."""


class IncompleteOrbit(ValueError):
    pass


# pointwise averaging operators

def symmetrize_scalar(field: Callable, space: KleinSpace) -> Callable:
    """Group average of a torus-periodic scalar field (period 1 in x, 2 in y)."""
    classes = [(np.asarray(beta, dtype=float), h.astype(float)) for beta, h in space.parity_classes()]
    scale = 1.0 / len(classes)

    def averaged(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return scale * sum(field(x @ h.T, y + beta) for beta, h in classes)

    return averaged


def symmetrize_vector(field: Callable, space: KleinSpace) -> Callable:
    """Frame-weighted group average: ``X -> mean H(beta)^-1 X(beta . p)``."""
    classes = [(np.asarray(beta, dtype=float), h.astype(float)) for beta, h in space.parity_classes()]
    scale = 1.0 / len(classes)

    def averaged(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        X_acc, Y_acc = 0.0, 0.0
        for beta, h in classes:
            X, Y = field(x @ h.T, y + beta)
            # H(beta) is an involution, so it is its own inverse
            X_acc = X_acc + np.asarray(X) @ h.T
            Y_acc = Y_acc + np.asarray(Y)
        return scale * X_acc, scale * Y_acc

    return averaged


# general finite-group dual operator

@dataclass(frozen=True)
class AffineTorusAction:
    """One group element ``g`` acting on the n-torus by theta -> A theta + b.

    ``A_inv`` is A(g^-1), ``b`` is b(g) (rational, in units of full periods),
    ``chi_inv`` is chi(g^-1) (an m x m integer matrix).
    """

    A_inv: np.ndarray
    b: tuple[Fraction, ...]
    chi_inv: np.ndarray


def _phase(k: Sequence[int], A_inv: np.ndarray, b: Sequence[Fraction]):
    """exp(2 pi i k^T A(g^-1) b(g)); exact +-1 when the exponent is a half-integer."""
    t = sum(Fraction(int(v)) * bb for v, bb in zip(np.asarray(k) @ A_inv, b))
    if (2 * t).denominator == 1:
        return Fraction(1) if (2 * t).numerator % 2 == 0 else Fraction(-1)
    return cmath.exp(2j * cmath.pi * float(t))


def dual_operator(ks: Sequence[Vec], group: Sequence[AffineTorusAction]) -> list[list]:
    """Matrix of ``L*`` restricted to the frequency set ``ks`` (closed under the dual action).

    Rows and columns are indexed by (k, component) with k-major order. Entry
    formula: (L* c)(k) = c(k) - 1/|G| sum_g chi(g^-1) c(A(g^-1)^T k) e^{2 pi i k^T A(g^-1) b(g)}.
    """
    index = {tuple(k): i for i, k in enumerate(ks)}
    m = group[0].chi_inv.shape[0]
    size = len(ks) * m
    mat = [[Fraction(int(r == c)) for c in range(size)] for r in range(size)]
    w = Fraction(1, len(group))
    for r, k in enumerate(ks):
        for g in group:
            src = tuple(int(v) for v in g.A_inv.T @ np.asarray(k))
            if src not in index:
                raise IncompleteOrbit(f"frequency {src} (image of {tuple(k)}) is outside the block")
            ph = _phase(k, g.A_inv, g.b)
            c = index[src]
            for i in range(m):
                for j in range(m):
                    chi = int(g.chi_inv[i, j])
                    if chi:
                        mat[r * m + i][c * m + j] -= w * chi * ph
    return mat


def klein_group(space: KleinSpace, kind: str = "scalar") -> list[AffineTorusAction]:
    """Z_2^k2 as affine maps on the 1:2 torus, with chi = 1 or chi = H(beta)."""
    k1, k2 = space.k1, space.k2
    out = []
    for beta, h in space.parity_classes():
        A = np.eye(k1 + k2, dtype=np.int64)
        A[:k1, :k1] = h  # beta is its own inverse in Z_2^k2
        b = (Fraction(0),) * k1 + tuple(Fraction(v, 2) for v in beta)
        chi = np.ones((1, 1), dtype=np.int64) if kind == "scalar" else h
        out.append(AffineTorusAction(A, b, chi))
    return out


# blocks

@dataclass(frozen=True)
class FourierBlock:
    zeta: Vec
    orbit: tuple[Vec, ...]
    complete: bool
    kind: str = "scalar"
    operator_matrix: tuple | None = None
    kernel_basis: tuple | None = None

    @property
    def modes(self) -> list[tuple[Vec, Vec]]:
        return [(lam, self.zeta) for lam in self.orbit]

    @property
    def components(self) -> int:
        return 1 if self.kind == "scalar" else len(self.orbit[0])

    def conjugate_key(self):
        return (tuple(-z for z in self.zeta), tuple(sorted(tuple(-v for v in lam) for lam in self.orbit)))

    @property
    def key(self):
        return (self.zeta, self.orbit)


def dual_orbit(space: KleinSpace, lam: Vec) -> tuple[Vec, ...]:
    seen = {tuple(lam)}
    frontier = [tuple(lam)]
    while frontier:
        cur = frontier.pop()
        for _, h in space.parity_classes():
            nxt = tuple(int(v) for v in h.T @ np.asarray(cur))
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return tuple(sorted(seen))


def lambda_box(k1: int, lmax: int) -> list[Vec]:
    return [tuple(v) for v in itertools.product(range(-lmax, lmax + 1), repeat=k1)]


def orbit_blocks(space: KleinSpace, lambdas: Sequence[Vec], zetas: Sequence[Vec]) -> list[FourierBlock]:
    """Partition ``lambdas x zetas`` into dual-action orbits.

    Orbits that leave the given lambda set are kept but flagged incomplete.
    Ordered by (zeta, smallest lambda of the orbit).
    """
    pool = set(map(tuple, lambdas))
    blocks = []
    for zeta in sorted(set(map(tuple, zetas))):
        seen: set = set()
        for lam in sorted(pool):
            if lam in seen:
                continue
            orb = dual_orbit(space, lam)
            seen.update(orb)
            blocks.append(FourierBlock(tuple(zeta), orb, all(o in pool for o in orb)))
    return sorted(blocks, key=lambda b: (b.zeta, b.orbit[0]))


def default_box(space: KleinSpace, lmax: int = 3, zmax: int = 3) -> tuple[list[Vec], list[Vec]]:
    return lambda_box(space.k1, lmax), [tuple(v) for v in itertools.product(range(-zmax, zmax + 1), repeat=space.k2)]


def assemble_operator(space: KleinSpace, lambdas: Sequence[Vec], zeta: Vec, kind: str = "scalar") -> list[list[Fraction]]:
    """L* on the modes ``(lam, zeta)`` for ``lam`` in ``lambdas``, in the given order."""
    ks = [tuple(lam) + tuple(zeta) for lam in lambdas]
    return dual_operator(ks, klein_group(space, kind))


def _operator(block: FourierBlock, space: KleinSpace, kind: str):
    if not block.complete:
        raise IncompleteOrbit(f"orbit {block.orbit} at zeta={block.zeta} is truncated by the box")
    return assemble_operator(space, block.orbit, block.zeta, kind)


def _primitive(v: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """Scale a rational vector to coprime integers with a positive leading entry."""
    v = [Fraction(x) for x in v]
    den = 1
    for x in v:
        den = lcm(den, x.denominator)
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    lead = next((x for x in ints if x), 1)
    s = -1 if lead < 0 else 1
    return tuple(Fraction(s * x // g) for x in ints) if g else tuple(Fraction(0) for _ in ints)


def exact_kernel(mat: Sequence[Sequence[Fraction]]) -> list[tuple[Fraction, ...]]:
    """Orthogonal rational basis of the null space, each vector primitive."""
    M = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in row] for row in mat])
    null = M.nullspace()
    if not null:
        return []
    ortho = sympy.GramSchmidt(null)
    return [_primitive([Fraction(int(sympy.fraction(x)[0]), int(sympy.fraction(x)[1])) for x in v]) for v in ortho]


def scalar_kernel_basis(block: FourierBlock, space: KleinSpace) -> FourierBlock:
    mat = _operator(block, space, "scalar")
    return replace(block, kind="scalar", operator_matrix=_freeze(mat), kernel_basis=tuple(exact_kernel(mat)))


def vector_kernel_basis(block: FourierBlock, space: KleinSpace) -> FourierBlock:
    """Kernel of the X-component operator; Y components follow :func:`scalar_kernel_basis`."""
    mat = _operator(block, space, "vector")
    return replace(block, kind="vector", operator_matrix=_freeze(mat), kernel_basis=tuple(exact_kernel(mat)))


def _freeze(mat):
    return tuple(tuple(row) for row in mat)


def projection_matrix(block: FourierBlock) -> list[list[Fraction]]:
    """P* = I - L* for a block with an operator matrix."""
    n = len(block.operator_matrix)
    return [[Fraction(int(i == j)) - block.operator_matrix[i][j] for j in range(n)] for i in range(n)]


def matmul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))] for i in range(len(A))]


def matvec(A, v):
    return [sum(a * x for a, x in zip(row, v)) for row in A]


# realisation as real trig functions

def _canonical_terms(raw) -> tuple:
    """Merge (coef, lam, zeta, kind) terms after mapping each mode to its positive representative."""
    acc: dict = {}
    for coef, lam, zeta, kind in raw:
        mode = tuple(lam) + tuple(zeta)
        if not any(mode):
            if kind == "sin":
                continue
        elif next(v for v in mode if v) < 0:
            lam, zeta = tuple(-v for v in lam), tuple(-v for v in zeta)
            if kind == "sin":
                coef = -coef
        key = (tuple(lam), tuple(zeta), kind)
        acc[key] = acc.get(key, Fraction(0)) + coef
    return tuple((c, lam, zeta, kind) for (lam, zeta, kind), c in sorted(acc.items()) if c != 0)


@dataclass(frozen=True)
class RealBasisFunction:
    """Real symmetric basis function. ``terms`` has one tuple per output component."""

    components: tuple[tuple, ...]
    kind: str
    zeta: Vec
    orbit: tuple[Vec, ...]
    k1: int

    def as_field(self):
        if self.kind == "scalar":
            return TrigSeries(self.components[0])
        return VectorTrigSeries(tuple(TrigSeries(t) for t in self.components[: self.k1]),
                                tuple(TrigSeries(t) for t in self.components[self.k1:]))

    def __call__(self, x, y):
        return self.as_field()(x, y)

    def describe(self) -> list[str]:
        return [str(TrigSeries(t)) for t in self.components]

    def _flat(self):
        return {(i,) + (lam, zeta, kind): c for i, comp in enumerate(self.components) for c, lam, zeta, kind in comp}


def _independent(funcs: list[RealBasisFunction]) -> list[RealBasisFunction]:
    keys = sorted({k for f in funcs for k in f._flat()})
    out, rows = [], []
    for f in funcs:
        flat = f._flat()
        if not flat:
            continue
        row = [sympy.Rational(flat.get(k, Fraction(0)).numerator, flat.get(k, Fraction(0)).denominator) for k in keys]
        if sympy.Matrix(rows + [row]).rank() > len(rows):
            rows.append(row)
            out.append(f)
    return out


def realize_block(block: FourierBlock, space: KleinSpace, y_kernel: Sequence | None = None) -> list[RealBasisFunction]:
    """Real and imaginary parts of each kernel vector's inverse transform.

    For vector blocks, ``y_kernel`` is the scalar kernel of the same block and
    feeds one function per Klein component.
    """
    k1, k2 = space.k1, space.k2
    zeta = block.zeta
    cands = []
    n_comp = 1 if block.kind == "scalar" else k1 + k2
    for v in block.kernel_basis:
        m = block.components
        for kind in ("cos", "sin"):
            comps = [() for _ in range(n_comp)]
            for c in range(m):
                raw = [(v[i * m + c], lam, zeta, kind) for i, lam in enumerate(block.orbit)]
                comps[c] = _canonical_terms(raw)
            cands.append(RealBasisFunction(tuple(comps), block.kind, zeta, block.orbit, k1))
    if block.kind == "vector":
        for v in y_kernel or ():
            for j in range(k2):
                for kind in ("cos", "sin"):
                    comps = [() for _ in range(n_comp)]
                    comps[k1 + j] = _canonical_terms([(v[i], lam, zeta, kind) for i, lam in enumerate(block.orbit)])
                    cands.append(RealBasisFunction(tuple(comps), "vector", zeta, block.orbit, k1))
    return _independent(cands)


def realize(blocks: Sequence[FourierBlock], space: KleinSpace, y_kernels: dict | None = None) -> list[RealBasisFunction]:
    """Real basis for a conjugation-closed family of solved blocks.

    A block and its conjugate realise to the same functions, so only the first
    of each pair is expanded.
    """
    keys = {b.key for b in blocks}
    done = set()
    out = []
    for b in blocks:
        ck = b.conjugate_key()
        if ck not in keys:
            raise ConjugateNotInBox(f"conjugate of block zeta={b.zeta} orbit={b.orbit} is not in the box")
        if ck in done:
            continue
        done.add(b.key)
        out.extend(realize_block(b, space, (y_kernels or {}).get(b.key)))
    return out


# whole-box driver

@dataclass
class HarmonicBasis:
    space: KleinSpace
    kind: str
    blocks: list[FourierBlock]
    incomplete: list[FourierBlock]
    functions: list[RealBasisFunction]
    y_kernels: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        blocks = []
        for b in self.blocks:
            entry = {
                "zeta": list(b.zeta),
                "orbit": [list(l) for l in b.orbit],
                "kernel": [[str(x) for x in v] for v in b.kernel_basis],
            }
            if self.kind == "vector":
                entry["components_per_mode"] = self.space.k1
                entry["y_kernel"] = [[str(x) for x in v] for v in self.y_kernels.get(b.key, ())]
            blocks.append(entry)
        return {
            "space": self.space.to_dict(),
            "kind": self.kind,
            "mode_convention": "exp(2 pi i lam.x) * exp(pi i zeta.y)",
            "blocks": blocks,
            "incomplete_orbits": [{"zeta": list(b.zeta), "orbit": [list(l) for l in b.orbit]} for b in self.incomplete],
            "functions": [
                {
                    "zeta": list(f.zeta),
                    "orbit": [list(l) for l in f.orbit],
                    "components": [[[str(c), list(lam), list(zeta), kind] for c, lam, zeta, kind in comp] for comp in f.components],
                    "trig": f.describe(),
                }
                for f in self.functions
            ],
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)


def _solve(block, space, kind):
    if kind == "scalar":
        return scalar_kernel_basis(block, space), None
    return vector_kernel_basis(block, space), scalar_kernel_basis(block, space).kernel_basis


def fourier_basis(space: KleinSpace, kind: str = "scalar", lmax: int = 3, zmax: int = 3,
                  zetas: Sequence[Vec] | None = None, workers: int = 1) -> HarmonicBasis:
    """Solve every complete block in the box and realise a real basis."""
    if kind not in ("scalar", "vector"):
        raise ValueError("kind must be 'scalar' or 'vector'")
    lams, zs = default_box(space, lmax, zmax)
    if zetas is not None:
        zs = [tuple(z) for z in zetas]
    skeleton = orbit_blocks(space, lams, zs)
    complete = [b for b in skeleton if b.complete]
    incomplete = [b for b in skeleton if not b.complete]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            solved = list(pool.map(lambda b: _solve(b, space, kind), complete))
    else:
        solved = [_solve(b, space, kind) for b in complete]
    blocks = [s for s, _ in solved]
    y_kernels = {s.key: yk for s, yk in solved if yk is not None}
    funcs = realize(blocks, space, y_kernels)
    return HarmonicBasis(space, kind, blocks, incomplete, funcs, y_kernels)
