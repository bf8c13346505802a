"""Generalised Klein bottles as quotients of R^(k1+k2).

A space is given either by a binary k1 x k2 matrix ``B`` (diagonal mode:
unit steps in Klein coordinate ``y_j`` reflect every ``x_i`` with
``B[i, j] == 1``) or by commuting involutive integer matrices ``M_j``
(matrix mode: a unit step in ``y_j`` applies ``M_j`` to ``x``).

Group elements are pairs ``(a, b)`` of integer vectors acting by
``(a, b) . (x, y) = (H(b) x + a, y + b)``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from kleinforge import gf2

DEFAULT_TOL = 1e-9


class SpaceError(ValueError):
    """Invalid space definition."""


class ZeroRowOrColumn(SpaceError):
    pass


class DisconnectedBipartite(SpaceError):
    pass


class NonCommuting(SpaceError):
    pass


class NonInvolutive(SpaceError):
    pass


class NotUnimodular(SpaceError):
    pass


class ModeUnsupported(SpaceError):
    pass


@dataclass(frozen=True)
class GroupElement:
    a: tuple[int, ...]
    b: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(int(v) for v in self.a))
        object.__setattr__(self, "b", tuple(int(v) for v in self.b))


@dataclass(frozen=True)
class Relation:
    """Generating relation ``p ~ element . p``; ``family`` names its role."""

    family: str
    element: GroupElement


@dataclass(frozen=True)
class HiddenTori:
    duplicate_column_classes: tuple[tuple[int, ...], ...]
    gf2_rank_deficiency: int


def _parity_code(beta) -> int:
    return sum((int(v) & 1) << j for j, v in enumerate(beta))


class KleinSpace:
    """Validated generalised Klein bottle. Immutable after construction."""

    def __init__(self, k1: int, k2: int, B=None, matrices=None, *, check_irreducible: bool = True):
        if k1 < 1 or k2 < 0:
            raise SpaceError("need k1 >= 1 and k2 >= 0")
        if (B is None) == (matrices is None):
            raise SpaceError("give exactly one of B or matrices")
        self.k1, self.k2 = int(k1), int(k2)
        if B is not None:
            self.mode = "diagonal"
            B = np.asarray(B, dtype=np.int64)
            if B.shape != (k1, k2):
                raise SpaceError(f"B has shape {B.shape}, expected {(k1, k2)}")
            if not np.all((B == 0) | (B == 1)):
                raise SpaceError("B must be binary")
            _check_bipartite(B, check_irreducible)
            self.B = B
            self.matrices = tuple(np.diag(np.where(B[:, j] == 1, -1, 1)) for j in range(k2))
        else:
            self.mode = "matrices"
            ms = tuple(np.asarray(m, dtype=np.int64) for m in matrices)
            if len(ms) != k2:
                raise SpaceError(f"expected {k2} matrices, got {len(ms)}")
            _check_matrices(ms, k1)
            self.B = None
            self.matrices = ms
        for m in self.matrices:
            m.setflags(write=False)
        # H(beta) for every parity class beta in Z_2^k2, indexed by _parity_code
        eye = np.eye(k1, dtype=np.int64)
        table = []
        for code in range(1 << k2):
            h = eye
            for j in range(k2):
                if (code >> j) & 1:
                    h = h @ self.matrices[j]
            table.append(h)
        self._phi = np.array(table, dtype=np.int64).reshape(1 << k2, k1, k1)
        self._phi.setflags(write=False)

    # construction helpers

    @classmethod
    def diagonal(cls, B, **kw) -> "KleinSpace":
        B = np.atleast_2d(np.asarray(B, dtype=np.int64))
        return cls(B.shape[0], B.shape[1], B=B, **kw)

    @classmethod
    def from_matrices(cls, matrices, k1: int | None = None) -> "KleinSpace":
        matrices = [np.atleast_2d(np.asarray(m, dtype=np.int64)) for m in matrices]
        if k1 is None:
            if not matrices:
                raise SpaceError("k1 is required when no matrices are given")
            k1 = matrices[0].shape[0]
        return cls(k1, len(matrices), matrices=matrices)

    @classmethod
    def from_dict(cls, d: dict, **kw) -> "KleinSpace":
        try:
            k1, k2 = int(d["k1"]), int(d["k2"])
            mode = d.get("mode", "diagonal")
            if mode == "diagonal":
                B = np.asarray(d["B"], dtype=np.int64).reshape(k1, k2)
                return cls(k1, k2, B=B, **kw)
            if mode == "matrices":
                return cls(k1, k2, matrices=[np.asarray(m, dtype=np.int64) for m in d["M"]])
        except (KeyError, TypeError) as exc:
            raise SpaceError(f"malformed space spec: {exc!r}") from exc
        raise SpaceError(f"unknown mode {mode!r}")

    @classmethod
    def from_json(cls, path, **kw) -> "KleinSpace":
        return cls.from_dict(json.loads(Path(path).read_text()), **kw)

    def to_dict(self) -> dict:
        d = {"k1": self.k1, "k2": self.k2, "mode": self.mode}
        if self.mode == "diagonal":
            d["B"] = self.B.tolist()
        else:
            d["M"] = [m.tolist() for m in self.matrices]
        return d

    def __repr__(self):
        if self.mode == "diagonal":
            return f"KleinSpace(k1={self.k1}, k2={self.k2}, B={self.B.tolist()})"
        return f"KleinSpace(k1={self.k1}, k2={self.k2}, M={[m.tolist() for m in self.matrices]})"

    @property
    def dim(self) -> int:
        return self.k1 + self.k2

    # group structure

    def holonomy(self, b) -> np.ndarray:
        """Integer matrix H(b) applied to x when y moves by b."""
        b = np.asarray(b, dtype=np.int64).reshape(self.k2)
        return self._phi[_parity_code(b)].copy()

    def parity_classes(self):
        """All beta in {0,1}^k2 with H(beta), in code order."""
        for code in range(1 << self.k2):
            beta = tuple((code >> j) & 1 for j in range(self.k2))
            yield beta, self._phi[code]

    def identity(self) -> GroupElement:
        return GroupElement((0,) * self.k1, (0,) * self.k2)

    def compose(self, g1: GroupElement, g2: GroupElement) -> GroupElement:
        """``g1 <> g2``, the element acting as g1 after g2."""
        self._check_element(g1)
        self._check_element(g2)
        a = self.holonomy(g1.b) @ np.asarray(g2.a, dtype=np.int64) + np.asarray(g1.a, dtype=np.int64)
        b = np.asarray(g1.b, dtype=np.int64) + np.asarray(g2.b, dtype=np.int64)
        return GroupElement(a, b)

    def inverse(self, g: GroupElement) -> GroupElement:
        self._check_element(g)
        h_inv = self.holonomy(g.b)  # involutive
        a = -(h_inv @ np.asarray(g.a, dtype=np.int64))
        return GroupElement(a, -np.asarray(g.b, dtype=np.int64))

    def act(self, g: GroupElement, x, y):
        """Apply ``g`` to points. ``x``: (..., k1), ``y``: (..., k2)."""
        self._check_element(g)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        h = self.holonomy(g.b)
        return x @ h.T + np.asarray(g.a, dtype=float), y + np.asarray(g.b, dtype=float)

    def _check_element(self, g: GroupElement):
        if len(g.a) != self.k1 or len(g.b) != self.k2:
            raise ValueError(f"group element {g} does not match k1={self.k1}, k2={self.k2}")

    # quotient

    def canonicalize(self, x, y):
        """Representative in [0,1)^(k1+k2) and the element mapping it back.

        Returns ``(xc, yc, a, b)`` with ``(a, b) . (xc, yc) == (x, y)``.
        Works on a single point or a batch.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        b = np.floor(y)
        yc = y - b
        # y - floor(y) can round up to 1.0 for tiny negative y
        over = yc >= 1.0
        if np.any(over):
            yc = np.where(over, 0.0, yc)
            b = np.where(over, b + 1, b)
        b = b.astype(np.int64)
        codes = (b & 1) @ (1 << np.arange(self.k2, dtype=np.int64)) if self.k2 else np.zeros(b.shape[:-1], dtype=np.int64)
        h = self._phi[codes]  # involutive, so H(b)^-1 == H(b)
        u = np.einsum("...ij,...j->...i", h, x)
        m = np.floor(u)
        xc = u - m
        over = xc >= 1.0
        if np.any(over):
            xc = np.where(over, 0.0, xc)
            m = np.where(over, m + 1, m)
        a = np.einsum("...ij,...j->...i", h, m.astype(np.int64))
        return xc, yc, a, b

    def canonical_element(self, x, y) -> tuple[np.ndarray, np.ndarray, GroupElement]:
        xc, yc, a, b = self.canonicalize(np.asarray(x, dtype=float).reshape(self.k1), np.asarray(y, dtype=float).reshape(self.k2))
        return xc, yc, GroupElement(a, b)

    def quotient_distance(self, p, q) -> np.ndarray:
        """Sup-norm distance between the orbits of ``p = (x, y)`` and ``q``.

        Exact for separations below 1/2; both points are folded first, then the
        Klein offsets in {-1, 0, 1}^k2 and nearest toroidal shifts are tried.
        """
        xp, yp, _, _ = self.canonicalize(*p)
        xq, yq, _, _ = self.canonicalize(*q)
        best = None
        for off in itertools.product((-1, 0, 1), repeat=self.k2):
            off = np.asarray(off, dtype=np.int64)
            h = self.holonomy(off)
            xs = np.einsum("ij,...j->...i", h, xp)
            dx = xs - xq
            dx = np.abs(dx - np.round(dx))
            dy = np.abs(yp + off - yq)
            d = np.max(np.concatenate([dx, dy], axis=-1), axis=-1) if self.k2 else np.max(dx, axis=-1)
            best = d if best is None else np.minimum(best, d)
        return best

    def equivalent(self, p, q, tol: float = DEFAULT_TOL):
        return self.quotient_distance(p, q) <= tol

    # generators and structure

    def basic_generators(self) -> list[Relation]:
        rels = [Relation("toroidal", GroupElement(np.eye(self.k1, dtype=int)[i], np.zeros(self.k2, dtype=int))) for i in range(self.k1)]
        rels += [Relation("klein", GroupElement(np.zeros(self.k1, dtype=int), np.eye(self.k2, dtype=int)[j])) for j in range(self.k2)]
        return rels

    def reduced_generators(self) -> list[Relation]:
        """Generators split into toroidal, double-Klein, kernel and flip families.

        Diagonal mode only: the kernel family spans ker(B) over GF(2), the flip
        family uses a maximal independent column set of B.
        """
        if self.mode != "diagonal":
            raise ModeUnsupported("reduced generators need a binary matrix B")
        k1, k2 = self.k1, self.k2
        zeros_a = (0,) * k1
        info = gf2.rank_kernel_image(self.B)
        rels = [Relation("toroidal", GroupElement(np.eye(k1, dtype=int)[i], (0,) * k2)) for i in range(k1)]
        rels += [Relation("double_klein", GroupElement(zeros_a, 2 * np.eye(k2, dtype=int)[j])) for j in range(k2)]
        rels += [Relation("kernel", GroupElement(zeros_a, c)) for c in gf2.local_kernel_basis(self.B)]
        rels += [Relation("flip", GroupElement(zeros_a, np.eye(k2, dtype=int)[j])) for j in info.image_basis_columns]
        return rels

    def test_generators(self) -> list[Relation]:
        if self.mode == "diagonal":
            return self.reduced_generators()
        return self.basic_generators()

    def hidden_tori(self) -> HiddenTori:
        if self.mode != "diagonal":
            raise ModeUnsupported("hidden-torus report needs a binary matrix B")
        classes: dict[tuple[int, ...], list[int]] = {}
        for j in range(self.k2):
            classes.setdefault(tuple(self.B[:, j]), []).append(j)
        dup = tuple(tuple(v) for v in classes.values() if len(v) > 1)
        return HiddenTori(dup, self.k2 - gf2.rank(self.B))

    def gf2_rank(self) -> int:
        if self.mode != "diagonal":
            raise ModeUnsupported("rank over GF(2) needs a binary matrix B")
        return gf2.rank(self.B)


def _check_bipartite(B: np.ndarray, check_irreducible: bool):
    if not check_irreducible:
        return
    if np.any(B.sum(axis=1) == 0) or np.any(B.sum(axis=0) == 0):
        raise ZeroRowOrColumn("every toroidal and every Klein coordinate must be coupled")
    k1, k2 = B.shape
    adj = np.zeros((k1 + k2, k1 + k2), dtype=np.int8)
    adj[:k1, k1:] = B
    adj[k1:, :k1] = B.T
    n_comp, _ = connected_components(csr_matrix(adj), directed=False)
    if n_comp != 1:
        raise DisconnectedBipartite(f"coupling graph splits into {n_comp} components")


def _check_matrices(ms, k1: int):
    eye = np.eye(k1, dtype=np.int64)
    for j, m in enumerate(ms):
        if m.shape != (k1, k1):
            raise SpaceError(f"M_{j} has shape {m.shape}, expected {(k1, k1)}")
        if round(abs(np.linalg.det(m))) != 1:
            raise NotUnimodular(f"M_{j} must have determinant +-1")
        if not np.array_equal(m @ m, eye):
            raise NonInvolutive(f"M_{j} must square to the identity")
    for i, j in itertools.combinations(range(len(ms)), 2):
        if not np.array_equal(ms[i] @ ms[j], ms[j] @ ms[i]):
            raise NonCommuting(f"M_{i} and M_{j} do not commute")


# named examples used across the docs and tests

def standard_klein() -> KleinSpace:
    return KleinSpace.diagonal([[1]])


def full_coupling(k1: int, k2: int) -> KleinSpace:
    return KleinSpace.diagonal(np.ones((k1, k2), dtype=int))


def swap_flip() -> KleinSpace:
    """k1=2, k2=1; the Klein step swaps x1 and x2."""
    return KleinSpace.from_matrices([[[0, 1], [1, 0]]])


def transpose_and_flip() -> KleinSpace:
    """k1=k2=2 with H(n1, n2) = (-1)^n1 P^n2, P the swap."""
    return KleinSpace.from_matrices([-np.eye(2, dtype=int), [[0, 1], [1, 0]]])


def double_flip() -> KleinSpace:
    """k1=k2=2, each Klein coordinate reflects its own toroidal coordinate."""
    return KleinSpace.from_matrices([[[-1, 0], [0, 1]], [[1, 0], [0, -1]]])
