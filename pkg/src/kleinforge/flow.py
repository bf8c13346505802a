"""Streamlines of symmetric vector fields.

Integration happens in the covering space R^(k1+k2) with classical RK4 at a
fixed step; samples are folded into the fundamental domain for output.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from kleinforge.fields import check_vector_symmetry
from kleinforge.space import KleinSpace

DEFAULT_STEP = 1e-3


class NonFiniteField(FloatingPointError):
    pass


class AsymmetricField(ValueError):
    pass


@dataclass
class Trajectory:
    t: np.ndarray  # (N,)
    lifted: np.ndarray  # (N, k1 + k2)
    folded: np.ndarray  # (N, k1 + k2), in [0, 1)
    speed: np.ndarray  # (N,)


def _rhs(field: Callable, k1: int):
    def f(z):
        X, Y = field(z[..., :k1], z[..., k1:])
        v = np.concatenate([np.asarray(X, dtype=float), np.asarray(Y, dtype=float)], axis=-1)
        if not np.all(np.isfinite(v)):
            raise NonFiniteField("vector field returned NaN or inf")
        return v
    return f


def integrate_many(field: Callable, space: KleinSpace, seeds, step: float = DEFAULT_STEP, n_steps: int = 1000,
                   record_every: int = 1, check: bool = True) -> list[Trajectory]:
    """RK4 from every seed at once; seeds has shape (m, k1 + k2)."""
    if step <= 0:
        raise ValueError("step must be positive")
    if check:
        rep = check_vector_symmetry(field, space, n_samples=200, tol=1e-8)
        if not rep.passed:
            raise AsymmetricField(f"field breaks the symmetry (residual {rep.max_residual:.3g})")
    k1 = space.k1
    f = _rhs(field, k1)
    z = np.array(seeds, dtype=float).reshape(-1, space.dim)
    keep = list(range(0, n_steps + 1, record_every))
    if keep[-1] != n_steps:
        keep.append(n_steps)
    out = np.empty((len(keep), z.shape[0], space.dim))
    speed = np.empty((len(keep), z.shape[0]))
    slot = 0
    h = float(step)
    for n in range(n_steps + 1):
        if slot < len(keep) and keep[slot] == n:
            out[slot] = z
            speed[slot] = np.linalg.norm(f(z), axis=-1)
            slot += 1
        if n == n_steps:
            break
        k1_ = f(z)
        k2_ = f(z + 0.5 * h * k1_)
        k3_ = f(z + 0.5 * h * k2_)
        k4_ = f(z + h * k3_)
        z = z + (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_)
    t = np.asarray(keep, dtype=float) * h
    trajs = []
    for s in range(z.shape[0]):
        lifted = out[:, s, :]
        xc, yc, _, _ = space.canonicalize(lifted[:, :k1], lifted[:, k1:])
        trajs.append(Trajectory(t, lifted.copy(), np.concatenate([xc, yc], axis=-1), speed[:, s].copy()))
    return trajs


def integrate(field: Callable, space: KleinSpace, seed, step: float = DEFAULT_STEP, n_steps: int = 1000,
              record_every: int = 1, check: bool = True) -> Trajectory:
    return integrate_many(field, space, np.asarray(seed, dtype=float)[None, :], step, n_steps, record_every, check)[0]


def grid_seeds(space: KleinSpace, density: int) -> np.ndarray:
    """Cell centres of a uniform grid over [0,1)^(k1+k2); density^(k1+k2) seeds."""
    t = (np.arange(density) + 0.5) / density
    mesh = np.meshgrid(*([t] * space.dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def streamline_grid(field: Callable, space: KleinSpace, grid_density: int, step: float = DEFAULT_STEP,
                    n_steps: int = 1000, record_every: int = 1) -> list[Trajectory]:
    return integrate_many(field, space, grid_seeds(space, grid_density), step, n_steps, record_every)


def write_csv(trajs: list[Trajectory], path, space: KleinSpace):
    names = [f"x{i + 1}" for i in range(space.k1)] + [f"y{j + 1}" for j in range(space.k2)]
    with open(path, "w") as fh:
        fh.write("traj_id,t," + ",".join(names) + ",speed\n")
        for tid, tr in enumerate(trajs):
            for t, p, s in zip(tr.t, tr.folded, tr.speed):
                fh.write(f"{tid},{float(t)!r}," + ",".join(repr(float(v)) for v in p) + f",{float(s)!r}\n")
