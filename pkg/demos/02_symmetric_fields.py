"""
Fields that respect the symmetry
================================

Switching functions T1, T2 trade places under unit Klein steps, which makes
the product ansatz symmetric by construction. The randomised check measures
how far a field is from symmetric.
"""
import numpy as np

from kleinforge import fields, harmonics as hm
from kleinforge import space as ks

rng = np.random.default_rng(0)
sp = ks.full_coupling(2, 2)

y = rng.uniform(-2, 2, (5, 2))
t1, t2, s = fields.switching_all(sp, y)
print("T1 + T2 - 1, worst:", np.max(np.abs(t1 + t2 - 1)))

F = fields.ScalarAnsatz.random(sp, rng).bind(sp)
print("scalar ansatz:", fields.check_scalar_symmetry(F, sp).max_residual)
V = fields.VectorAnsatz.random(sp, rng).bind(sp)
print("vector ansatz:", fields.check_vector_symmetry(V, sp).max_residual)

# an arbitrary field is not symmetric, its group average is
raw = lambda x, y: np.sin(2 * np.pi * x[..., 0]) * np.cos(np.pi * y[..., 1]) + x[..., 1] ** 2
print("raw field:    ", fields.check_scalar_symmetry(raw, sp).max_residual)
avg = hm.symmetrize_scalar(lambda x, y: np.cos(2 * np.pi * (x[..., 0] + y[..., 0])), sp)
print("averaged cos: ", fields.check_scalar_symmetry(avg, sp).max_residual)
