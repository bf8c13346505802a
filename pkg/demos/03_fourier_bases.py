"""
Exact Fourier bases
===================

Fourier modes split into orbits of the dual group action. On each orbit the
symmetry operator is a small rational matrix, and its kernel is computed
exactly.
"""
from kleinforge import harmonics as hm
from kleinforge import space as ks

# standard Klein bottle: cos for even Klein frequency, sin for odd
K = ks.standard_klein()
basis = hm.fourier_basis(K, "scalar", lmax=2, zmax=1)
for f in basis.functions[:6]:
    print(f.zeta, f.describe())

# transpose and flip, one block of nine modes
T = ks.transpose_and_flip()
order = [(0, 0), (-1, -1), (1, 1), (-1, 1), (1, -1), (-1, 0), (0, -1), (0, 1), (1, 0)]
M = hm.assemble_operator(T, order, (1, 1))
print("\n4 x operator on", order)
for row in M:
    print(" ".join(f"{int(4 * v):3d}" for v in row))
kernel = hm.exact_kernel(M)
print("kernel dimension:", len(kernel))
for v in kernel:
    print("  ", [str(c) for c in v])

# double flip leaves a single sin * sin mode in the same box
D = ks.double_flip()
for f in hm.fourier_basis(D, "scalar", lmax=1, zetas=[(1, 1), (-1, -1)]).functions:
    print("\ndouble flip:", f.describe())
