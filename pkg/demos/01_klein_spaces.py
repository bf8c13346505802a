"""
Generalised Klein bottles
=========================

A space is a quotient of R^(k1+k2). Unit steps in a Klein coordinate y_j
reflect the toroidal coordinates x_i with B[i, j] = 1.
"""
import numpy as np

from kleinforge import space as ks

# the ordinary Klein bottle: one toroidal and one Klein coordinate
K = ks.standard_klein()
xc, yc, g = K.canonical_element(np.array([0.3]), np.array([1.2]))
print("(0.3, 1.2) folds to", (xc.tolist(), yc.tolist()), "via a =", g.a, "b =", g.b)

# fully coupled: every Klein step flips every toroidal coordinate
H = ks.full_coupling(1, 3)
print("\nreduced generators of the full coupling K(1,3):")
for r in H.reduced_generators():
    print(f"  {r.family:13s} a={r.element.a} b={r.element.b}")

# duplicate columns of B hide flat tori inside the quotient
ht = H.hidden_tori()
print("\nhidden tori (duplicate columns):", ht.duplicate_column_classes)
print("GF(2) rank deficiency:", ht.gf2_rank_deficiency)

# matrix mode: swap the two toroidal coordinates on each Klein step
S = ks.swap_flip()
x, y = S.act(ks.GroupElement((0, 0), (1,)), np.array([0.1, 0.7]), np.array([0.2]))
print("\nswap-flip sends (0.1, 0.7; 0.2) to", x.tolist(), y.tolist())
