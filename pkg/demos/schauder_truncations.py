"""
==========================================
Openness degrades on truncated bodies
==========================================

``C_N = conv{e_k / k, 2 e_1 - e_k / k}`` is symmetric about ``e_1``.
Projecting away ``e_1`` sends ``e_n / n`` to a point at distance ``1/n`` of
the image of ``e_1``, yet the whole fiber over it is ``e_n / n`` itself, at
distance about 1 from ``e_1``.  The ratio of the two grows like ``n``: every
truncation is open, with a modulus that blows up as ``N`` grows.
"""
import numpy as np

from minksplit.gallery import lemma25_bound, schauder_experiment

print(" N   min dist   modulus   min margin over the distance bound")
for N in (5, 10, 20, 40):
    r = schauder_experiment(N)
    print(f"{N:3d}  {r.min_center_distance:8.4f}  {r.probe.modulus:8.2f}  {r.min_bound_margin:10.2e}")

# the bound behind the margin column: distance of lam e_1 + e_n/n to the body
lam = np.array([0.1, 0.5, 1.0])
print("bounds at n=10:", [round(lemma25_bound(l, 10), 5) for l in lam])
