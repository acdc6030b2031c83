"""
=============================================
A sum map that forgets one factor
=============================================

Let ``A`` be the helix hull, ``B = [0, 1]`` and ``L(a, b) = P a``: the second
factor is ignored.  Both factors are nice, but the kernel of ``L`` contains
all of ``{0} x R``, so splitting the identity of the disk through ``L`` runs
into the helix obstruction again.
"""
from minksplit.gallery import example32_experiment

splits, rep = example32_experiment(n=720, delta=0.01, n_path=1000)
print("samples:", len(splits))
print("largest jump of the first factor:", round(rep.max_jump, 4),
      "on edge", rep.edges[rep.argmax_edge])
print("first factor at the ends:", splits[0].a.round(3), splits[-1].a.round(3))
