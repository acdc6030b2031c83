"""
==================================
A vertical segment is not enough
==================================

The flat 720-gon with one point lifted above its vertex ``(1, 0)`` also has
a vertical segment in its boundary, yet the fiber point nearest the origin
always stays in the plane.  That selection is continuous, so a kernel
direction on the boundary breaks openness but need not break selections.
"""
from minksplit.gallery import remark2_jump_experiment

exp = remark2_jump_experiment(n=720, delta=0.01, n_path=1000)
print("largest jump along the kernel:", exp.report.max_jump)
print("largest full jump (target motion):", round(exp.full_report.max_jump, 4))
print("highest selected point:", abs(exp.selections[:, 2]).max())
