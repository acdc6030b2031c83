"""
==========================================
A projection with no continuous selection
==========================================

Take one turn of the helix ``(cos t, sin t, t)`` and its convex hull C.
Projecting C to the plane gives the disk.  Walk around the boundary of the
image and pick, over each point, the fiber point nearest the origin.  Over a
boundary point at angle t the fiber is the single helix point at height t,
so the selection climbs from 0 to 2 pi and has to jump back.
"""
import numpy as np

from minksplit.fibers import FiberSpec, fiber_diameter
from minksplit.gallery import horizontal_projection, spiral_body, spiral_jump_experiment

exp = spiral_jump_experiment(n=720, delta=0.01, n_path=1000)
print("height at the start of the path:", round(exp.start_height, 4))
print("height at the end of the path:  ", round(exp.end_height, 4))
print("largest jump between neighbours:", round(exp.report.max_jump, 4),
      "on edge", exp.report.edges[exp.report.argmax_edge])

# Every intermediate height is hit, so the jump sits on the closing edge.
heights = exp.selections[:, 2]
print("heights increase along the path:", bool(np.all(np.diff(heights) > 0)))

# The culprit is the vertical segment over (1, 0).
spec = FiberSpec(spiral_body(720), horizontal_projection(), [1.0, 0.0])
print("fiber diameter over (1,0):", round(fiber_diameter(spec), 4), "vs 2 pi =", round(2 * np.pi, 4))
