"""
Pointing at a target grid
=========================

Build the 7x7 scene, cast a few rays and watch the snap-to scores settle.
"""

import numpy as np

from heisenvote.geometry import Ray, angular_size, build_grid, raycast
from heisenvote.snapto import ScoreBoard, snap_target, update_scores

# 42 cm targets 70 cm apart, 8 m away; only the inner 5x5 can be picked
scene = build_grid(0.42, 0.70)
print(scene.rows, "x", scene.cols, "grid,", len(scene.selectable_ids), "selectable")
print("each target spans %.3f degrees" % angular_size(0.42, 8.0))

eye = (0.0, 0.0, 0.0)
for target in (24, 16, 32):
    ray = Ray.toward(eye, scene.center(target))
    print("aim at", target, "-> hit", raycast(ray, scene))

# aiming between two neighbours hits nothing
gap = (scene.center(24) + scene.center(25)) / 2
print("aim at the gap -> hit", raycast(Ray.toward(eye, gap), scene))

###############################################################################
# Score-based selection never misses: the best running score wins.

board = ScoreBoard.for_layout(scene)
ray = Ray.toward(eye, gap + np.array([0.02, 0.0, 0.0]))
for step in range(6):
    board = update_scores(board, ray, scene)
    print("frame", step, "snap ->", snap_target(board),
          "score %.3f" % board.scores[snap_target(board)])
