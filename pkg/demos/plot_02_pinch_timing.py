"""
When did the pinch start?
=========================

Thumb-index closing speed marks the pinch onset; the hand going still
just before it marks the start of the confirmation action.
"""

import numpy as np

from heisenvote.pinch import KinematicSeries, detect_onset, detect_pinch_start

fps = 72
t = np.arange(30) / fps
vti = np.r_[np.zeros(20), np.full(10, 0.2)]      # fingers close from frame 20
vrot = np.r_[np.full(12, 3.0), np.full(18, 0.02)]  # wrist settles at frame 12
vrot[18:] = 2.0                                   # and turns again as the pinch begins

series = KinematicSeries(t, vti, vrot)
onset = detect_onset(series)
start = detect_pinch_start(series)
print("onset frame", onset, "at %.3f s" % t[onset])
print("pinch start frame", start, "at %.3f s" % t[start])

# a restless hand never quiets down, so the start falls back to the first frame
restless = KinematicSeries(t, vti, np.full(30, 1.0))
print("restless hand:", detect_pinch_start(restless))
