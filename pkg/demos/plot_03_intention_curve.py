"""
How accurate is the pointer just before a click?
================================================

Fit the cubic accuracy curve over the last 0.4 s of each selection and
turn it into voting weights.
"""

import numpy as np

from heisenvote.curve import WeightFunction, fit_curve, label_arrays
from heisenvote.sim import default_models, generate_dataset

sim, pert = default_models("SH", participants=8, events_per_participant=72)
events = generate_dataset(sim, pert, seed=3)
tau, correct = label_arrays(events)
print(len(events), "selections,", len(tau), "history frames")

curve = fit_curve((tau, correct))
print("f(tau) = %.3f tau^3 + %.3f tau^2 + %.3f tau + %.3f" % curve.coefficients)

###############################################################################
# Accuracy peaks a little before confirmation and drops at the very end:
# that drop is the confirmation gesture knocking the ray off target.

for x in np.linspace(0, 1, 6):
    print("tau %.1f  accuracy %.3f" % (x, curve(x)))

wf = WeightFunction.from_curve(curve)
print("sigmoid centre A = %.3f" % wf.A)
for x in (0.0, 0.3, 0.9):
    print("weight at tau %.1f: %.3f" % (x, wf(x)))
