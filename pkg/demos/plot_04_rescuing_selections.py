"""
Rescuing Heisenberg errors
==========================

Compare the original click with voting over the intention history.
"""

from heisenvote.mitigation import Strategy, resolve
from heisenvote.report import classify_event, fit_weights
from heisenvote.sim import default_models, generate_dataset

sim, pert = default_models("SC", participants=6, events_per_participant=54)
data = generate_dataset(sim, pert, seed=8)
train = data.filter(lambda e: e.participant != "P06")
test = data.filter(lambda e: e.participant == "P06")
wf = fit_weights(train)["SC"]

strategies = {"origin": Strategy("origin"), "vote": Strategy("vote"),
              "weighted vote": Strategy("wvote", weights=wf)}

# events that started on target but ended elsewhere
shaken = [e for e in test if classify_event(e).heisenberg_error]
print(len(shaken), "of", len(test), "test selections were shaken off target")
for e in shaken[:5]:
    picks = {name: resolve(e, s) for name, s in strategies.items()}
    print("target", e.target, picks)

for name, s in strategies.items():
    errors = sum(resolve(e, s) != e.target for e in test)
    print("%-14s %5.1f%% errors" % (name, 100 * errors / len(test)))
