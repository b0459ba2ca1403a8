"""Small builders shared by the test modules."""
import numpy as np

from heisenvote.trace import HistorySample, SelectionEvent


def straight_event(indicated, dt=0.1, target=24, technique="DC", width=0.42, spacing=0.70,
                   action_index=None, participant="P01"):
    """Event with evenly spaced frames looking straight ahead; confirms on the last frame."""
    n = len(indicated)
    t = np.arange(n) * dt
    ind = [-1 if i is None else i for i in indicated]
    a = n - 1 if action_index is None else action_index
    return SelectionEvent(
        participant=participant, technique=technique, width=width, spacing=spacing,
        target=target, t=t, origins=np.zeros((n, 3)), directions=np.tile([0.0, 0.0, 1.0], (n, 1)),
        indicated=np.asarray(ind), action_start_t=float(t[a]), confirm_t=float(t[-1]),
        final_selected=indicated[-1])


def history(ids, taus=None):
    """Newest-first history with evenly spaced taus in [0, 1] unless given."""
    if taus is None:
        taus = np.linspace(0.0, 1.0, len(ids)) if len(ids) > 1 else [0.0]
    return [HistorySample(float(t), i) for t, i in zip(taus, ids)]
