"""
Pinch-start detection from hand kinematics.

Two signals are used: the thumb-index separation speed (``velocity_ti``,
m/s) and the palm rotational speed (``velocity_rot``, deg/s). The onset is
the first sustained rise of ``velocity_ti``; the pinch start is found by
walking back from the onset to the latest frame that closes a quiet run of
``velocity_rot``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KinematicSeries:
    timestamps: np.ndarray
    velocity_ti: np.ndarray
    velocity_rot: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=float)
        vti = np.asarray(self.velocity_ti, dtype=float)
        vrot = np.asarray(self.velocity_rot, dtype=float)
        if not (t.ndim == vti.ndim == vrot.ndim == 1):
            raise ValueError("kinematic channels must be one-dimensional")
        if not (len(t) == len(vti) == len(vrot)):
            raise ValueError("kinematic channels must have equal length")
        if len(t) == 0:
            raise ValueError("empty kinematic series")
        if not (np.all(np.isfinite(vti)) and np.all(np.isfinite(vrot))):
            raise ValueError("velocities must be finite")
        if np.any(np.diff(t) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "velocity_ti", vti)
        object.__setattr__(self, "velocity_rot", vrot)

    def __len__(self):
        return len(self.timestamps)

    @classmethod
    def from_velocities(cls, velocity_ti, velocity_rot=None, frame_rate=72.0):
        """Convenience constructor with evenly spaced timestamps."""
        vti = np.asarray(velocity_ti, dtype=float)
        vrot = np.zeros_like(vti) if velocity_rot is None else velocity_rot
        return cls(np.arange(len(vti)) / frame_rate, vti, vrot)


def read_kinematic_csv(path) -> KinematicSeries:
    """Read a CSV with columns ``t, velocity_ti, velocity_rot``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"t", "velocity_ti", "velocity_rot"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"kinematic CSV missing columns: {sorted(missing)}")
        rows = [(float(r["t"]), float(r["velocity_ti"]), float(r["velocity_rot"]))
                for r in reader]
    if not rows:
        raise ValueError("empty kinematic series")
    t, vti, vrot = map(np.asarray, zip(*rows))
    return KinematicSeries(t, vti, vrot)


def _first_run(mask: np.ndarray, run: int) -> int | None:
    count = 0
    for i, m in enumerate(mask):
        count = count + 1 if m else 0
        if count >= run:
            return i - run + 1
    return None


def detect_onset(series: KinematicSeries, vti_threshold: float = 0.05,
                 run: int = 3) -> int | None:
    """Index of the first frame starting ``run`` consecutive frames with
    ``velocity_ti > vti_threshold``; ``None`` when there is no such run."""
    if len(series) == 0:
        raise ValueError("empty kinematic series")
    return _first_run(series.velocity_ti > vti_threshold, run)


def detect_pinch_start(series: KinematicSeries, rot_threshold: float = 0.1,
                       run: int = 5) -> int | None:
    """Latest index ``j <= onset`` such that frames ``j-run+1 .. j`` all have
    ``velocity_rot < rot_threshold``.

    Returns 0 when an onset exists but no frame qualifies (too little
    history), and ``None`` when there is no onset at all.
    """
    onset = detect_onset(series)
    if onset is None:
        return None
    quiet = series.velocity_rot < rot_threshold
    count = 0
    closes_run = np.zeros(len(quiet), dtype=bool)
    for i, q in enumerate(quiet):
        count = count + 1 if q else 0
        closes_run[i] = count >= run
    hits = np.flatnonzero(closes_run[: onset + 1])
    return int(hits[-1]) if len(hits) else 0
