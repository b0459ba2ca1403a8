"""
Synthetic selection traces with controllable aim noise and confirmation-time
perturbations.

Each event has three phases sampled at ``frame_rate``:

* approach: minimum-jerk spherical interpolation from a random start
  direction to the aim endpoint, plus white angular jitter. With
  probability ``correction_prob`` the primary movement lands beside the
  target (0.5-1 pitch away) and a corrective submovement follows;
* dwell: the aim endpoint plus jitter. The endpoint is the target direction
  offset by a 2-D Gaussian of per-axis s.d. ``aim_noise_sd``;
* confirmation: from the action-start frame the direction glides (again
  minimum-jerk, no jitter) to the perturbed direction over the first
  ``shift_fraction`` of the segment and holds it until confirmation. The
  perturbation draws a quadrant and a magnitude.

Direct techniques indicate by raycast, score-based ones by the running
snap-to score. Hand techniques also carry synthetic pinch kinematics.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from importlib import resources

import numpy as np
from scipy import optimize, stats

from .geometry import (STUDY_SPACINGS, STUDY_WIDTHS, QUADRANTS, UP, Quadrant, Ray,
                       SceneLayout, normalize, raycast_many, rotate_toward, slerp,
                       view_basis)
from .snapto import SnapConfig, score_trace, snap_many
from .trace import DIRECT, HAND, TECHNIQUES, Dataset, SelectionEvent, layout_for

HAND_ORIGIN = (0.15, -0.25, 0.35)  # metres, right hand relative to the eye


@dataclass(frozen=True)
class PerturbationModel:
    quadrant_probs: tuple[float, float, float, float]
    magnitude_mean: float
    magnitude_sd: float
    onset_lead: float = 0.1
    shift_fraction: float = 1.0  # share of the confirmation segment spent moving
    distribution: str = "truncnorm"  # or "lognormal"

    def __post_init__(self):
        p = np.asarray(self.quadrant_probs, dtype=float)
        if p.shape != (4,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("quadrant_probs must be 4 non-negative values summing to 1")
        if self.magnitude_mean < 0 or self.magnitude_sd < 0:
            raise ValueError("magnitude mean and s.d. must be non-negative")
        if not self.onset_lead > 0:
            raise ValueError("onset_lead must be positive")
        if not 0.0 < self.shift_fraction <= 1.0:
            raise ValueError("shift_fraction must lie in (0, 1]")
        if self.distribution not in ("truncnorm", "lognormal"):
            raise ValueError(f"unknown magnitude distribution {self.distribution!r}")
        object.__setattr__(self, "quadrant_probs", tuple(float(x) for x in p))

    @classmethod
    def from_percentages(cls, percent, **kwargs) -> "PerturbationModel":
        p = np.asarray(percent, dtype=float)
        return cls(tuple(p / p.sum()), **kwargs)

    @cached_property
    def _location(self) -> float:
        # location of the zero-truncated normal whose mean is magnitude_mean
        m, s = self.magnitude_mean, self.magnitude_sd
        if s == 0 or m == 0:
            return m

        def mean_gap(mu):
            return stats.truncnorm.mean(-mu / s, np.inf, loc=mu, scale=s) - m

        return optimize.brentq(mean_gap, m - 40 * s, m, xtol=1e-14)

    def sample_magnitude(self, rng: np.random.Generator) -> float:
        m, s = self.magnitude_mean, self.magnitude_sd
        if m == 0 or s == 0:
            return m
        if self.distribution == "lognormal":
            sigma2 = math.log1p((s / m) ** 2)
            return float(rng.lognormal(math.log(m) - sigma2 / 2, math.sqrt(sigma2)))
        mu = self._location
        while True:
            x = rng.normal(mu, s)
            if x >= 0:
                return float(x)


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``aim_noise_sd`` is the per-axis s.d. (degrees) of where the user settles
    relative to the target centre; ``jitter_sd`` is frame-to-frame tremor.
    Approach and dwell durations are means; each event draws them uniformly
    from [0.75, 1.25] and [0.25, 1.75] times the mean respectively.
    """

    technique: str = "DC"
    widths: tuple[float, ...] = STUDY_WIDTHS
    spacings: tuple[float, ...] = STUDY_SPACINGS
    participants: int = 24
    events_per_participant: int = 162
    frame_rate: float = 72.0
    aim_noise_sd: float = 0.3
    jitter_sd: float = 0.03
    approach_duration: float = 0.5
    dwell_duration: float = 0.3
    approach_angle: tuple[float, float] = (4.0, 12.0)  # degrees
    correction_prob: float = 0.0
    correction_duration: float = 0.12
    snap: SnapConfig = field(default_factory=SnapConfig)
    record_scores: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.technique not in TECHNIQUES:
            raise ValueError(f"unknown technique {self.technique!r}")
        if not (self.frame_rate > 0 and self.approach_duration > 0 and self.dwell_duration > 0):
            raise ValueError("frame rate and durations must be positive")
        if not 0.0 <= self.correction_prob <= 1.0 or not self.correction_duration > 0:
            raise ValueError("invalid corrective-submovement settings")
        if self.aim_noise_sd < 0 or self.jitter_sd < 0:
            raise ValueError("noise levels must be non-negative")
        if not self.widths or not self.spacings:
            raise ValueError("at least one width and one spacing are required")
        if self.participants < 0 or self.events_per_participant < 0:
            raise ValueError("counts must be non-negative")

    @property
    def conditions(self) -> list[tuple[float, float]]:
        return [(w, s) for w in self.widths for s in self.spacings]


def load_calibration(path=None) -> dict:
    """Per-technique calibration; the embedded defaults when ``path`` is None."""
    if path is None:
        text = resources.files(__package__).joinpath("calibration.json").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    doc = json.loads(text)
    return {k: v for k, v in doc.items() if k in TECHNIQUES}


def default_models(technique: str, calibration: dict | None = None, **overrides):
    """``(SimConfig, PerturbationModel)`` for ``technique`` from calibration data.

    Keyword overrides apply to whichever of the two objects owns the field.
    """
    cal = (calibration or load_calibration())[technique]
    pert = PerturbationModel.from_percentages(
        cal["quadrant_percent"], magnitude_mean=cal["magnitude_mean"],
        magnitude_sd=cal["magnitude_sd"], onset_lead=cal["onset_lead"],
        shift_fraction=cal.get("shift_fraction", 1.0),
        distribution=cal.get("distribution", "truncnorm"))
    sim_keys = ("aim_noise_sd", "jitter_sd", "approach_duration", "dwell_duration",
                "correction_prob", "correction_duration")
    sim = SimConfig(technique=technique, **{k: cal[k] for k in sim_keys if k in cal})
    sim_over = {k: v for k, v in overrides.items() if k in SimConfig.__dataclass_fields__}
    pert_over = {k: v for k, v in overrides.items() if k in PerturbationModel.__dataclass_fields__}
    unknown = set(overrides) - set(sim_over) - set(pert_over)
    if unknown:
        raise TypeError(f"unknown override(s): {sorted(unknown)}")
    return replace(sim, **sim_over), replace(pert, **pert_over)


def sample_quadrant(rng: np.random.Generator, probs, size=None):
    """Categorical draw over the four quadrants (``size`` draws as an index array)."""
    p = np.asarray(probs, dtype=float)
    if size is None:
        return QUADRANTS[int(rng.choice(4, p=p))]
    return rng.choice(4, size=size, p=p)


_BASE_AZIMUTH = {Quadrant.TOP_RIGHT: 0.0, Quadrant.TOP_LEFT: 90.0,
                 Quadrant.BOTTOM_LEFT: 180.0, Quadrant.BOTTOM_RIGHT: 270.0}


def apply_perturbation(ray: Ray, quadrant: Quadrant, magnitude: float,
                       up_reference=UP, *, rng: np.random.Generator | None = None,
                       azimuth: float | None = None) -> Ray:
    """Rotate ``ray`` by ``magnitude`` degrees into ``quadrant``.

    The heading inside the quadrant is ``azimuth`` (0-90 degrees) if given,
    drawn uniformly from ``rng`` otherwise, or the quadrant bisector.
    """
    if magnitude < 0:
        raise ValueError("magnitude must be non-negative")
    if magnitude == 0:
        return ray
    if azimuth is None:
        azimuth = 90.0 * rng.random() if rng is not None else 45.0
    right, up = view_basis(ray.direction, up_reference)
    d = rotate_toward(ray.direction, right, up, magnitude,
                      _BASE_AZIMUTH[Quadrant(quadrant)] + azimuth)
    return Ray(ray.origin, tuple(d))


def _min_jerk(s):
    s = np.asarray(s, dtype=float)
    return s ** 3 * (10.0 - 15.0 * s + 6.0 * s ** 2)


def _jitter(rng, directions, sd):
    if sd == 0:
        return directions
    # small-angle tangent noise, renormalised
    noise = rng.normal(0.0, math.radians(sd), size=directions.shape)
    noise -= np.sum(noise * directions, axis=1, keepdims=True) * directions
    out = directions + noise
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def generate_event(rng: np.random.Generator, layout: SceneLayout, target: int,
                   technique: str, sim: SimConfig, pert: PerturbationModel,
                   participant="P00") -> SelectionEvent:
    if target not in layout.selectable_ids:
        raise ValueError(f"target {target} is not selectable")
    fr = sim.frame_rate
    n_app = max(5, int(round(sim.approach_duration * rng.uniform(0.75, 1.25) * fr)))
    corrective = sim.correction_prob > 0 and rng.random() < sim.correction_prob
    n_corr = int(round(sim.correction_duration * rng.uniform(0.75, 1.25) * fr)) if corrective else 0
    n_dwell = max(1, int(round(sim.dwell_duration * rng.uniform(0.25, 1.75) * fr)))
    n_pert = max(1, int(round(pert.onset_lead * fr)))
    if technique in HAND and n_pert < 3:
        raise ValueError("onset_lead too short to synthesise a pinch at this frame rate")
    n_move = n_app + n_corr
    a = n_move + n_dwell - 1         # action-start frame
    c = a + n_pert                   # confirmation frame
    n = c + 1
    t = np.arange(n) / fr

    origin = np.asarray(HAND_ORIGIN) + rng.normal(0.0, 0.02, size=3)
    to_target = normalize(layout.centers[target] - origin)
    right, up = view_basis(to_target)
    ox, oy = rng.normal(0.0, sim.aim_noise_sd, size=2) if sim.aim_noise_sd else (0.0, 0.0)
    aim = rotate_toward(to_target, right, up, math.hypot(ox, oy), math.degrees(math.atan2(oy, ox)))
    start = rotate_toward(to_target, right, up, rng.uniform(*sim.approach_angle),
                          rng.uniform(0.0, 360.0))
    waypoint = aim
    if corrective:
        pitch = math.degrees(math.atan(layout.pitch / layout.viewer_distance))
        waypoint = rotate_toward(aim, right, up, pitch * rng.uniform(0.5, 1.0),
                                 rng.uniform(0.0, 360.0))

    dirs = np.empty((n, 3))
    dirs[:n_app] = slerp(start, waypoint, _min_jerk(np.linspace(0.0, 1.0, n_app)))
    if n_corr:
        dirs[n_app:n_move] = slerp(waypoint, aim, _min_jerk(np.arange(1, n_corr + 1) / n_corr))
    dirs[n_move:a + 1] = aim
    dirs[:a + 1] = _jitter(rng, dirs[:a + 1], sim.jitter_sd)
    begin = Ray(tuple(origin), tuple(dirs[a] / np.linalg.norm(dirs[a])))
    quadrant = sample_quadrant(rng, pert.quadrant_probs)
    end = apply_perturbation(begin, quadrant, pert.sample_magnitude(rng), rng=rng)
    progress = np.minimum(np.arange(1, n_pert + 1) / (n_pert * pert.shift_fraction), 1.0)
    dirs[a + 1:] = slerp(np.asarray(begin.direction), np.asarray(end.direction),
                         _min_jerk(progress))
    dirs[a] = begin.direction
    dirs[c] = end.direction
    origins = np.repeat(origin[None, :], n, axis=0)

    score_ids = scores = None
    if technique in DIRECT:
        indicated = raycast_many(origins, dirs, layout)
    else:
        ids, board = score_trace(origins, dirs, layout, sim.snap)
        indicated = snap_many(ids, board)
        if sim.record_scores:
            score_ids, scores = ids, board

    vti = vrot = None
    if technique in HAND:
        vrot = np.abs(rng.normal(20.0, 8.0, size=n)) + 0.5
        quiet_from = max(0, min(n_move, a - 4))
        vrot[quiet_from:a + 1] = rng.uniform(0.0, 0.05, size=a + 1 - quiet_from)
        vrot[a + 1:] = rng.uniform(1.0, 10.0, size=n - a - 1)
        vti = rng.uniform(0.0, 0.02, size=n)
        vti[a + 1:] = rng.uniform(0.1, 0.4, size=n - a - 1)

    final = int(indicated[c])
    return SelectionEvent(
        participant=participant, technique=technique, width=layout.target_width,
        spacing=layout.target_spacing, target=int(target), t=t, origins=origins,
        directions=dirs, indicated=indicated, action_start_t=float(t[a]),
        confirm_t=float(t[c]), final_selected=None if final < 0 else final,
        score_ids=score_ids, scores=scores, vti=vti, vrot=vrot)


def participant_id(index: int) -> str:
    return f"P{index + 1:02d}"


def participant_rng(seed: int, participant: int, technique: str) -> np.random.Generator:
    """Independent stream per (seed, participant, technique)."""
    ss = np.random.SeedSequence([int(seed) & (2 ** 64 - 1), participant,
                                 TECHNIQUES.index(technique)])
    return np.random.default_rng(ss)


def generate_participant(sim: SimConfig, pert: PerturbationModel, seed: int,
                         index: int) -> list[SelectionEvent]:
    """All events of one participant, in chronological order.

    Width/spacing conditions are run in blocks, in a per-participant random order.
    """
    rng = participant_rng(seed, index, sim.technique)
    conds = sim.conditions
    order = rng.permutation(len(conds))
    pid = participant_id(index)
    events = []
    for i in range(sim.events_per_participant):
        width, spacing = conds[order[i * len(conds) // sim.events_per_participant]]
        layout = layout_for(width, spacing)
        target = layout.selectable_ids[rng.integers(len(layout.selectable_ids))]
        events.append(generate_event(rng, layout, target, sim.technique, sim, pert, pid))
    return events


def _participant_job(args):
    return generate_participant(*args)


def generate_dataset(sim: SimConfig, pert: PerturbationModel, seed: int | None = None,
                     jobs: int = 1) -> Dataset:
    """Deterministic in ``seed`` (defaults to ``sim.seed``) and independent of ``jobs``."""
    seed = sim.seed if seed is None else seed
    tasks = [(sim, pert, seed, p) for p in range(sim.participants)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            chunks = list(pool.map(_participant_job, tasks))
    else:
        chunks = [_participant_job(t) for t in tasks]
    return Dataset(e for chunk in chunks for e in chunk)
