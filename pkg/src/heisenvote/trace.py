"""
Selection-trace data model, JSON Lines persistence and history windows.

Frames are stored column-wise on :class:`SelectionEvent` (one numpy array
per channel) because datasets routinely hold millions of frames; the
:class:`Frame` view is built on demand.

Trace schema, one event per line::

    {participant, technique, width_m, spacing_m, target, action_start_t,
     confirm_t, final_selected,
     frames: [{t, origin: [x, y, z], dir: [x, y, z], indicated,
               scores?: {id: s}, vti?, vrot?}]}
"""
from __future__ import annotations

import json
import os
import tempfile
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

import numpy as np

from .geometry import Ray, SceneLayout, build_grid

TECHNIQUES = ("DC", "SC", "DH", "SH")
DIRECT = frozenset({"DC", "DH"})
HAND = frozenset({"DH", "SH"})
DEFAULT_WINDOW = 0.4  # seconds
_TIME_EPS = 1e-9


class TraceParseError(ValueError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class Frame:
    t: float
    ray: Ray
    indicated: int | None
    scores: dict[int, float] | None = None
    kin: tuple[float, float] | None = None  # (velocity_ti, velocity_rot)


@dataclass(frozen=True)
class HistorySample:
    tau: float
    indicated: int | None
    weight_slot: float = float("nan")


def _opt_array(x, dtype=float):
    return None if x is None else np.asarray(x, dtype=dtype)


@dataclass(eq=False)
class SelectionEvent:
    """One selection attempt. Null indications are stored as -1 in ``indicated``."""

    participant: str | int
    technique: str
    width: float
    spacing: float
    target: int
    t: np.ndarray
    origins: np.ndarray
    directions: np.ndarray
    indicated: np.ndarray
    action_start_t: float
    confirm_t: float
    final_selected: int | None
    score_ids: np.ndarray | None = None
    scores: np.ndarray | None = None
    vti: np.ndarray | None = None
    vrot: np.ndarray | None = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.origins = np.asarray(self.origins, dtype=float).reshape(-1, 3)
        self.directions = np.asarray(self.directions, dtype=float).reshape(-1, 3)
        self.indicated = np.asarray(self.indicated, dtype=np.int64)
        self.score_ids = _opt_array(self.score_ids, np.int64)
        self.scores = _opt_array(self.scores)
        self.vti = _opt_array(self.vti)
        self.vrot = _opt_array(self.vrot)

    def __len__(self):
        return len(self.t)

    @property
    def layout(self) -> SceneLayout:
        return layout_for(self.width, self.spacing)

    @property
    def frames(self) -> list[Frame]:
        out = []
        for k in range(len(self.t)):
            scores = None
            if self.scores is not None:
                scores = dict(zip(self.score_ids.tolist(), self.scores[k].tolist()))
            kin = None
            if self.vti is not None:
                kin = (float(self.vti[k]), float(self.vrot[k]))
            ind = int(self.indicated[k])
            out.append(Frame(float(self.t[k]),
                             Ray(tuple(self.origins[k]), tuple(self.directions[k])),
                             None if ind < 0 else ind, scores, kin))
        return out

    def frame_index(self, t: float) -> int | None:
        """Index of the frame stamped ``t`` (within 1e-9 s), else ``None``."""
        k = int(np.searchsorted(self.t, t - _TIME_EPS))
        if k < len(self.t) and abs(self.t[k] - t) <= _TIME_EPS:
            return k
        return None

    def indicated_at(self, k: int) -> int | None:
        v = int(self.indicated[k])
        return None if v < 0 else v

    def __eq__(self, other):
        if not isinstance(other, SelectionEvent):
            return NotImplemented
        return event_to_dict(self) == event_to_dict(other)


class Dataset:
    """An immutable, ordered collection of events."""

    def __init__(self, events: Iterable[SelectionEvent] = ()):
        self._events = tuple(events)

    @property
    def events(self) -> tuple[SelectionEvent, ...]:
        return self._events

    def __len__(self):
        return len(self._events)

    def __iter__(self) -> Iterator[SelectionEvent]:
        return iter(self._events)

    def __getitem__(self, i):
        return self._events[i]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self._events == other._events

    def participants(self) -> list:
        return sorted({e.participant for e in self._events}, key=str)

    def techniques(self) -> list[str]:
        present = {e.technique for e in self._events}
        return [t for t in TECHNIQUES if t in present]

    def by_participant(self) -> dict:
        groups = defaultdict(list)
        for e in self._events:
            groups[e.participant].append(e)
        return {p: Dataset(groups[p]) for p in sorted(groups, key=str)}

    def by_technique(self) -> dict[str, "Dataset"]:
        groups = defaultdict(list)
        for e in self._events:
            groups[e.technique].append(e)
        return {t: Dataset(groups[t]) for t in TECHNIQUES if t in groups}

    def filter(self, predicate) -> "Dataset":
        return Dataset(e for e in self._events if predicate(e))

    def __add__(self, other: "Dataset") -> "Dataset":
        return Dataset(self._events + tuple(other))


@lru_cache(maxsize=64)
def layout_for(width: float, spacing: float) -> SceneLayout:
    """Default 7x7 scene at 8 m for a given width/spacing condition."""
    return build_grid(width, spacing)


# -- validation ---------------------------------------------------------------

def validate(event: SelectionEvent, layout: SceneLayout | None = None) -> list[str]:
    """Invariant diagnostics for ``event``; an empty list means it is well formed."""
    diags = []
    n = len(event.t)
    if event.technique not in TECHNIQUES:
        diags.append(f"unknown technique {event.technique!r}")
    if not (event.width > 0 and event.spacing >= 0):
        diags.append("width must be positive and spacing non-negative")
        return diags
    if layout is None:
        layout = layout_for(event.width, event.spacing)
    if n == 0:
        diags.append("frames empty")
        return diags
    lengths = {len(event.origins), len(event.directions), len(event.indicated)}
    for name in ("vti", "vrot", "scores"):
        arr = getattr(event, name)
        if arr is not None:
            lengths.add(len(arr))
    if lengths != {n}:
        diags.append("frame channels differ in length")
        return diags
    if not np.all(np.isfinite(event.t)):
        diags.append("frames.t not finite")
    elif np.any(np.diff(event.t) <= 0):
        diags.append("frames.t not strictly increasing")
    norms = np.linalg.norm(event.directions, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        diags.append("frames.dir not unit length")
    if not event.action_start_t <= event.confirm_t:
        diags.append("action_start_t > confirm_t")
    lo, hi = event.t[0] - _TIME_EPS, event.t[-1] + _TIME_EPS
    if not lo <= event.action_start_t <= hi:
        diags.append("action_start_t outside frame time range")
    if not lo <= event.confirm_t <= hi:
        diags.append("confirm_t outside frame time range")
    known = set(layout.ids)
    ids = set(np.unique(event.indicated[event.indicated >= 0]).tolist())
    ids.add(event.target)
    if event.final_selected is not None:
        ids.add(event.final_selected)
    if event.score_ids is not None:
        ids.update(event.score_ids.tolist())
    if not ids <= known:
        diags.append("unknown target id")
    return diags


# -- history windows ------------------------------------------------------------

def history_arrays(event: SelectionEvent, window: float = DEFAULT_WINDOW):
    """``(taus, ids)`` for frames within ``window`` seconds of confirmation,
    newest first. ``tau = (confirm_t - t) / window``; ids use -1 for null."""
    t = event.t
    keep = (t >= event.confirm_t - window - _TIME_EPS) & (t <= event.confirm_t + _TIME_EPS)
    idx = np.flatnonzero(keep)[::-1]
    taus = np.clip((event.confirm_t - t[idx]) / window, 0.0, 1.0)
    return taus, event.indicated[idx]


def history_window(event: SelectionEvent, T_e: float = DEFAULT_WINDOW) -> list[HistorySample]:
    taus, ids = history_arrays(event, T_e)
    return [HistorySample(float(tau), None if i < 0 else int(i))
            for tau, i in zip(taus.tolist(), ids.tolist())]


# -- JSON Lines -------------------------------------------------------------------

def event_to_dict(event: SelectionEvent) -> dict:
    frames = []
    score_ids = None if event.score_ids is None else [str(i) for i in event.score_ids.tolist()]
    for k in range(len(event.t)):
        ind = int(event.indicated[k])
        fr = {"t": float(event.t[k]),
              "origin": event.origins[k].tolist(),
              "dir": event.directions[k].tolist(),
              "indicated": None if ind < 0 else ind}
        if event.scores is not None:
            fr["scores"] = dict(zip(score_ids, event.scores[k].tolist()))
        if event.vti is not None:
            fr["vti"] = float(event.vti[k])
            fr["vrot"] = float(event.vrot[k])
        frames.append(fr)
    return {
        "participant": event.participant,
        "technique": event.technique,
        "width_m": float(event.width),
        "spacing_m": float(event.spacing),
        "target": int(event.target),
        "action_start_t": float(event.action_start_t),
        "confirm_t": float(event.confirm_t),
        "final_selected": event.final_selected,
        "frames": frames,
    }


_REQUIRED = ("participant", "technique", "width_m", "spacing_m", "target",
             "action_start_t", "confirm_t", "final_selected", "frames")


def _number(obj, key, line, allow_none=False):
    v = obj.get(key)
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TraceParseError("expected a number", line, key)
    return v


def _id(obj, key, line, allow_none=False):
    v = obj.get(key)
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, int):
        raise TraceParseError("expected an integer target id", line, key)
    return v


def event_from_dict(obj: dict, line: int | None = None) -> SelectionEvent:
    if not isinstance(obj, dict):
        raise TraceParseError("expected a JSON object", line)
    for key in _REQUIRED:
        if key not in obj:
            raise TraceParseError("missing field", line, key)
    frames = obj["frames"]
    if not isinstance(frames, list):
        raise TraceParseError("expected a list", line, "frames")
    t, origins, dirs, ind, scores, vti, vrot = [], [], [], [], [], [], []
    score_keys = None
    has_scores = bool(frames) and "scores" in frames[0]
    has_kin = bool(frames) and "vti" in frames[0]
    for k, fr in enumerate(frames):
        where = f"frames[{k}]"
        if not isinstance(fr, dict):
            raise TraceParseError("expected a JSON object", line, where)
        for key in ("t", "origin", "dir", "indicated"):
            if key not in fr:
                raise TraceParseError("missing field", line, f"{where}.{key}")
        t.append(_number(fr, "t", line))
        for key, dest in (("origin", origins), ("dir", dirs)):
            v = fr[key]
            if not (isinstance(v, list) and len(v) == 3
                    and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
                raise TraceParseError("expected [x, y, z]", line, f"{where}.{key}")
            dest.append(v)
        i = _id(fr, "indicated", line, allow_none=True)
        ind.append(-1 if i is None else i)
        if ("scores" in fr) != has_scores:
            raise TraceParseError("scores must be present on all frames or none", line,
                                  f"{where}.scores")
        if has_scores:
            sc = fr["scores"]
            if not isinstance(sc, dict):
                raise TraceParseError("expected an object", line, f"{where}.scores")
            keys = sorted(sc, key=int)
            if score_keys is None:
                score_keys = keys
            elif keys != score_keys:
                raise TraceParseError("score ids differ between frames", line, f"{where}.scores")
            scores.append([float(sc[key]) for key in keys])
        if ("vti" in fr) != has_kin or ("vrot" in fr) != has_kin:
            raise TraceParseError("vti/vrot must be present on all frames or none", line, where)
        if has_kin:
            vti.append(_number(fr, "vti", line))
            vrot.append(_number(fr, "vrot", line))
    technique = obj["technique"]
    if technique not in TECHNIQUES:
        raise TraceParseError(f"unknown technique {technique!r}", line, "technique")
    participant = obj["participant"]
    if isinstance(participant, bool) or not isinstance(participant, (str, int)):
        raise TraceParseError("expected a string or integer", line, "participant")
    return SelectionEvent(
        participant=participant,
        technique=technique,
        width=_number(obj, "width_m", line),
        spacing=_number(obj, "spacing_m", line),
        target=_id(obj, "target", line),
        t=np.asarray(t, dtype=float),
        origins=np.asarray(origins, dtype=float).reshape(-1, 3),
        directions=np.asarray(dirs, dtype=float).reshape(-1, 3),
        indicated=np.asarray(ind, dtype=np.int64),
        action_start_t=_number(obj, "action_start_t", line),
        confirm_t=_number(obj, "confirm_t", line),
        final_selected=_id(obj, "final_selected", line, allow_none=True),
        score_ids=None if score_keys is None else [int(k) for k in score_keys],
        scores=None if not has_scores else np.asarray(scores, dtype=float),
        vti=vti if has_kin else None,
        vrot=vrot if has_kin else None,
    )


def load_jsonl(path, check: bool = True) -> Dataset:
    """Parse a trace file.

    With ``check`` (the default) every event must also pass :func:`validate`;
    the first offending line raises :class:`TraceParseError`.
    """
    events = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise TraceParseError(f"invalid JSON ({exc.msg})", lineno) from None
            event = event_from_dict(obj, lineno)
            if check:
                diags = validate(event)
                if diags:
                    raise TraceParseError("invariant violated: " + "; ".join(diags), lineno)
            events.append(event)
    return Dataset(events)


def dumps_event(event: SelectionEvent) -> str:
    return json.dumps(event_to_dict(event), separators=(",", ":"))


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_jsonl(dataset: Dataset, path) -> None:
    atomic_write_text(path, "".join(dumps_event(e) + "\n" for e in dataset))
