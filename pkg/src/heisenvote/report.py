"""
Per-event metrics, dataset-level summary tables and the strategy
comparison protocol (fit on training participants, adapt on the first part
of each test participant's history, evaluate on the rest).
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .curve import (CurveFitError, WeightFunction, fit_curve, interpolate_curves,
                    label_arrays)
from .geometry import QUADRANTS, UP, Quadrant, angular_offset, view_basis
from .mitigation import COLUMN_NAMES, Strategy, StrategyKind, peak_time, resolve
from .trace import DEFAULT_WINDOW, TECHNIQUES, Dataset, SelectionEvent

log = logging.getLogger(__name__)

WIDTH_LABELS = {0.14: "Small (14cm)", 0.28: "Medium (28cm)", 0.42: "Large (42cm)"}
SPACING_LABELS = {0.30: "Near (30cm)", 0.50: "Mid (50cm)", 0.70: "Far (70cm)"}
ALL_STRATEGIES = tuple(StrategyKind)


class ClassificationError(ValueError):
    pass


class EvaluationError(RuntimeError):
    def __init__(self, message, technique=None, stage="evaluate"):
        self.technique = technique
        self.stage = stage
        super().__init__(message)


@dataclass(frozen=True)
class EventMetrics:
    selection_time: float
    overall_error: bool
    heisenberg_error: bool
    heisenberg_magnitude: float
    quadrant: Quadrant


@dataclass
class ReportTable:
    """A small table: ``columns`` name every field, the first ``n_index`` are row keys.

    ``None`` cells are undefined (written as empty CSV fields).
    """

    name: str
    columns: list[str]
    rows: list[list]
    n_index: int = 1
    notes: dict = field(default_factory=dict)

    def row(self, *key) -> dict:
        for r in self.rows:
            if tuple(r[: self.n_index]) == key:
                return dict(zip(self.columns, r))
        raise KeyError(key)

    def cell(self, key, column):
        key = key if isinstance(key, tuple) else (key,)
        return self.row(*key)[column]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.columns) - self.n_index

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for r in self.rows:
            writer.writerow([_fmt(v) for v in r])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"name": self.name, "columns": self.columns,
                "rows": [[_json_value(v) for v in r] for r in self.rows],
                "notes": self.notes}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def _json_value(v):
    if isinstance(v, float):
        return None if not math.isfinite(v) else round(v, 10)
    return v


# -- per-event classification ---------------------------------------------------

def quadrant_of(start_dir, end_dir, up_reference=UP) -> Quadrant:
    """Quadrant of ``end_dir`` around ``start_dir`` in the view basis.

    Zero components resolve toward Top, then Right, so ``end == start``
    gives TopRight.
    """
    right, up = view_basis(start_dir, up_reference)
    delta = np.asarray(end_dir, dtype=float) - np.asarray(start_dir, dtype=float)
    x, y = float(delta @ right), float(delta @ up)
    if y >= 0:
        return Quadrant.TOP_RIGHT if x >= 0 else Quadrant.TOP_LEFT
    return Quadrant.BOTTOM_RIGHT if x >= 0 else Quadrant.BOTTOM_LEFT


def classify_event(event: SelectionEvent, layout=None) -> EventMetrics:
    a = event.frame_index(event.action_start_t)
    c = event.frame_index(event.confirm_t)
    if a is None:
        raise ClassificationError("no frame at action_start_t")
    if c is None:
        raise ClassificationError("no frame at confirm_t")
    overall = event.final_selected != event.target
    started_on = event.indicated_at(a) == event.target
    d_a, d_c = event.directions[a], event.directions[c]
    return EventMetrics(
        selection_time=float(event.confirm_t - event.t[0]),
        overall_error=overall,
        heisenberg_error=started_on and overall,
        heisenberg_magnitude=angular_offset(d_a, d_c),
        quadrant=quadrant_of(d_a, d_c),
    )


# -- summary tables ------------------------------------------------------------------

def _label(value: float, labels: dict, prefix: str) -> str:
    for k, v in labels.items():
        if abs(k - value) < 1e-9:
            return v
    return f"{prefix} {value * 100:g}cm"


def _levels(values: Iterable[float], known: dict) -> list[float]:
    extra = sorted(v for v in set(values) if not any(abs(v - k) < 1e-9 for k in known))
    return list(known) + extra


def _same(a: float, b: float) -> bool:
    return abs(a - b) < 1e-9


def _pct(num: int, den: int):
    return None if den == 0 else 100.0 * num / den


def _mean_se(x: Sequence[float]):
    x = np.asarray(x, dtype=float)
    if len(x) == 0:
        return None, None
    se = float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else None
    return float(np.mean(x)), se


def classify_dataset(dataset: Dataset) -> list[tuple[SelectionEvent, EventMetrics]]:
    return [(e, classify_event(e)) for e in dataset]


def aggregate(dataset: Dataset, layout=None) -> dict[str, ReportTable]:
    """Heisenberg-error proportions, shift-direction distribution and mean metrics."""
    classified = classify_dataset(dataset)
    widths = _levels((e.width for e in dataset), WIDTH_LABELS)
    spacings = _levels((e.spacing for e in dataset), SPACING_LABELS)
    groups = [("width", w, _label(w, WIDTH_LABELS, "Width")) for w in widths]
    groups += [("spacing", s, _label(s, SPACING_LABELS, "Spacing")) for s in spacings]

    def select(tech, factor=None, level=None):
        return [m for e, m in classified if e.technique == tech
                and (factor is None or _same(getattr(e, factor), level))]

    prop_rows, quad_rows, metric_rows = [], [], []
    for tech in TECHNIQUES:
        row = [tech]
        for factor, level, _ in groups + [(None, None, "Overall")]:
            ms = select(tech, factor, level)
            row.append(_pct(sum(m.heisenberg_error for m in ms), sum(m.overall_error for m in ms)))
        prop_rows.append(row)

        ms = select(tech)
        counts = [sum(m.quadrant is q for m in ms) for q in QUADRANTS]
        quad_rows.append([tech] + [_pct(c, len(ms)) for c in counts])

        for factor, level, label in [("overall", None, "Overall")] + groups:
            sub = ms if factor == "overall" else select(tech, factor, level)
            if not sub:
                continue
            cells = [tech, factor, label, len(sub)]
            cells += _mean_se([m.selection_time for m in sub])
            for flag in ("overall_error", "heisenberg_error"):
                mean, se = _mean_se([100.0 * getattr(m, flag) for m in sub])
                cells += [mean, se]
            cells += _mean_se([m.heisenberg_magnitude for m in sub])
            metric_rows.append(cells)

    return {
        "heisenberg_proportion": ReportTable(
            "heisenberg_proportion", ["Input"] + [g[2] for g in groups] + ["Overall"], prop_rows),
        "quadrant_distribution": ReportTable(
            "quadrant_distribution", ["Input"] + [q.value for q in QUADRANTS], quad_rows),
        "metrics": ReportTable(
            "metrics",
            ["Input", "factor", "level", "n", "selection_time_s", "selection_time_se",
             "overall_error_pct", "overall_error_se", "heisenberg_error_pct",
             "heisenberg_error_se", "heisenberg_magnitude_deg", "heisenberg_magnitude_se"],
            metric_rows, n_index=3),
    }


# -- evaluation protocol ---------------------------------------------------------------

def default_split(participants: Sequence, n_test: int | None = None):
    """Last participants (sorted by id) form the test set: 5 of 24 by default."""
    ps = sorted(participants, key=str)
    if n_test is None:
        n_test = max(1, round(len(ps) * 5 / 24)) if len(ps) > 1 else 0
    return set(ps[: len(ps) - n_test]), set(ps[len(ps) - n_test:])


def train_test_split(dataset: Dataset, train_participants, test_participants):
    train_ids, test_ids = set(train_participants), set(test_participants)
    overlap = train_ids & test_ids
    if overlap:
        raise ValueError(f"participants in both sets: {sorted(overlap, key=str)}")
    present = set(dataset.participants())
    unassigned = present - train_ids - test_ids
    if unassigned:
        raise ValueError(f"participants in neither set: {sorted(unassigned, key=str)}")
    if not test_ids & present:
        log.warning("empty test set: the evaluation protocol cannot run on this split")
    train = dataset.filter(lambda e: e.participant in train_ids)
    test = dataset.filter(lambda e: e.participant in test_ids)
    log.info("split: %d train events, %d test events", len(train), len(test))
    return train, test


def fit_weights(train: Dataset, k: float = 10.0, q: float = 2.0 / 3.0,
                window: float = DEFAULT_WINDOW) -> dict[str, WeightFunction]:
    """One weight function per technique present in ``train``."""
    out = {}
    for tech, events in train.by_technique().items():
        try:
            curve = fit_curve(label_arrays(events, window))
        except CurveFitError as exc:
            raise EvaluationError(f"cannot fit curve for {tech}: {exc}", tech, "fit") from exc
        out[tech] = WeightFunction.from_curve(curve, k, q)
    return out


def adaptation_count(n: int, fraction: float = 0.2, minimum: int = 4) -> int:
    return min(n, max(int(math.floor(n * fraction)), minimum))


def evaluate_strategies(train: Dataset | None, test: Dataset,
                        strategies: Sequence = ALL_STRATEGIES, layout=None, *,
                        weights: dict | None = None, k: float = 10.0, q: float = 2.0 / 3.0,
                        w_user: float = 0.4, adapt_fraction: float = 0.2,
                        window: float = DEFAULT_WINDOW) -> ReportTable:
    """Error rate (%) per technique and strategy on the held-out part of ``test``.

    Weight functions come from ``weights`` when given, otherwise they are
    fitted on ``train``. For every test participant the first
    ``adapt_fraction`` of their events (at least 4) is reserved for the
    per-user fit and all strategies are scored on the remainder.
    """
    kinds = [StrategyKind(s) for s in strategies]
    kinds = [s for s in ALL_STRATEGIES if s in kinds]
    if len(test) == 0:
        raise EvaluationError("empty test set")
    needs_curve = any(s is not StrategyKind.ORIGIN and s is not StrategyKind.VOTE for s in kinds)
    fitted = dict(weights or {})
    rows, notes = [], {"n_evaluated": {}, "weights": {}}
    test_by_tech = test.by_technique()
    for tech in TECHNIQUES:
        events = test_by_tech.get(tech)
        if events is None:
            rows.append([tech] + [None] * len(kinds))
            continue
        wf = fitted.get(tech, fitted.get(None))
        if needs_curve and wf is None:
            if train is None:
                raise EvaluationError(f"no weights or training data for {tech}", tech, "fit")
            train_t = train.filter(lambda e: e.technique == tech)
            if len(train_t) == 0:
                raise EvaluationError(f"no training events for {tech}", tech, "fit")
            wf = fit_weights(train_t, k, q, window)[tech]
        if wf is not None:
            notes["weights"][tech] = {"a": wf.curve.a, "b": wf.curve.b, "c": wf.curve.c,
                                      "d": wf.curve.d, "k": wf.k, "A": wf.A}
        base = {}
        if StrategyKind.SHIFT_TO_BEFORE in kinds:
            base[StrategyKind.SHIFT_TO_BEFORE] = Strategy(
                StrategyKind.SHIFT_TO_BEFORE, tau_star=peak_time(wf.curve))
        if StrategyKind.WEIGHTED_VOTE in kinds:
            base[StrategyKind.WEIGHTED_VOTE] = Strategy(StrategyKind.WEIGHTED_VOTE, weights=wf)
        for kind in (StrategyKind.ORIGIN, StrategyKind.VOTE):
            base[kind] = Strategy(kind)

        errors = {s: 0 for s in kinds}
        n_eval = 0
        for pid, user_events in events.by_participant().items():
            evs = user_events.events
            n_adapt = adaptation_count(len(evs), adapt_fraction)
            held_out = evs[n_adapt:]
            strategies_for_user = dict(base)
            if StrategyKind.ADAPTIVE_WEIGHTED_VOTE in kinds:
                strategies_for_user[StrategyKind.ADAPTIVE_WEIGHTED_VOTE] = Strategy(
                    StrategyKind.ADAPTIVE_WEIGHTED_VOTE,
                    weights=_adapted(wf, evs[:n_adapt], w_user, q, window, tech, pid))
            for e in held_out:
                for s in kinds:
                    if resolve(e, strategies_for_user[s], window=window) != e.target:
                        errors[s] += 1
            n_eval += len(held_out)
        notes["n_evaluated"][tech] = n_eval
        rows.append([tech] + [_pct(errors[s], n_eval) for s in kinds])
    return ReportTable("mitigation_error_rates", ["Input"] + [COLUMN_NAMES[s] for s in kinds],
                       rows, notes=notes)


def _adapted(wf: WeightFunction, events, w_user, q, window, tech, pid) -> WeightFunction:
    try:
        user = fit_curve(label_arrays(events, window))
    except CurveFitError:
        log.warning("%s/%s: too little history for a personal curve; using the global one",
                    tech, pid)
        return wf
    return WeightFunction.from_curve(interpolate_curves(user, wf.curve, w_user), wf.k, q)
