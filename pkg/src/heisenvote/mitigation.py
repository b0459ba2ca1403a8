"""
Selection-resolution strategies: the original selection, a fixed backtrack
("shift to before"), plain voting over the intention history, and sigmoid
weighted voting (optionally with a per-user adapted curve).

Histories are newest first. All voting ignores null samples; ties between
candidates go to the one seen most recently (smallest tau), then to the
smaller id.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .curve import AccuracyCurve, WeightFunction, eval_curve, weight
from .trace import DEFAULT_WINDOW, HistorySample, SelectionEvent, history_window


class StrategyKind(str, Enum):
    ORIGIN = "origin"
    SHIFT_TO_BEFORE = "shift"
    VOTE = "vote"
    WEIGHTED_VOTE = "wvote"
    ADAPTIVE_WEIGHTED_VOTE = "awvote"


COLUMN_NAMES = {
    StrategyKind.ORIGIN: "Origin",
    StrategyKind.SHIFT_TO_BEFORE: "Shift to Before",
    StrategyKind.VOTE: "VOTE",
    StrategyKind.WEIGHTED_VOTE: "Weighted VOTE",
    StrategyKind.ADAPTIVE_WEIGHTED_VOTE: "Adaptive Weighted VOTE",
}


@dataclass(frozen=True)
class Strategy:
    kind: StrategyKind
    tau_star: float | None = None
    weights: WeightFunction | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", StrategyKind(self.kind))
        if self.kind is StrategyKind.SHIFT_TO_BEFORE:
            if self.tau_star is None or not 0.0 <= self.tau_star <= 1.0:
                raise ValueError("shift-to-before needs tau_star in [0, 1]")
        if self.kind in (StrategyKind.WEIGHTED_VOTE, StrategyKind.ADAPTIVE_WEIGHTED_VOTE):
            if self.weights is None:
                raise ValueError(f"{self.kind.value} needs a weight function")


def _tally(history: Sequence[HistorySample], weights) -> int | None:
    totals: dict[int, float] = {}
    latest: dict[int, float] = {}
    for s, w in zip(history, weights):
        if s.indicated is None:
            continue
        totals[s.indicated] = totals.get(s.indicated, 0.0) + w
        if s.indicated not in latest or s.tau < latest[s.indicated]:
            latest[s.indicated] = s.tau
    if not totals:
        return None
    return min(totals, key=lambda o: (-totals[o], latest[o], o))


def vote(history: Sequence[HistorySample]) -> int | None:
    """Most frequently indicated non-null id."""
    return _tally(history, [1.0] * len(history))


def weighted_vote(history: Sequence[HistorySample], wf: WeightFunction) -> int | None:
    """Non-null id with the largest summed weight ``W(tau)``."""
    if not history:
        return None
    return _tally(history, weight(wf, np.array([s.tau for s in history])).tolist())


def peak_time(curve: AccuracyCurve, grid: int = 1000) -> float:
    """Grid tau in [0, 1] at which the clamped curve peaks; ties go to the smallest tau."""
    if grid < 2:
        raise ValueError("grid must have at least 2 points")
    taus = np.linspace(0.0, 1.0, grid)
    return float(taus[int(np.argmax(eval_curve(curve, taus)))])


def shift_to_before(history: Sequence[HistorySample], tau_star: float) -> int | None:
    """Indication of the single sample nearest ``tau_star``; a null sample is a miss."""
    if not history:
        return None
    best = min(history, key=lambda s: (abs(s.tau - tau_star), s.tau))
    return best.indicated


def resolve(event: SelectionEvent, strategy: Strategy, layout=None,
            window: float = DEFAULT_WINDOW) -> int | None:
    """Selected id for ``event`` under ``strategy``."""
    kind = strategy.kind
    if kind is StrategyKind.ORIGIN:
        return event.final_selected
    history = history_window(event, window)
    if kind is StrategyKind.SHIFT_TO_BEFORE:
        return shift_to_before(history, strategy.tau_star)
    if kind is StrategyKind.VOTE:
        return vote(history)
    return weighted_vote(history, strategy.weights)
