"""Cubic intention-accuracy curves and the sigmoid voting weights built on them."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .trace import DEFAULT_WINDOW, SelectionEvent, history_arrays


class CurveFitError(ValueError):
    pass


@dataclass(frozen=True)
class AccuracyCurve:
    """``f(tau) = a*tau**3 + b*tau**2 + c*tau + d``."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.coefficients):
            raise ValueError("curve coefficients must be finite")

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    def raw(self, tau):
        """Unclamped polynomial value (scalar or array)."""
        tau = np.asarray(tau, dtype=float)
        out = ((self.a * tau + self.b) * tau + self.c) * tau + self.d
        return float(out) if out.ndim == 0 else out

    def __call__(self, tau):
        return eval_curve(self, tau)


@dataclass(frozen=True)
class WeightFunction:
    curve: AccuracyCurve
    k: float = 10.0
    A: float = 0.0

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("steepness k must be positive")

    @classmethod
    def from_curve(cls, curve: AccuracyCurve, k: float = 10.0, q: float = 2.0 / 3.0):
        return cls(curve, k, quantile_shift(curve, q))

    def __call__(self, tau):
        return weight(self, tau)


def label_samples(event: SelectionEvent, layout=None,
                  window: float = DEFAULT_WINDOW) -> list[tuple[float, int]]:
    """``(tau, correct)`` per history frame; null indications count as wrong."""
    taus, ids = history_arrays(event, window)
    return list(zip(taus.tolist(), (ids == event.target).astype(int).tolist()))


def label_arrays(events: Iterable[SelectionEvent], window: float = DEFAULT_WINDOW):
    """Stacked ``(taus, labels)`` arrays over many events."""
    taus, labels = [], []
    for e in events:
        tau, ids = history_arrays(e, window)
        taus.append(tau)
        labels.append((ids == e.target).astype(float))
    if not taus:
        return np.empty(0), np.empty(0)
    return np.concatenate(taus), np.concatenate(labels)


def _design(tau: np.ndarray) -> np.ndarray:
    return np.column_stack([tau ** 3, tau ** 2, tau, np.ones_like(tau)])


def fit_curve(samples) -> AccuracyCurve:
    """Ordinary least-squares cubic through raw ``(tau, label)`` points.

    ``samples`` is a sequence of pairs or a ``(taus, labels)`` tuple of arrays.
    """
    if isinstance(samples, tuple) and len(samples) == 2 and isinstance(samples[0], np.ndarray):
        tau, y = (np.asarray(s, dtype=float) for s in samples)
    else:
        arr = np.asarray(list(samples), dtype=float).reshape(-1, 2)
        tau, y = arr[:, 0], arr[:, 1]
    if len(tau) < 4 or len(np.unique(tau)) < 4:
        raise CurveFitError("cubic fit needs at least 4 distinct tau values")
    coef, *_ = np.linalg.lstsq(_design(tau), y, rcond=None)
    return AccuracyCurve(*(float(c) for c in coef))


def eval_curve(curve: AccuracyCurve, tau):
    """Curve value clamped to [0, 1]."""
    out = np.clip(curve.raw(tau), 0.0, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def quantile_shift(curve: AccuracyCurve, q: float = 2.0 / 3.0, grid: int = 1000) -> float:
    """``q``-quantile of the unclamped curve sampled on ``grid`` uniform taus in [0, 1]."""
    if grid < 2:
        raise ValueError("grid must have at least 2 points")
    values = curve.raw(np.linspace(0.0, 1.0, grid))
    return float(np.quantile(values, q))


def weight(wf: WeightFunction, tau):
    """``1 / (1 + exp(-k * (f(tau) - A)))`` with the unclamped curve value."""
    z = -wf.k * (wf.curve.raw(tau) - wf.A)
    if np.ndim(z) == 0:
        return 0.0 if z > 700.0 else 1.0 / (1.0 + math.exp(z))
    return np.where(z > 700.0, 0.0, 1.0 / (1.0 + np.exp(np.minimum(z, 700.0))))


def interpolate_curves(user: AccuracyCurve, global_: AccuracyCurve,
                       w_user: float = 0.4) -> AccuracyCurve:
    """Coefficient-wise blend ``w_user * user + (1 - w_user) * global_``."""
    if not 0.0 <= w_user <= 1.0:
        raise ValueError("w_user must lie in [0, 1]")
    return AccuracyCurve(*(w_user * u + (1.0 - w_user) * g
                           for u, g in zip(user.coefficients, global_.coefficients)))


# -- serialisation ------------------------------------------------------------

def weights_to_dict(wf: WeightFunction, technique: str | None = None) -> dict:
    doc = asdict(wf.curve)
    doc.update(k=wf.k, A=wf.A, technique=technique)
    return doc


def weights_from_dict(doc: dict) -> tuple[str | None, WeightFunction]:
    try:
        curve = AccuracyCurve(*(float(doc[key]) for key in "abcd"))
        return doc.get("technique"), WeightFunction(curve, float(doc.get("k", 10.0)),
                                                    float(doc["A"]))
    except KeyError as exc:
        raise ValueError(f"weight document missing field {exc.args[0]!r}") from None


def dumps_weights(weights: dict[str, WeightFunction]) -> str:
    docs = [weights_to_dict(wf, tech) for tech, wf in weights.items()]
    return json.dumps(docs, indent=2) + "\n"


def load_weights(path) -> dict[str | None, WeightFunction]:
    """Read one weight document or a list of them, keyed by technique."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    docs: Sequence = doc if isinstance(doc, list) else [doc]
    return dict(weights_from_dict(d) for d in docs)
