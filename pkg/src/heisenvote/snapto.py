"""Spatiotemporal snap-to scoring (IntenSelect-style running scores)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Ray, SceneLayout, angles_to_points, angular_offset, normalize


@dataclass(frozen=True)
class SnapConfig:
    gamma: float = 0.5
    epsilon: float = 15.0  # degrees

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class ScoreBoard:
    scores: dict[int, float] = field(default_factory=dict)

    @classmethod
    def for_layout(cls, layout: SceneLayout) -> "ScoreBoard":
        return cls({i: 0.0 for i in layout.selectable_ids})


def eta(ray: Ray, center) -> float:
    """Angle (degrees) between the ray and the direction from its origin to ``center``."""
    to = np.asarray(center, dtype=float) - np.asarray(ray.origin)
    if not np.any(to):
        raise ValueError("target centre coincides with the ray origin")
    return angular_offset(ray.direction, normalize(to))


def update_scores(board: ScoreBoard, ray: Ray, layout: SceneLayout,
                  cfg: SnapConfig = SnapConfig()) -> ScoreBoard:
    """One step of ``s_t = s_{t-1} * gamma + (1 - eta / epsilon) * (1 - gamma)``.

    Stored scores are not clamped; negative values decay like any other.
    """
    g = cfg.gamma
    return ScoreBoard({
        tid: s * g + (1.0 - eta(ray, layout.center(tid)) / cfg.epsilon) * (1.0 - g)
        for tid, s in board.scores.items()
    })


def snap_target(board: ScoreBoard) -> int | None:
    """Highest-scoring id, or ``None`` if no score is positive. Ties go to the smaller id."""
    if not board.scores:
        raise ValueError("empty score board")
    best = min(board.scores, key=lambda tid: (-board.scores[tid], tid))
    return best if board.scores[best] > 0.0 else None


def score_trace(origins: np.ndarray, directions: np.ndarray, layout: SceneLayout,
                cfg: SnapConfig = SnapConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Run the score recurrence over a whole frame sequence.

    Returns ``(ids, scores)`` where ``ids`` are the selectable ids in ascending
    order and ``scores`` is (N, K), row ``n`` holding the board after frame
    ``n``. Boards start at zero.
    """
    ids = np.asarray(sorted(layout.selectable_ids), dtype=int)
    n = len(origins)
    scores = np.empty((n, len(ids)))
    if len(ids) == 0:
        return ids, scores
    inc = (1.0 - angles_to_points(origins, directions, layout.centers[ids]) / cfg.epsilon)
    inc *= 1.0 - cfg.gamma
    s = np.zeros(len(ids))
    for k in range(n):
        s = s * cfg.gamma + inc[k]
        scores[k] = s
    return ids, scores


def snap_many(ids: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """Row-wise :func:`snap_target` over a score matrix; -1 marks no target."""
    if scores.shape[1] == 0:
        return np.full(len(scores), -1)
    best = np.argmax(scores, axis=1)  # first max -> smallest id since ids ascend
    top = scores[np.arange(len(scores)), best]
    return np.where(top > 0.0, ids[best], -1)
