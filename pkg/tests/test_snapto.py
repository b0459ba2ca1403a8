import math

import numpy as np
import pytest

from heisenvote.geometry import Ray, build_grid, normalize
from heisenvote.snapto import (ScoreBoard, SnapConfig, eta, score_trace, snap_many, snap_target,
                               update_scores)

FORWARD = Ray((0, 0, 0), (0, 0, 1))


def closed_form(etas, gamma=0.5, eps=15.0):
    """Unrolled recurrence from s_0 = 0: sum_k gamma^(n-k) (1 - gamma) (1 - eta_k / eps)."""
    n = len(etas)
    return sum(gamma ** (n - 1 - k) * (1 - gamma) * (1 - e / eps) for k, e in enumerate(etas))


def test_eta_examples():
    assert eta(FORWARD, (0, 0, 8)) == pytest.approx(0.0, abs=1e-6)
    assert eta(FORWARD, (3, 0, 0)) == pytest.approx(90.0)
    assert eta(FORWARD, (0, 0.14, 8)) == pytest.approx(1.0025738037600627, abs=1e-9)
    with pytest.raises(ValueError):
        eta(FORWARD, (0, 0, 0))


def one_target_layout():
    return build_grid(0.28, 0.5, 3, 3, 8.0)  # single selectable id 4 at (0, 0, 8)


def test_update_from_zero_on_target():
    g = one_target_layout()
    b = ScoreBoard.for_layout(g)
    assert b.scores == {4: 0.0}
    b = update_scores(b, FORWARD, g)
    assert b.scores[4] == pytest.approx(0.5)
    b = update_scores(update_scores(b, FORWARD, g), FORWARD, g)
    assert b.scores[4] == pytest.approx(0.875)


def ray_at(angle_deg):
    a = math.radians(angle_deg)
    return Ray((0, 0, 0), (math.sin(a), 0.0, math.cos(a)))


def test_update_at_and_beyond_threshold():
    g = one_target_layout()
    cfg = SnapConfig(0.5, 15.0)
    b = update_scores(ScoreBoard({4: 0.8}), ray_at(15.0), g, cfg)
    assert b.scores[4] == pytest.approx(0.4, abs=1e-12)
    b = update_scores(ScoreBoard({4: 0.0}), ray_at(30.0), g, cfg)
    assert b.scores[4] == pytest.approx(-0.5, abs=1e-12)


def test_snap_target_rules():
    assert snap_target(ScoreBoard({1: 0.9, 2: 0.3})) == 1
    assert snap_target(ScoreBoard({1: -0.2, 2: 0.0})) is None
    assert snap_target(ScoreBoard({7: 0.5, 3: 0.5})) == 3
    assert snap_target(ScoreBoard({3: 0.5, 7: 0.5})) == 3
    with pytest.raises(ValueError):
        snap_target(ScoreBoard({}))


def test_steady_aim_converges_to_one():
    g = one_target_layout()
    b = ScoreBoard.for_layout(g)
    prev = 0.0
    for _ in range(30):
        b = update_scores(b, FORWARD, g)
        assert b.scores[4] > prev
        prev = b.scores[4]
    assert abs(prev - 1.0) < 1e-6


def test_recurrence_matches_closed_form(rng):
    g = one_target_layout()
    for _ in range(50):
        etas = rng.uniform(0.0, 40.0, size=rng.integers(1, 40))
        b = ScoreBoard.for_layout(g)
        for e in etas:
            b = update_scores(b, ray_at(e), g)
        assert b.scores[4] == pytest.approx(closed_form(etas), abs=1e-9)


def test_snap_is_scale_invariant(rng):
    for _ in range(100):
        scores = dict(enumerate(rng.normal(size=5)))
        c = rng.uniform(0.1, 10)
        scaled = {k: v * c for k, v in scores.items()}
        assert snap_target(ScoreBoard(scores)) == snap_target(ScoreBoard(scaled))


def test_vectorised_trace_matches_board_updates(study_layout, rng):
    dirs = rng.normal(size=(40, 3)) * [0.15, 0.15, 0.0] + [0, 0, 1]
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    origins = np.tile([0.1, -0.2, 0.3], (40, 1))
    ids, scores = score_trace(origins, dirs, study_layout)
    assert list(ids) == sorted(study_layout.selectable_ids)
    picks = snap_many(ids, scores)
    b = ScoreBoard.for_layout(study_layout)
    for k in range(40):
        b = update_scores(b, Ray(tuple(origins[k]), tuple(dirs[k])), study_layout)
        assert [b.scores[i] for i in ids] == pytest.approx(scores[k], abs=1e-12)
        expected = snap_target(b)
        assert (None if picks[k] < 0 else picks[k]) == expected


@pytest.mark.parametrize("gamma,eps", [(0.0, 15), (1.0, 15), (0.5, 0.0)])
def test_snap_config_validation(gamma, eps):
    with pytest.raises(ValueError):
        SnapConfig(gamma, eps)
