import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heisenvote.pinch import (KinematicSeries, detect_onset, detect_pinch_start,
                              read_kinematic_csv)


def series(vti, vrot=None):
    return KinematicSeries.from_velocities(vti, vrot)


def test_onset_examples():
    assert detect_onset(series([0, 0, 0.06, 0.06, 0.06])) == 2
    assert detect_onset(series([0.0] * 8)) is None
    assert detect_onset(series([0.06, 0.06, 0, 0.06, 0.06, 0.06])) == 3


def test_onset_threshold_is_strict():
    assert detect_onset(series([0.05, 0.05, 0.05, 0.05])) is None


def test_pinch_start_examples():
    vti = [0, 0, 0, 0, 0, 0, 0.1, 0.1, 0.1]
    assert detect_pinch_start(series(vti, [0.0] * 9)) == 6
    vrot = [0, 0, 0, 0, 0, 0.5, 0.5, 0.5, 0.5]
    assert detect_pinch_start(series(vti, vrot)) == 4
    # onset at 2 with too little quiet history before it
    assert detect_pinch_start(series([0, 0, 0.1, 0.1, 0.1], [0.0] * 5)) == 0
    assert detect_pinch_start(series([0.0] * 5)) is None


def test_quiet_threshold_is_strict():
    vti = [0] * 6 + [0.1] * 3
    assert detect_pinch_start(series(vti, [0.1] * 9)) == 0


def test_empty_series_rejected():
    with pytest.raises(ValueError):
        KinematicSeries(np.array([]), np.array([]), np.array([]))


def test_series_validation():
    with pytest.raises(ValueError):
        KinematicSeries([0.0, 0.0], [0, 0], [0, 0])
    with pytest.raises(ValueError):
        KinematicSeries([0.0, 1.0], [0, np.nan], [0, 0])
    with pytest.raises(ValueError):
        KinematicSeries([0.0, 1.0], [0, 0], [0])


vel = st.lists(st.sampled_from([0.0, 0.02, 0.05, 0.08, 0.2]), min_size=1, max_size=40)
rot = st.sampled_from([0.0, 0.05, 0.1, 0.3, 2.0])


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_pinch_start_never_after_onset(data):
    vti = data.draw(vel)
    vrot = data.draw(st.lists(rot, min_size=len(vti), max_size=len(vti)))
    s = series(vti, vrot)
    onset, start = detect_onset(s), detect_pinch_start(s)
    assert (onset is None) == (start is None)
    if onset is not None:
        assert 0 <= start <= onset
    assert detect_pinch_start(s) == start  # deterministic


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_prepending_quiet_frames_never_delays_start(data):
    vti = data.draw(vel)
    vrot = data.draw(st.lists(rot, min_size=len(vti), max_size=len(vti)))
    extra = data.draw(st.integers(1, 8))
    s0 = series(vti, vrot)
    s1 = series([0.0] * extra + vti, [0.0] * extra + vrot)
    o0, p0 = detect_onset(s0), detect_pinch_start(s0)
    o1, p1 = detect_onset(s1), detect_pinch_start(s1)
    if o0 is not None:
        assert o1 == o0 + extra
        # a longer quiet prefix can only move the start later, never earlier
        assert p1 >= p0 + extra if p0 > 0 else 0 <= p1 <= o1


def test_read_csv(tmp_path):
    p = tmp_path / "k.csv"
    p.write_text("t,velocity_ti,velocity_rot\n" + "".join(
        f"{i / 72},{v},{r}\n" for i, (v, r) in enumerate(
            zip([0, 0, 0, 0, 0, 0, 0.1, 0.1, 0.1], [0, 0, 0, 0, 0, 0.5, 0.5, 0.5, 0.5]))))
    s = read_kinematic_csv(p)
    assert len(s) == 9
    assert detect_onset(s) == 6 and detect_pinch_start(s) == 4
    bad = tmp_path / "bad.csv"
    bad.write_text("t,vti\n0,1\n")
    with pytest.raises(ValueError):
        read_kinematic_csv(bad)
