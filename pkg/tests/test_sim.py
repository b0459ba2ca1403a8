import math
from collections import Counter

import numpy as np
import pytest

from heisenvote.geometry import QUADRANTS, Quadrant, Ray, angular_offset, build_grid
from heisenvote.pinch import KinematicSeries, detect_pinch_start
from heisenvote.report import classify_event, quadrant_of
from heisenvote.sim import (PerturbationModel, SimConfig, apply_perturbation, default_models,
                            generate_dataset, generate_event, load_calibration, sample_quadrant)
from heisenvote.trace import validate


def test_calibration_percentages_are_normalised():
    cal = load_calibration()
    for tech in ("DC", "SC", "DH", "SH"):
        _, pert = default_models(tech)
        p = np.array(cal[tech]["quadrant_percent"])
        assert sum(pert.quadrant_probs) == pytest.approx(1.0)
        np.testing.assert_allclose(pert.quadrant_probs, p / p.sum())
    assert cal["DC"]["magnitude_mean"] == 0.332


def test_quadrant_frequencies(rng):
    probs = (0.4, 0.3, 0.2, 0.1)
    draws = sample_quadrant(rng, probs, size=200_000)
    freq = np.bincount(draws, minlength=4) / len(draws)
    se = np.sqrt(np.array(probs) * (1 - np.array(probs)) / len(draws))
    assert np.all(np.abs(freq - probs) < 4 * se)
    assert sample_quadrant(rng, (0, 0, 1, 0)) is QUADRANTS[2]


@pytest.mark.parametrize("quadrant", list(Quadrant))
def test_perturbation_magnitude_and_direction(quadrant, rng):
    ray = Ray.toward((0, 0, 0), (0.7, -0.7, 8))
    for _ in range(50):
        mag = rng.uniform(0.01, 5.0)
        out = apply_perturbation(ray, quadrant, mag, rng=rng)
        assert angular_offset(ray.direction, out.direction) == pytest.approx(mag, abs=1e-6)
        assert quadrant_of(ray.direction, out.direction) is quadrant
    assert apply_perturbation(ray, quadrant, 0.0) is ray
    with pytest.raises(ValueError):
        apply_perturbation(ray, quadrant, -1.0)


def test_perturbation_bisector_example():
    ray = Ray((0, 0, 0), (0, 0, 1))
    out = apply_perturbation(ray, Quadrant.TOP_RIGHT, 1.0)
    # 45 degrees into the top-right quadrant: right is -x when looking down +z with +y up
    d = np.asarray(out.direction)
    assert d[1] > 0 and d[0] < 0
    assert abs(d[0]) == pytest.approx(abs(d[1]), abs=1e-12)


def noiseless(tech, **kw):
    return default_models(tech, aim_noise_sd=0.0, jitter_sd=0.0, magnitude_mean=0.0,
                          magnitude_sd=0.0, correction_prob=0.0, **kw)


@pytest.mark.parametrize("tech", ["DC", "SC", "DH", "SH"])
def test_noiseless_event_hits_target(tech, rng, study_layout):
    sim, pert = noiseless(tech)
    for target in study_layout.selectable_ids[:6]:
        e = generate_event(rng, study_layout, target, tech, sim, pert)
        assert validate(e) == []
        m = classify_event(e)
        assert e.final_selected == target
        assert m.heisenberg_magnitude == pytest.approx(0.0, abs=1e-6)
        assert not m.overall_error and not m.heisenberg_error


def test_edge_aim_plus_perturbation_is_heisenberg_error(rng):
    layout = build_grid(0.14, 0.70, 7, 7, 8.0)
    sim, _ = noiseless("DC")
    pert = PerturbationModel((1, 0, 0, 0), magnitude_mean=5.0, magnitude_sd=0.0)
    e = generate_event(rng, layout, 24, "DC", sim, pert)
    m = classify_event(e)
    assert m.heisenberg_error and m.overall_error
    assert m.heisenberg_magnitude == pytest.approx(5.0, abs=1e-6)
    assert m.quadrant is Quadrant.TOP_RIGHT


def test_large_target_absorbs_typical_direct_magnitude(rng, study_layout):
    sim, _ = noiseless("DC")
    pert = PerturbationModel((0.25,) * 4, magnitude_mean=0.332, magnitude_sd=0.0)
    for _ in range(40):
        e = generate_event(rng, study_layout, 24, "DC", sim, pert)
        assert e.final_selected == 24
        assert classify_event(e).heisenberg_magnitude == pytest.approx(0.332, abs=1e-6)


def test_dataset_is_deterministic_and_sized():
    sim, pert = default_models("SH", participants=3, events_per_participant=18)
    a = generate_dataset(sim, pert, seed=5)
    b = generate_dataset(sim, pert, seed=5)
    c = generate_dataset(sim, pert, seed=6)
    assert a == b and a != c
    assert len(a) == 54
    counts = Counter(e.participant for e in a)
    assert counts == {"P01": 18, "P02": 18, "P03": 18}
    conds = Counter((e.width, e.spacing) for e in a if e.participant == "P01")
    assert len(conds) == 9 and set(conds.values()) == {2}


def test_every_generated_event_validates(small_dataset):
    assert all(validate(e) == [] for e in small_dataset)


def test_magnitude_mean_within_three_standard_errors():
    _, pert = default_models("SC")
    rng = np.random.default_rng(99)
    x = np.array([pert.sample_magnitude(rng) for _ in range(10_000)])
    assert x.min() >= 0
    assert abs(x.mean() - pert.magnitude_mean) < 3 * x.std(ddof=1) / math.sqrt(len(x))
    logn = PerturbationModel((0.25,) * 4, 1.4, 0.3, distribution="lognormal")
    y = np.array([logn.sample_magnitude(rng) for _ in range(10_000)])
    assert abs(y.mean() - 1.4) < 3 * y.std(ddof=1) / math.sqrt(len(y))


def test_synthetic_pinch_recovers_action_start():
    hits = total = 0
    for tech in ("DH", "SH"):
        sim, pert = default_models(tech, participants=2, events_per_participant=100)
        for e in generate_dataset(sim, pert, seed=2):
            s = KinematicSeries(e.t, e.vti, e.vrot)
            k = detect_pinch_start(s)
            total += 1
            hits += k is not None and abs(e.t[k] - e.action_start_t) <= 1 / 72 + 1e-9
    assert hits / total >= 0.99


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(technique="XX")
    with pytest.raises(ValueError):
        PerturbationModel((0.5, 0.5, 0.5, 0.5), 1, 1)
    short = default_models("DH", onset_lead=0.02, participants=1, events_per_participant=1)
    with pytest.raises(ValueError):
        generate_dataset(*short)
    with pytest.raises(TypeError):
        default_models("DC", bogus=1)
