import numpy as np
import pytest

from heisenvote.geometry import build_grid
from heisenvote.sim import default_models, generate_dataset
from heisenvote.trace import Dataset


@pytest.fixture(scope="session")
def study_layout():
    return build_grid(0.42, 0.70, 7, 7, 8.0)


@pytest.fixture(scope="session")
def small_dataset():
    """A few participants of every technique with the calibrated defaults."""
    ds = Dataset()
    for tech in ("DC", "SC", "DH", "SH"):
        sim, pert = default_models(tech, participants=4, events_per_participant=30)
        ds = ds + generate_dataset(sim, pert, seed=11)
    return ds


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
