import pytest

import rasesim as rs
from rasesim import _kernels
from rasesim.experiments import SimSettings


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # JIT compile (or load from cache) before anything is timed
    _kernels.warmup()


@pytest.fixture(scope="session")
def small_grid():
    return rs.make_grid(61, 61, 5.0)


@pytest.fixture(scope="session")
def small_density(small_grid):
    return rs.gaussian_density(small_grid, 1e6)


@pytest.fixture(scope="session")
def deep_density():
    # deep-depth runs need z resolution to hold flux accounting inside the
    # solver's abort threshold; detuning can stay coarse
    return rs.gaussian_density(rs.make_grid(201, 41, 5.0), 1e6)


@pytest.fixture(scope="session")
def tiny_settings():
    # coarse but physically faithful; keeps experiment-level tests fast
    return SimSettings(n_z=201, n_delta=41, dt=5e-3, sample_every=5e-2)
