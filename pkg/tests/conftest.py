import numpy as np
import pytest

from nodal_lab import functional, geometry, minimize


@pytest.fixture(scope="session")
def interval_grid():
    return geometry.build_grid(geometry.DomainSpec.interval(1.0), 2048)


@pytest.fixture(scope="session")
def disc_grid():
    return geometry.build_grid(geometry.DomainSpec.disc(1.0), (64, 128))


@pytest.fixture(scope="session")
def annulus_grid():
    return geometry.build_grid(geometry.DomainSpec.annulus(0.5, 1.0), (32, 64))


@pytest.fixture(scope="session")
def interval_min_q1(interval_grid):
    """Converged 1D minimizer, q = 1, 8 starts (shared across suites)."""
    spec = functional.ProblemSpec(interval_grid, 1.0)
    return minimize.multistart(spec, minimize.SolveConfig(seed=11, starts=8))


@pytest.fixture(scope="session")
def disc_min_q1(disc_grid):
    spec = functional.ProblemSpec(disc_grid, 1.0)
    return minimize.multistart(spec, minimize.SolveConfig(seed=11, starts=8))


@pytest.fixture(scope="session")
def disc_min_q15(disc_grid):
    spec = functional.ProblemSpec(disc_grid, 1.5)
    return minimize.multistart(spec, minimize.SolveConfig(seed=11, starts=8))


def smooth_random_field(grid, rng):
    """Deterministic smooth random field (stiffness-smoothed white noise)."""
    return grid.h1_solve(grid.weights * rng.standard_normal(grid.n_nodes))


def polar_coords(grid):
    r = np.hypot(grid.coords[:, 0], grid.coords[:, 1])
    th = np.arctan2(grid.coords[:, 1], grid.coords[:, 0])
    return r, th
