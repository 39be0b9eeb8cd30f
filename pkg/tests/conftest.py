"""Shared decompositions; eigen-solves are the slow part so they live per session."""

from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from speclab.grid import PotentialSpec, build_grid, decompose

settings.register_profile(
    "speclab", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("speclab")


@pytest.fixture(scope="session")
def free_small():
    """Free operator on [-20, 20], 512 nodes: cheap, for structural checks."""
    return decompose(build_grid(-20, 20, 512), PotentialSpec.free())


@pytest.fixture(scope="session")
def pt1_small():
    return decompose(build_grid(-20, 20, 512), PotentialSpec.poschl_teller(1))


@pytest.fixture(scope="session")
def free_wide():
    """Free operator on [-40, 40], 4096 nodes: resolves heat kernels at t >= 1."""
    return decompose(build_grid(-40, 40, 4096), PotentialSpec.free())


@pytest.fixture(scope="session")
def pt1_fine():
    return decompose(build_grid(-20, 20, 2048), PotentialSpec.poschl_teller(1))
