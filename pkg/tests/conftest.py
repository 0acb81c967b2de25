from __future__ import annotations

from functools import lru_cache

import pytest
from hypothesis import HealthCheck, settings

from thetablock import kernels
from thetablock.jacobi import block_expand, block_from_a, psi_from_block

# the backend fixture is fixed for the whole test, so sharing it across examples is intended
settings.register_profile("thetablock", deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile("thetablock")

A_VECTORS = {
    25: (1, 1, 1, 1),
    37: (1, 1, 1, 2),
    43: (-1, 5, -1, -2),
    50: (2, -1, -3, 6),
    53: (1, -6, 3, 1),
}


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    """Run the test once per kernel backend, restoring the default afterwards."""
    if request.param == "numba" and not kernels.HAVE_NUMBA:
        pytest.skip("numba not installed")
    old = kernels.get_backend()
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(old)


@lru_cache(maxsize=None)
def phi(N: int, qmax: int):
    return block_expand(block_from_a(A_VECTORS[N]), qmax)


@lru_cache(maxsize=None)
def psi(N: int, qmax: int):
    return psi_from_block(block_from_a(A_VECTORS[N]), qmax)
