import asyncio

import numpy as np
import pytest

from bell_orchestrator import BellOrchestrator
from config import OptimizationConfig
from services.catalog import catalog


@pytest.fixture
def quick_config():
    """Small multi-start budget for tests that only need a good local optimum"""
    return OptimizationConfig(restarts=4, max_iterations=4000, tolerance=1e-10, seed=7)


@pytest.fixture
def orchestrator():
    orch = BellOrchestrator(threads=1)
    asyncio.run(orch.initialize())
    yield orch
    asyncio.run(orch.cleanup())


@pytest.fixture
def quartit():
    return catalog("quartit")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
