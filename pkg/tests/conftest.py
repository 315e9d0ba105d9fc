import os

import pytest

from app.utils.flow import IntegrationOptions
from app.utils.model import PerturbedSystem, ShapeFunction, ZonePartition, van_der_pol_harness
from app.utils.settings import DATA_DIR

SYSTEMS_DIR = os.path.join(DATA_DIR, "systems")


@pytest.fixture
def example_partition():
    return ZonePartition((1.0, 2.0), (1.0, 2.0, 3.0))


@pytest.fixture
def example_system(example_partition):
    return PerturbedSystem(example_partition, ShapeFunction.linear(), label="example-system")


@pytest.fixture
def cubic_system(example_partition):
    return PerturbedSystem(example_partition, ShapeFunction.cubic(), label="cubic-system")


@pytest.fixture
def relaxed_system():
    partition = ZonePartition((1.0, 2.0), (3.0, 1.0, 2.0), strict_mode=False)
    return PerturbedSystem(partition, ShapeFunction.linear(), label="relaxed-slopes")


@pytest.fixture
def zero_system():
    partition = ZonePartition((1.0, 2.0), (0.0, 0.0, 0.0), strict_mode=False)
    return PerturbedSystem(partition, ShapeFunction.polynomial((0.0,)), label="zero-perturbation")


@pytest.fixture
def van_der_pol():
    return van_der_pol_harness()


@pytest.fixture
def options():
    return IntegrationOptions()


@pytest.fixture
def systems_dir():
    return SYSTEMS_DIR
