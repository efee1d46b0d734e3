import numpy as np
import pytest

from wanqubo.ilp import IlpConfig, assemble
from wanqubo.pathgen import build_catalog
from wanqubo.qubo import build_qubo
from wanqubo.topology import build_growing_topology
from wanqubo.traffic import sample_demands

SEED = 42


@pytest.fixture(scope="session")
def triangle():
    return build_growing_topology(3)


@pytest.fixture(scope="session")
def demands3(triangle):
    return sample_demands(triangle, 75.0, 10.0, SEED)


@pytest.fixture(scope="session")
def catalog3(triangle, demands3):
    return build_catalog(triangle, demands3, k=2, max_patterns=4)


@pytest.fixture(scope="session")
def inst3(catalog3, demands3):
    return assemble(catalog3, demands3, IlpConfig.for_network(3, a=1, penalty=4.0))


@pytest.fixture(scope="session")
def qubo3(inst3):
    return build_qubo(inst3)


@pytest.fixture(scope="session")
def reduced(triangle, demands3):
    """First two demands, direct paths only: small enough for exhaustive search."""
    ds = demands3.subset(2)
    cat = build_catalog(triangle, ds, k=1, max_patterns=4)
    inst = assemble(cat, ds, IlpConfig.for_network(3, a=1, penalty=4.0))
    return inst


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
