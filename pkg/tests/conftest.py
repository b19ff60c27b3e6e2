import dataclasses

import numpy as np
import pytest

from superarrivals.config import GridSection, RunConfig
from superarrivals.grid import SpatialGrid, UnitSystem
from superarrivals.wavepackets import PacketSpec

# Same dx as the default box, but only [-100, 120] sigma0 wide: about five times cheaper.
COMPACT_GRID = GridSection(x_min=-100.0, x_max=120.0, n_points=28837)


@pytest.fixture(scope="session")
def units():
    return UnitSystem()


@pytest.fixture(scope="session")
def small_grid(units):
    """Narrow box around the initial packet with the default spacing."""
    return SpatialGrid(-40.0 * units.sigma0, 40.0 * units.sigma0, 10487)


@pytest.fixture(scope="session")
def gaussian(units):
    return PacketSpec().resolved(units)


@pytest.fixture(scope="session")
def compact_config():
    return dataclasses.replace(RunConfig(), grid=COMPACT_GRID)


@pytest.fixture(scope="session")
def run_cache():
    """Shared by every test that needs full propagations."""
    return {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- acceptance reporting ---------------------------------------------------------

_CRITERIA: dict[int, list[tuple[bool, str]]] = {}


@pytest.fixture
def criterion():
    """``record(n, ok, detail)`` notes one check of acceptance criterion ``n``."""

    def record(n, ok, detail):
        _CRITERIA.setdefault(n, []).append((bool(ok), detail))
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok

    return record


@pytest.fixture(scope="session")
def acceptance_cache():
    return {}


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(_CRITERIA):
        checks = _CRITERIA[n]
        verdict = "PASS" if all(ok for ok, _ in checks) else "FAIL"
        terminalreporter.write_line(f"{n:2d} {verdict}  " + "; ".join(d for _, d in checks))
