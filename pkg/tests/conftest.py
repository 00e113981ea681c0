import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from terrain_toolkit.raster import HeightField

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE_RESULTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: (int(k.split(".")[0]), k)):
        status, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {status}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def cone(n=33, cell=200.0, grade=0.5, apex=None):
    """Circular cone, apex at the centre cell; height falls off with distance."""
    c = (n - 1) / 2
    r, q = np.mgrid[0:n, 0:n]
    dist = np.hypot(r - c, q - c) * cell
    top = grade * dist.max() if apex is None else apex
    return HeightField(top - grade * dist, cell)


def plane(n=16, cell=200.0, gx=0.0, gy=0.0, z0=0.0):
    """z = z0 + gx * east + gy * north, in meters."""
    r, q = np.mgrid[0:n, 0:n]
    east = q * cell
    north = (n - 1 - r) * cell
    return HeightField(z0 + gx * east + gy * north, cell)


# WhiteboxTools form codes -> canonical class index
WB_TO_CLASS = {1: 2, 2: 1, 3: 4, 4: 7, 5: 6, 6: 8, 7: 5, 8: 9, 9: 3, 10: 0}


def parity_cases():
    return json.loads((FIXTURES / "parity" / "index.json").read_text())


def golden_classes(case):
    """Reference class raster for a parity case, border margin trimmed."""
    L = case["search_radius_cells"]
    gold = np.loadtxt(FIXTURES / "parity" / case["golden"], dtype=int)[L:-L, L:-L]
    return np.vectorize(WB_TO_CLASS.get)(gold)
