import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from heatpfasst import pmg
from heatpfasst.grid import StencilKind


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # First call of each jitted kernel pays compilation; do it once up front
    # so per-test timings stay meaningful.
    u = np.ones((3, 3, 3))
    for kind in StencilKind:
        pmg.solve_implicit(0.01, u, kind, pmg.MgConfig(max_cycles=2, tol=1e-1))
