"""Space-time parallel solver for the forced 3D heat equation.

Building blocks: Gauss-Lobatto collocation (quadrature), 3D grid fields and
stencils (grid), the IMEX heat problem (heat), a geometric multigrid solver
for the implicit systems (pmg), single-level IMEX SDC (sweeper), two-level
MLSDC with FAS (hierarchy), the time-parallel controller (pfasst), the
speedup model and instrumentation (perfmodel), run drivers (driver), and the
CLI with CSV/figure reporting (cli, figures).
"""

from .driver import RunConfig, SimulationResult, run_simulation
from .errors import ProtocolViolation, SolverDiverged, UnsupportedConfiguration
from .grid import StencilKind
from .heat import ForcingMode, HeatProblem

__version__ = "0.1.0"

__all__ = [
    "RunConfig",
    "SimulationResult",
    "run_simulation",
    "StencilKind",
    "ForcingMode",
    "HeatProblem",
    "SolverDiverged",
    "ProtocolViolation",
    "UnsupportedConfiguration",
    "__version__",
]
