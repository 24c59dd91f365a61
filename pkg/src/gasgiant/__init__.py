"""Numerical toolkit for geodesic ray transforms on half-cylinder charts
whose metric g = dx^2 + x^{-2} h(x, y, dy) degenerates at the boundary.

Modules: metric (model families and curvature), flow (Hamiltonian ray
tracing), forms (1-forms, potentials, gauge correction), transform (X-ray
transform of 1-forms and boundary probes), jacobi (variational flow and
first-variation formulas), pestov (energy identities on the truncated
cosphere bundle), suites/cli (verification suites and artifacts).
"""

__version__ = "1.0.0"

from .errors import (ConfigError, GasGiantError, InvalidGrid, NoExit,
                     SingularAtBoundary, SuiteFailure, ToleranceFailure,
                     Unsupported, UnsupportedSupport)
from .metric import (ChartPoint, MetricModel, euclidean_half_cylinder,
                     make_model, perturbed_half_cylinder, torus3d)
from .flow import IntegratorOptions, PhaseState, Status, trace

__all__ = [
    "ChartPoint", "ConfigError", "GasGiantError", "IntegratorOptions",
    "InvalidGrid", "MetricModel", "NoExit", "PhaseState",
    "SingularAtBoundary", "Status", "SuiteFailure", "ToleranceFailure",
    "Unsupported", "UnsupportedSupport", "euclidean_half_cylinder",
    "make_model", "perturbed_half_cylinder", "torus3d", "trace",
    "__version__",
]
