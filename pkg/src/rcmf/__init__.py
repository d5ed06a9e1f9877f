"""Mean-field random-cluster model toolkit.

Simulates the aggregate cluster dynamics (cm), the per-edge heat-bath (hb)
and the per-edge single-update (su) dynamics on the complete graph, computes
the drift/critical structure of the model (beta, theta_r, phi, f, lambda_c,
lambda_s, lambda_S), runs the two executable couplings, and verifies the
spectral decomposition machinery by exact enumeration at small n.
"""

__version__ = "0.1.0"

from .core import (
    ModelParams,
    ComponentState,
    EdgeConfig,
    RngStream,
    make_rng,
    split,
    log_weight,
    component_sizes,
    SolverError,
)
from .gnp import GnpRequest, sample_gnp_components, beta
from . import phase
from . import dynamics
from . import coupling
from . import exact
from . import experiments
