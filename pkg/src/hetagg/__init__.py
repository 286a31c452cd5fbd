"""Heterogeneous first-order aggregation models on spheres and unitary groups.

Simulation of Kuramoto, swarm sphere, Lohe Hermitian sphere and Lohe matrix
ensembles, their pairing with a Kuramoto companion, and numeric checks of
the associated convergence hypotheses.
"""

from .certify import (
    Certificate, LimitReport, RateFit, calibrate_kappa, check_hypotheses, fit_decay_rate,
    order_parameter, solve_beta, verify_limits,
)
from .integrate import IntegratorConfig, Trajectory, detect_convergence, integrate, rk4_step, run
from .models import Coupling, ModelKind, rhs_gram, rhs_primary, rhs_reduced
from .reduction import coupling_map, initial_diameters, paired_run
from .scenario import RunConfig, bundled_config, draw_certified, parse_config, run_scenario, sample_initial

__version__ = "0.1.0"
