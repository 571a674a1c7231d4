"""Global and baseline solvers for single-group multicast beamforming.

Minimize transmit power ``|w|^2`` subject to ``|h_k^H w| >= 1`` for every
user, either to certified global optimality (:func:`solve_global`) or with
the local (:func:`sla_solve`) and relaxation-based (:func:`sdr_solve`)
baselines. :func:`phase_grid_value` brackets the optimum of small instances
independently.
"""

from .bb import BbResult, BbStatus, iteration_bound, solve_acr, solve_global
from .oracle import OracleResult, phase_grid_value
from .problem import (
    Problem,
    RawInstance,
    feasibility_margin,
    generate_instance,
    generate_raw_instance,
    load_instance,
    normalize,
    objective,
)
from .qp import Qp, QpSolution, QpStatus, solve_qp
from .sdr import sdr_solve, solve_sdr
from .sla import sla_init, sla_solve

__all__ = [
    "BbResult",
    "BbStatus",
    "OracleResult",
    "Problem",
    "Qp",
    "QpSolution",
    "QpStatus",
    "RawInstance",
    "feasibility_margin",
    "generate_instance",
    "generate_raw_instance",
    "iteration_bound",
    "load_instance",
    "normalize",
    "objective",
    "phase_grid_value",
    "sdr_solve",
    "sla_init",
    "sla_solve",
    "solve_acr",
    "solve_global",
    "solve_qp",
    "solve_sdr",
]

__version__ = "0.1.0"
