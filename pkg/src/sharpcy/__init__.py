"""Sharp gradient estimates for positive harmonic functions: bounds, test
functions with closed forms, a surface-of-revolution solver and a
verification harness."""

from .bounds import (
    BoundKind,
    barrier_chain_slack,
    barrier_constants,
    barrier_residual_2d,
    bound_2d,
    bound_conformal,
    bound_euclid,
    bound_manifold,
    evaluate_bound,
    harnack_envelope,
    optimal_nu,
)
from .errors import ConvergenceError, DomainError, IntegrationError, PositivityError, StepSizeError
from .harmonic import AffineFunction, PoissonKernelSpec, PoissonMixture, PulledBackSolution
from .revolution import DirichletProblem, assemble_and_eval, fd_disk_oracle, solve_mode
from .spaceform import CurvedChart, GeodesicBall, chart_radius, cs, geodesic_radius, sn
from .verify import Geometry, Sampling, VerificationReport, VerificationTask, emit_report, run_task

__version__ = "0.1.0"
