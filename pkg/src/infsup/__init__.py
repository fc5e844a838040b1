"""Certified lower and upper bounds for parametric inf-sup constants."""

from .certification import BoundRegistry, GridBounds, global_lb, global_ub
from .greedy import GreedyConfig, run_cnnscm, run_nnscm
from .natural_norm import beta_bar, beta_exact, build_supremizers, gamma_q
from .truth import AffineOperator, assemble_problem1, assemble_problem2, uniform_grid

__version__ = "0.1.0"

__all__ = [
    "AffineOperator",
    "BoundRegistry",
    "GreedyConfig",
    "GridBounds",
    "assemble_problem1",
    "assemble_problem2",
    "beta_bar",
    "beta_exact",
    "build_supremizers",
    "gamma_q",
    "global_lb",
    "global_ub",
    "run_cnnscm",
    "run_nnscm",
    "uniform_grid",
]
