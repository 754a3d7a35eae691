"""Sparse BV-regularized optimal control of a 1D elliptic equation.

The state is discretized with the lowest-order Raviart-Thomas mixed element
(flux in P1, state in P0). The control is a step function whose jumps are
found by an outer support iteration around an L1-regularized least-squares
solve.
"""

from .analytic_examples import example1, example2, get_example, verify_example1_consistency
from .bv_control import JumpControl, bv_seminorm, cell_integrals, l1_distance, l2_distance
from .mesh import Mesh, from_nodes, uniform_mesh
from .mixed_fem import Coefficients, assemble, solve_adjoint, solve_state
from .reduced_problem import ReducedProblem, objective, prox_solve, smooth_gradient
from .study import run_study, solve_level
from .support_solver import OuterConfig, Termination, run_outer

__all__ = [
    "Coefficients", "JumpControl", "Mesh", "OuterConfig", "ReducedProblem", "Termination",
    "assemble", "bv_seminorm", "cell_integrals", "example1", "example2", "from_nodes",
    "get_example", "l1_distance", "l2_distance", "objective", "prox_solve", "run_outer",
    "run_study", "smooth_gradient", "solve_adjoint", "solve_level", "solve_state",
    "uniform_mesh", "verify_example1_consistency",
]
