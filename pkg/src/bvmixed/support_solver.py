"""Outer support iteration.

Starting from an empty jump set, solve the reduced problem on the current set,
take the sign changes of the discrete adjoint as the next set, and stop when
the set repeats (T1) or a two-cycle is detected with a decreasing objective
(T2).
"""

import enum
import logging
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .reduced_problem import ReducedProblem, ReducedSolution, prox_solve

log = logging.getLogger(__name__)

DEGENERATE_TOL = 1e-12


class DegenerateAdjointWarning(UserWarning):
    """The discrete adjoint vanishes (numerically) on some cell."""


class Termination(enum.Enum):
    T1 = "T1"
    T2 = "T2"
    MAX_ITER = "MaxIter"


@dataclass
class OuterConfig:
    epsilon: float = 1e-10
    max_outer: int = 50
    inner_tol: float = 1e-12
    inner_max_iters: int = 50_000
    verbose: bool = False

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")
        if self.max_outer < 1:
            raise ValueError("max_outer must be at least 1")


@dataclass
class OuterIterate:
    k: int
    m: int
    support: np.ndarray
    objective: float


@dataclass
class OuterResult:
    solution: ReducedSolution
    support_nodes: np.ndarray
    outer_iterations: int
    termination: Termination
    assumption_ok: bool
    history: List[OuterIterate] = field(default_factory=list)

    @property
    def converged(self):
        return self.termination is not Termination.MAX_ITER and self.solution.converged

    @property
    def mesh(self):
        return self.solution.mesh


def _adjoint_signs(values):
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    tiny = np.abs(values) <= DEGENERATE_TOL * scale
    signs = np.sign(values)
    signs[tiny] = 0.0
    # tiny entries take the sign of their left neighbour
    for i in np.flatnonzero(tiny):
        if i > 0:
            signs[i] = signs[i - 1]
    return signs, bool(np.any(tiny))


def adjoint_is_nondegenerate(p):
    return not _adjoint_signs(np.asarray(p.values, dtype=float))[1]


def detect_support(p):
    """Interior node indices where the P0 adjoint changes sign."""
    signs, degenerate = _adjoint_signs(np.asarray(p.values, dtype=float))
    if degenerate:
        warnings.warn(
            "discrete adjoint is numerically zero on some cells; "
            "sign changes are resolved from the left",
            DegenerateAdjointWarning,
            stacklevel=2,
        )
    return np.flatnonzero(signs[:-1] != signs[1:]) + 1


def termination_test(supports, objectives, epsilon):
    """Check T1 / T2 for the last entry of a history of supports.

    ``supports`` holds node coordinates per iteration and ``objectives`` the
    reduced objective obtained on each of them.
    """
    k = len(supports) - 1
    if k >= 1:
        t_k, t_prev = supports[k], supports[k - 1]
        if t_k.size == t_prev.size and np.linalg.norm(t_k - t_prev) <= epsilon:
            return Termination.T1
    if k >= 2:
        t_k, t_prev, t_prev2 = supports[k], supports[k - 1], supports[k - 2]
        if (
            t_k.size == t_prev.size == t_prev2.size
            and np.linalg.norm(t_k - t_prev2) <= epsilon
            and objectives[k] < objectives[k - 1]
        ):
            return Termination.T2
    return None


def run_outer(system, yd_cells, alpha, config: Optional[OuterConfig] = None):
    """Detect the jump set and solve the reduced problem on it."""
    config = config or OuterConfig()
    base = ReducedProblem(system, yd_cells, alpha)
    nodes = system.mesh.nodes
    cache = {}

    def solve_on(support, warm):
        key = tuple(int(s) for s in support)
        if key not in cache:
            prob = base.with_support(support)
            init_c = None
            if warm is not None:
                prev = dict(zip(warm.support.tolist(), warm.c.tolist()))
                init_c = np.array([prev.get(s, 0.0) for s in key])
            cache[key] = prox_solve(
                prob,
                init_a=warm.a if warm is not None else 0.0,
                init_c=init_c,
                tol=config.inner_tol,
                max_iters=config.inner_max_iters,
            )
        return cache[key]

    supports, coords, objectives, history = [], [], [], []
    support = np.zeros(0, dtype=int)
    warm = None
    termination = Termination.MAX_ITER
    for k in range(config.max_outer):
        sol = solve_on(support, warm)
        supports.append(support)
        coords.append(nodes[support])
        objectives.append(sol.objective)
        history.append(OuterIterate(k, support.size, nodes[support], sol.objective))
        flag = termination_test(coords, objectives, config.epsilon)
        if config.verbose:
            log.info(
                "outer k=%d m=%d f=%.12e%s", k, support.size, sol.objective,
                f" stop={flag.value}" if flag else "",
            )
        if flag is not None:
            termination = flag
            break
        warm = sol
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateAdjointWarning)
            support = detect_support(sol.p)

    if termination is Termination.MAX_ITER:
        best = int(np.argmin(objectives))
        final_support = supports[best]
        log.warning("outer iteration hit max_outer=%d without T1/T2", config.max_outer)
    else:
        final_support = supports[-1]
    sol = solve_on(final_support, None)
    if termination is Termination.T2:
        # A two-cycle usually means the optimum needs jumps on two adjacent
        # nodes; one solve on the union of both supports resolves it.
        union = np.union1d(supports[-1], supports[-2])
        merged = solve_on(union, sol)
        if merged.objective <= sol.objective:
            final_support, sol = union, merged
    assumption_ok = adjoint_is_nondegenerate(sol.p)
    if not assumption_ok:
        warnings.warn(
            "final discrete adjoint vanishes on some cell (nondegeneracy assumption violated)",
            DegenerateAdjointWarning,
            stacklevel=2,
        )
    return OuterResult(
        solution=sol,
        support_nodes=final_support,
        outer_iterations=len(history),
        termination=termination,
        assumption_ok=assumption_ok,
        history=history,
    )
