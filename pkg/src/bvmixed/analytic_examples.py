"""Benchmark problems with a ≡ 1, d ≡ 0 and alpha = 1e-5.

``example1`` has a closed-form optimal solution: three jumps located where the
multiplier Phi touches +-alpha. ``example2`` only has a desired state; errors
are measured against a fine-grid reference solve.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .bv_control import JumpControl
from .mesh import uniform_mesh
from .mixed_fem import Coefficients
from .quadrature import cell_points


class ConsistencyError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExactSolution:
    u_bar: JumpControl
    y_bar: Callable
    y_bar_prime: Callable
    p_bar: Callable
    p_bar_dd: Callable
    phi_bar: Callable


@dataclass(frozen=True)
class ExampleSpec:
    name: str
    alpha: float
    yd: Callable
    coefficients: Coefficients = field(default_factory=Coefficients)
    exact: Optional[ExactSolution] = None


def poisson_solution(u):
    """Solution of -y'' = u, y(0) = y(1) = 0, for a step function ``u``.

    With F(x) = int_0^x int_0^s u = base x^2/2 + sum_i c_i (x - x_i)_+^2 / 2
    the solution is y = F(1) x - F(x), piecewise quadratic and C^1.
    Returns (y, y').
    """
    locs, heights, base = u.jump_locs, u.jump_heights, u.base

    def F(x):
        x = np.asarray(x, dtype=float)
        ramps = np.maximum(x[..., None] - locs, 0.0)
        return 0.5 * base * x**2 + 0.5 * (ramps**2) @ heights

    def dF(x):
        x = np.asarray(x, dtype=float)
        return base * x + np.maximum(x[..., None] - locs, 0.0) @ heights

    F1 = float(F(1.0))

    def y(x):
        x = np.asarray(x, dtype=float)
        return F1 * x - F(x)

    def dy(x):
        return F1 - dF(x)

    return y, dy


def example1_constants():
    """(c, x_c) with c = 12 - 4 sqrt(8) and x_c = arccos(c/4) / (2 pi)."""
    c = 12.0 - 4.0 * np.sqrt(8.0)
    return c, np.arccos(c / 4.0) / (2.0 * np.pi)


def example1(alpha=1e-5):
    if not alpha > 0.0:
        raise ValueError("alpha must be positive")
    c, xc = example1_constants()
    u_bar = JumpControl(0.5, [xc, 0.5, 1.0 - xc], [1.0, -2.0, 1.5])
    y_bar, y_bar_prime = poisson_solution(u_bar)
    k = alpha / (2.0 * c)
    pi = np.pi

    def phi_bar(x):
        x = np.asarray(x, dtype=float)
        return k * ((1.0 - np.cos(4 * pi * x)) - c * (1.0 - np.cos(2 * pi * x)))

    def p_bar(x):
        x = np.asarray(x, dtype=float)
        return k * (4 * pi * np.sin(4 * pi * x) - 2 * pi * c * np.sin(2 * pi * x))

    def p_bar_dd(x):
        x = np.asarray(x, dtype=float)
        return k * (-64 * pi**3 * np.sin(4 * pi * x) + 8 * pi**3 * c * np.sin(2 * pi * x))

    def yd(x):
        return y_bar(x) + p_bar_dd(x)

    exact = ExactSolution(u_bar, y_bar, y_bar_prime, p_bar, p_bar_dd, phi_bar)
    return ExampleSpec("example1", alpha, yd, Coefficients(1.0, 0.0), exact)


def example2():
    def yd(x):
        x = np.asarray(x, dtype=float)
        return 0.5 / np.pi**2 * (1.0 - np.cos(2 * np.pi * x))

    return ExampleSpec("example2", 1e-5, yd, Coefficients(1.0, 0.0))


EXAMPLES = {"example1": example1, "example2": example2}


def get_example(name, alpha=None):
    try:
        factory = EXAMPLES[name]
    except KeyError:
        raise ValueError(
            f"unknown example {name!r}; choose from {sorted(EXAMPLES)}"
        ) from None
    if alpha is None:
        return factory()
    if name == "example1":
        return factory(alpha)
    spec = factory()
    return ExampleSpec(spec.name, float(alpha), spec.yd, spec.coefficients, spec.exact)


def _weak_poisson_residual(exact, N):
    """max_i |int y' e_i' - int u e_i| / max_i |int u e_i| over interior hats."""
    mesh = uniform_mesh(N)
    x, h = mesh.nodes, mesh.cell_sizes
    yv = exact.y_bar(x)
    lhs = (yv[1:-1] - yv[:-2]) / h[:-1] - (yv[2:] - yv[1:-1]) / h[1:]
    # int u e_i on a partition refined by the jump points, 3-point Gauss per piece
    breaks = np.union1d(x, exact.u_bar.jump_locs)
    qx, qw = cell_points(breaks, 3)
    qx, qw = qx.ravel(), qw.ravel()
    uq = exact.u_bar.evaluate(qx)
    rhs = np.empty(N - 1)
    for i in range(1, N):
        hat = np.clip(1.0 - np.abs(qx - x[i]) / np.where(qx < x[i], h[i - 1], h[i]), 0.0, None)
        rhs[i - 1] = np.sum(qw * uq * hat)
    return float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)))


def verify_example1_consistency(spec, N=1024):
    """Check the closed-form data against the continuous optimality system.

    Returns a dict of measured defects; raises ConsistencyError naming the
    first failing quantity.
    """
    ex = spec.exact
    if ex is None:
        raise ValueError(f"{spec.name} has no exact solution")
    alpha = spec.alpha
    x = np.linspace(0.0, 1.0, N + 1)
    _, xc = example1_constants()

    report = {}
    report["state_weak_residual"] = _weak_poisson_residual(ex, N)
    report["state_boundary"] = float(max(abs(ex.y_bar(0.0)), abs(ex.y_bar(1.0))))
    lhs = -ex.p_bar_dd(x)
    rhs = ex.y_bar(x) - spec.yd(x)
    report["adjoint_identity"] = float(
        np.max(np.abs(lhs - rhs)) / max(np.max(np.abs(rhs)), np.finfo(float).tiny)
    )
    phi = ex.phi_bar(x)
    report["multiplier_bound"] = float(max(np.max(np.abs(phi)) - alpha, 0.0) / alpha)
    report["phi_at_1"] = float(abs(ex.phi_bar(1.0)) / alpha)
    locs, heights = ex.u_bar.jump_locs, ex.u_bar.jump_heights
    report["jump_multiplier"] = float(
        np.max(np.abs(ex.phi_bar(locs) - alpha * np.sign(heights))) / alpha
    )

    tolerances = {
        # difference quotients of y lose ~eps * N^2 to cancellation
        "state_weak_residual": 1e-8,
        "state_boundary": 1e-14,
        "adjoint_identity": 1e-10,
        "multiplier_bound": 1e-12,
        "phi_at_1": 1e-12,
        "jump_multiplier": 1e-12,
    }
    for key, tol in tolerances.items():
        if not report[key] <= tol:
            raise ConsistencyError(f"{key} = {report[key]:.3e} exceeds {tol:g}")
    return report
