import warnings

import numpy as np
import pytest

from bvmixed.analytic_examples import example1, example1_constants, example2
from bvmixed.mesh import uniform_mesh
from bvmixed.mixed_fem import P0Function, assemble
from bvmixed.study import solve_level
from bvmixed.support_solver import (
    DegenerateAdjointWarning, OuterConfig, Termination, detect_support, run_outer,
    termination_test,
)


def p0(values):
    return P0Function(uniform_mesh(len(values)), values)


def test_detect_support():
    assert np.array_equal(detect_support(p0([1.0, -1.0])), [1])
    assert detect_support(p0([1.0, 2.0, 0.5, 3.0])).size == 0
    assert np.array_equal(detect_support(p0([1.0, -1.0, -2.0, 4.0])), [1, 3])


def test_degenerate_adjoint_warns_and_uses_left_sign():
    with pytest.warns(DegenerateAdjointWarning):
        support = detect_support(p0([1.0, 0.0, -1.0, -1.0]))
    assert np.array_equal(support, [2])


def test_termination_t1():
    coords = [np.array([]), np.array([0.25, 0.5]), np.array([0.25, 0.5])]
    assert termination_test(coords[:2], [1.0, 0.5], 1e-10) is None
    assert termination_test(coords, [1.0, 0.5, 0.5], 1e-10) is Termination.T1


def test_termination_t2_needs_decrease():
    a, b = np.array([0.25, 0.5]), np.array([0.25, 0.625])
    coords = [a, b, a]
    assert termination_test(coords, [1.0, 0.9, 0.8], 1e-10) is Termination.T2
    assert termination_test(coords, [1.0, 0.8, 0.9], 1e-10) is None
    assert termination_test([b, b[:1], b], [1.0, 0.9, 0.8], 1e-10) is None


def test_t1_takes_precedence_over_t2():
    a = np.array([0.5])
    assert termination_test([a, a, a], [1.0, 1.0, 0.9], 1e-10) is Termination.T1


def test_config_validation():
    with pytest.raises(ValueError):
        OuterConfig(epsilon=0.0)
    with pytest.raises(ValueError):
        OuterConfig(max_outer=0)


def test_zero_desired_state():
    # p vanishes identically, which the nondegeneracy check reports
    with pytest.warns(DegenerateAdjointWarning):
        res = run_outer(assemble(uniform_mesh(32)), np.zeros(32), 1e-5)
    assert not res.assumption_ok
    assert res.termination is Termination.T1 and res.outer_iterations == 2
    assert res.support_nodes.size == 0 and res.solution.a == 0.0


def test_max_outer_reports_best_iterate():
    spec = example1()
    res = solve_level(spec, 64, OuterConfig(max_outer=1))
    assert res.termination is Termination.MAX_ITER and not res.converged
    assert res.outer_iterations == 1 and len(res.history) == 1


@pytest.mark.parametrize("N", [64, 256, 512])
def test_example1_support(N):
    res = solve_level(example1(), N)
    assert res.converged and res.support_nodes.size == 3
    _, xc = example1_constants()
    found = uniform_mesh(N).nodes[res.support_nodes]
    assert np.all(np.abs(found - [xc, 0.5, 1 - xc]) <= 1.0 / N)
    assert np.array_equal(np.sign(res.solution.c), [1, -1, 1])


@pytest.mark.parametrize("spec", [example1(), example2()], ids=["example1", "example2"])
@pytest.mark.parametrize("N", [32, 128, 256])
def test_multiplier_invariants(spec, N):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateAdjointWarning)
        res = solve_level(spec, N)
    sol, alpha = res.solution, spec.alpha
    phi = sol.phi.values
    assert res.converged
    assert np.abs(phi).max() <= alpha * (1 + 1e-6)
    assert abs(phi[-1]) <= 1e-6 * alpha
    assert sol.kkt_residual <= 1e-6 * alpha
    assert len(res.history) == res.outer_iterations
    # sign changes of the final adjoint are all carried by the reported jumps
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateAdjointWarning)
        detected = detect_support(sol.p)
    assert set(detected.tolist()) <= set(res.support_nodes.tolist())
