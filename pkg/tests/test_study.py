import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bvmixed.analytic_examples import ExactSolution, ExampleSpec, example1
from bvmixed.study import (
    ERROR_NAMES, StudyRecord, bestfit_slope, eoc, errors_vs_exact, errors_vs_reference,
    run_study, solve_level, summarize,
)
from bvmixed.support_solver import DegenerateAdjointWarning

positive = st.floats(1e-8, 1e3)


def test_eoc_examples():
    assert eoc(0.2, 0.1, 0.5, 0.25) == pytest.approx(1.0)
    assert eoc(0.4, 0.1, 0.5, 0.25) == pytest.approx(2.0)
    assert eoc(0.1, 0.2, 0.5, 0.25) == pytest.approx(-1.0)


@pytest.mark.parametrize("args", [(0.0, 0.1, 0.5, 0.25), (-1.0, 0.1, 0.5, 0.25),
                                  (0.1, 0.1, 0.5, 0.5)])
def test_eoc_undefined(args):
    assert math.isnan(eoc(*args))


@given(positive, positive, positive, positive)
def test_eoc_antisymmetry(e1, e2, h1, h2):
    if h1 == h2:
        return
    assert eoc(e1, e2, h1, h2) == pytest.approx(eoc(e2, e1, h2, h1), rel=1e-12, abs=1e-12)


def test_bestfit_slope_examples():
    hs = 2.0 ** -np.arange(2, 10)
    assert bestfit_slope(hs, 3 * hs) == pytest.approx(1.0, abs=1e-12)
    assert bestfit_slope(hs, 3 * np.sqrt(hs)) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        bestfit_slope([0.5], [0.1])


@given(st.floats(1e-6, 1e6), st.integers(0, 2**32 - 1))
def test_bestfit_slope_scale_invariant(scale, seed):
    rng = np.random.default_rng(seed)
    hs = 2.0 ** -np.arange(2, 8)
    errs = hs * np.exp(rng.normal(size=hs.size))
    assert bestfit_slope(hs, scale * errs) == pytest.approx(bestfit_slope(hs, errs), abs=1e-9)


def test_reference_against_itself_is_zero():
    res = solve_level(example1(), 64)
    rec = errors_vs_reference(res, res)
    assert np.all(rec.errors() == 0.0)


def test_errors_vanish_when_exact_solution_is_discrete():
    spec = example1()
    res = solve_level(spec, 16)
    sol = res.solution
    exact = ExactSolution(sol.jump_control(), sol.y, None, sol.p, None, sol.phi)
    synthetic = ExampleSpec("synthetic", spec.alpha, spec.yd, spec.coefficients, exact)
    assert np.all(errors_vs_exact(synthetic, res).errors() == 0.0)


def test_single_level_has_empty_eoc():
    report = run_study("example1", [5])
    assert report.eoc.shape == (0, 5) and np.all(np.isnan(report.mean_eoc))
    lines = report.to_csv().splitlines()
    assert lines[0] == "h," + ",".join(ERROR_NAMES) and lines[2] == "# eoc"


def test_report_shape_and_formats():
    report = run_study("example2", range(2, 5), reference_level=7)
    assert report.eoc.shape == (2, 5) and len(report.records) == 3
    csv = report.to_csv().splitlines()
    assert len(csv) == 1 + 3 + 1 + 2 + 2
    assert csv[-2].startswith("# mean,") and csv[-1].startswith("# bestfit,")
    assert report.to_dict()["reference_N"] == 128


def test_study_validation():
    with pytest.raises(ValueError):
        run_study("example2", [8], reference_level=8)
    with pytest.raises(ValueError):
        run_study("example1", [13])


def test_parallel_matches_serial():
    serial = run_study("example1", range(3, 7))
    parallel = run_study("example1", range(3, 7), jobs=2)
    assert serial.to_csv() == parallel.to_csv()


@pytest.fixture(scope="module")
def example1_errors():
    with warnings.catch_warnings():
        # N=128 has an adjoint cell value below the degeneracy threshold
        warnings.simplefilter("ignore", DegenerateAdjointWarning)
        report = run_study("example1", range(4, 12))
    return np.array([r.errors() for r in report.records])


@pytest.mark.parametrize("name", ["err_u_l1", "err_y_l2", "err_p_linf", "err_phi_linf"])
def test_example1_errors_decrease(example1_errors, name):
    col = example1_errors[:, ERROR_NAMES.index(name)]
    assert np.all(np.diff(col) < 0)


@pytest.mark.xfail(strict=True, reason="the node nearest x_c is 57/256 for every N in "
                   "256..2048, so the control L2 error plateaus at 1.79e-2 and drifts up by ~1e-7")
def test_example1_all_error_columns_decrease(example1_errors):
    assert np.all(np.diff(example1_errors, axis=0) < 0)


def test_summarize_handles_zero_errors():
    recs = [StudyRecord(0.5, 0.0, 0.1, 0.1, 0.1, 0.1), StudyRecord(0.25, 0.0, 0.05, 0.05, 0.05, 0.05)]
    report = summarize("x", recs)
    assert math.isnan(report.eoc[0, 0]) and report.eoc[0, 1] == pytest.approx(1.0)
    assert "nan" in report.to_csv()
