"""Convergence studies over dyadic grid levels."""

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .analytic_examples import ExampleSpec, get_example
from .bv_control import l1_distance, l2_distance
from .mesh import Mesh, uniform_mesh
from .mixed_fem import assemble
from .quadrature import cell_points
from .reduced_problem import yd_cell_averages
from .support_solver import OuterConfig, OuterResult, run_outer

log = logging.getLogger(__name__)

ERROR_NAMES = ("err_u_l1", "err_u_l2", "err_y_l2", "err_p_linf", "err_phi_linf")
_GAUSS = 5


@dataclass
class StudyRecord:
    h: float
    err_u_l1: float
    err_u_l2: float
    err_y_l2: float
    err_p_linf: float
    err_phi_linf: float
    converged: bool = True

    def errors(self):
        return np.array([getattr(self, name) for name in ERROR_NAMES])


@dataclass
class StudyReport:
    example: str
    records: List[StudyRecord]
    eoc: np.ndarray
    mean_eoc: np.ndarray
    bestfit_slope: np.ndarray
    reference_N: Optional[int] = None
    results: list = field(default_factory=list, repr=False)

    @property
    def converged(self):
        return all(r.converged for r in self.records)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("h",) + ERROR_NAMES)
        for rec in self.records:
            writer.writerow([_fmt(rec.h)] + [_fmt(e) for e in rec.errors()])
        buf.write("# eoc\n")
        for (h1, h2), row in zip(self._pairs(), self.eoc):
            writer.writerow([_fmt(h1), _fmt(h2)] + [_fmt(v) for v in row])
        writer.writerow(["# mean"] + [_fmt(v) for v in self.mean_eoc])
        writer.writerow(["# bestfit"] + [_fmt(v) for v in self.bestfit_slope])
        return buf.getvalue()

    def to_dict(self):
        return {
            "example": self.example,
            "reference_N": self.reference_N,
            "records": [
                dict(h=r.h, converged=r.converged, **dict(zip(ERROR_NAMES, r.errors().tolist())))
                for r in self.records
            ],
            "eoc": [
                {"h1": h1, "h2": h2, **dict(zip(ERROR_NAMES, map(_json_float, row)))}
                for (h1, h2), row in zip(self._pairs(), self.eoc)
            ],
            "mean": dict(zip(ERROR_NAMES, map(_json_float, self.mean_eoc))),
            "bestfit": dict(zip(ERROR_NAMES, map(_json_float, self.bestfit_slope))),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def _pairs(self):
        hs = [r.h for r in self.records]
        return list(zip(hs[:-1], hs[1:]))


def _fmt(v):
    return "nan" if not np.isfinite(v) else f"{v:.6g}"


def _json_float(v):
    return None if not np.isfinite(v) else float(v)


def eoc(e1, e2, h1, h2):
    """log(e1/e2) / log(h1/h2); NaN when undefined."""
    if not (e1 > 0 and e2 > 0 and h1 > 0 and h2 > 0) or h1 == h2:
        return math.nan
    return math.log(e1 / e2) / math.log(h1 / h2)


def bestfit_slope(hs, errs):
    """Least-squares slope of log(err) against log(h)."""
    hs = np.asarray(hs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if hs.size < 2 or hs.size != errs.size:
        raise ValueError("need at least two (h, err) pairs")
    if np.any(hs <= 0) or np.any(errs <= 0):
        return math.nan
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


def errors_vs_exact(spec: ExampleSpec, result: OuterResult, mesh: Mesh = None):
    ex = spec.exact
    if ex is None:
        raise ValueError(f"{spec.name} has no exact solution")
    sol = result.solution
    mesh = mesh or sol.mesh
    u_h = sol.jump_control()
    x, w = cell_points(mesh.nodes, _GAUSS)
    y_err = math.sqrt(float(np.sum(w * (ex.y_bar(x) - sol.y.values[:, None]) ** 2)))
    xp = np.column_stack((x, mesh.midpoints))
    p_err = float(np.max(np.abs(ex.p_bar(xp) - sol.p.values[:, None])))
    xs = np.concatenate((mesh.nodes, x.ravel()))
    phi_err = float(np.max(np.abs(ex.phi_bar(xs) - sol.phi(xs))))
    return StudyRecord(
        h=mesh.h_max,
        err_u_l1=l1_distance(ex.u_bar, u_h),
        err_u_l2=l2_distance(ex.u_bar, u_h),
        err_y_l2=y_err,
        err_p_linf=p_err,
        err_phi_linf=phi_err,
        converged=result.converged,
    )


def errors_vs_reference(ref: OuterResult, result: OuterResult, mesh: Mesh = None):
    """Errors against a solution on a nested finer mesh."""
    fine = ref.mesh
    coarse = mesh or result.mesh
    parent = fine.parent_cells(coarse)
    rs, cs = ref.solution, result.solution
    hf = fine.cell_sizes
    y_err = math.sqrt(float(np.sum(hf * (rs.y.values - cs.y.values[parent]) ** 2)))
    p_err = float(np.max(np.abs(rs.p.values - cs.p.values[parent])))
    phi_err = float(np.max(np.abs(rs.phi.values - cs.phi(fine.nodes))))
    u_ref, u_h = rs.jump_control(), cs.jump_control()
    return StudyRecord(
        h=coarse.h_max,
        err_u_l1=l1_distance(u_ref, u_h),
        err_u_l2=l2_distance(u_ref, u_h),
        err_y_l2=y_err,
        err_p_linf=p_err,
        err_phi_linf=phi_err,
        converged=result.converged,
    )


def solve_level(spec: ExampleSpec, N: int, config: OuterConfig = None) -> OuterResult:
    mesh = uniform_mesh(N)
    system = assemble(mesh, spec.coefficients)
    return run_outer(system, yd_cell_averages(spec.yd, mesh), spec.alpha, config)


def _solve_named(args):
    name, alpha, N, config = args
    return solve_level(get_example(name, alpha), N, config)


def summarize(example, records, reference_N=None, results=()):
    hs = np.array([r.h for r in records])
    errs = np.array([r.errors() for r in records]).reshape(len(records), len(ERROR_NAMES))
    rows = [
        [eoc(errs[i, k], errs[i + 1, k], hs[i], hs[i + 1]) for k in range(len(ERROR_NAMES))]
        for i in range(len(records) - 1)
    ]
    eocs = np.array(rows, dtype=float).reshape(-1, len(ERROR_NAMES))
    if eocs.shape[0]:
        with np.errstate(invalid="ignore"):
            mean = np.array([np.nanmean(col) if np.any(np.isfinite(col)) else math.nan for col in eocs.T])
        slope = np.array([bestfit_slope(hs, errs[:, k]) for k in range(len(ERROR_NAMES))])
    else:
        mean = np.full(len(ERROR_NAMES), math.nan)
        slope = np.full(len(ERROR_NAMES), math.nan)
    return StudyReport(example, list(records), eocs, mean, slope, reference_N, list(results))


def run_study(example, levels, config: OuterConfig = None, jobs=1, reference_level=10,
              alpha=None):
    """Solve every level N = 2**k, k in ``levels``, and tabulate errors and rates.

    Without an exact solution the errors are taken against a reference solve
    at N = 2**reference_level, which must be finer than every level.
    """
    spec = get_example(example, alpha) if isinstance(example, str) else example
    levels = list(levels)
    if not levels or min(levels) < 1 or max(levels) > 12:
        raise ValueError("levels must lie within 1..12")
    config = config or OuterConfig()
    Ns = [2**k for k in levels]
    needs_ref = spec.exact is None
    if needs_ref and max(levels) >= reference_level:
        raise ValueError("reference level must be finer than every study level")
    todo = Ns + ([2**reference_level] if needs_ref else [])

    args = [(spec.name, spec.alpha, N, config) for N in todo]
    if jobs > 1 and isinstance(example, str):
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_solve_named, args))
    else:
        results = [solve_level(spec, N, config) for N in todo]

    ref = results.pop() if needs_ref else None
    records = []
    for N, res in zip(Ns, results):
        if not res.converged:
            log.warning("level N=%d did not converge (%s)", N, res.termination.value)
        rec = errors_vs_exact(spec, res) if ref is None else errors_vs_reference(ref, res)
        records.append(rec)
    return summarize(spec.name, records, 2**reference_level if needs_ref else None, results)
