"""Self-check suites run by ``bvmixed check``."""

import itertools
from dataclasses import dataclass

import numpy as np

from .analytic_examples import example1, example2, verify_example1_consistency, ConsistencyError
from .bv_control import JumpControl, bv_seminorm, l1_distance, upsilon_project
from .mesh import from_nodes, uniform_mesh
from .mixed_fem import Coefficients, assemble, solve_state
from .quadrature import cell_points
from .reduced_problem import ReducedProblem, objective, prox_solve, smooth_gradient
from .study import solve_level


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def random_support(rng, N, max_jumps=5):
    m = int(rng.integers(0, min(max_jumps, N - 1) + 1))
    return np.sort(rng.choice(np.arange(1, N), size=m, replace=False))


def fd_gradient(prob, a, c, step=1e-6):
    """Central differences of the tracking term (the L1 part removed)."""
    def smooth(v):
        return objective(prob, v[0], v[1:]) - prob.alpha * np.sum(np.abs(v[1:]))

    v = np.concatenate(([a], c))
    g = np.empty_like(v)
    for i in range(v.size):
        e = np.zeros_like(v)
        e[i] = step
        g[i] = (smooth(v + e) - smooth(v - e)) / (2 * step)
    return g


def gradient_check(seed=0, Ns=(8, 32, 128), points=20, tol=1e-6):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for N in Ns:
        system = assemble(uniform_mesh(N))
        for _ in range(points):
            prob = ReducedProblem(system, rng.normal(size=N), 1e-3, random_support(rng, N))
            a, c = rng.normal(), rng.normal(size=prob.num_jumps)
            g_a, g_c = smooth_gradient(prob, a, c)
            g = np.concatenate(([g_a], g_c))
            g_fd = fd_gradient(prob, a, c)
            worst = max(worst, np.linalg.norm(g - g_fd) / np.linalg.norm(g_fd))
    return CheckResult("gradient vs finite differences", worst <= tol,
                       f"max relative error {worst:.2e} (tol {tol:g})")


def dense_schur(mesh):
    """K = B^T A^{-1} B for a = 1, d = 0, straight from the element formulas."""
    h = mesh.cell_sizes
    N = h.size
    A = np.zeros((N + 1, N + 1))
    for j in range(N):
        A[j:j + 2, j:j + 2] += h[j] / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
    B = np.zeros((N + 1, N))
    B[np.arange(N), np.arange(N)] = -1.0
    B[np.arange(1, N + 1), np.arange(N)] = 1.0
    return B.T @ np.linalg.solve(A, B)


def sign_pattern_oracle(mesh, yd_cells, alpha):
    """Minimum of the full-support problem by enumerating every sign pattern of c.

    With the signs fixed the objective is a smooth quadratic on the subspace
    of free coefficients; its minimizer solves the normal equations of an
    equality-constrained least-squares problem. The true objective is
    evaluated there and the smallest value over all patterns is the optimum.
    """
    N = mesh.num_cells
    h = mesh.cell_sizes
    K = dense_schur(mesh)
    S = np.tril(np.ones((N, N)))
    Y = np.linalg.solve(K, h[:, None] * S)

    def f(v):
        return 0.5 * np.sum(h * (Y @ v - yd_cells) ** 2) + alpha * np.sum(np.abs(v[1:]))

    best = np.inf
    for pattern in itertools.product((-1.0, 0.0, 1.0), repeat=N - 1):
        sigma = np.array(pattern)
        free = np.concatenate(([0], np.flatnonzero(sigma) + 1))
        Yf = Y[:, free]
        H = Yf.T @ (h[:, None] * Yf)
        rhs = Yf.T @ (h * yd_cells) - alpha * np.concatenate(([0.0], sigma[free[1:] - 1]))
        v_free = np.linalg.solve(H, rhs)
        v = np.zeros(N)
        v[free] = v_free
        best = min(best, f(v))
    return best


def oracle_check(seed=0, N=8, trials=5, alpha=1e-3, tol=1e-8):
    rng = np.random.default_rng(seed)
    mesh = uniform_mesh(N)
    system = assemble(mesh)
    worst = 0.0
    for _ in range(trials):
        yd = rng.normal(size=N)
        prob = ReducedProblem(system, yd, alpha, np.arange(1, N))
        sol = prox_solve(prob)
        worst = max(worst, abs(sol.objective - sign_pattern_oracle(mesh, yd, alpha)))
    return CheckResult(f"N={N} full-support sign-pattern oracle", worst <= tol,
                       f"max objective gap {worst:.2e} (tol {tol:g})")


def kkt_check(N=256, tol=1e-6):
    lines, ok = [], True
    for spec in (example1(), example2()):
        res = solve_level(spec, N)
        rel = res.solution.kkt_residual / spec.alpha
        ok &= bool(res.converged and rel <= tol)
        lines.append(f"{spec.name} {res.termination.value} kkt/alpha={rel:.1e}")
    return CheckResult(f"optimality conditions at N={N}", ok, "; ".join(lines))


def consistency_check():
    try:
        report = verify_example1_consistency(example1())
    except ConsistencyError as exc:
        return CheckResult("example1 data consistency", False, str(exc))
    worst = max(report, key=report.get)
    return CheckResult("example1 data consistency", True,
                       f"largest defect {worst}={report[worst]:.1e}")


def random_mesh(rng, n_min=2, n_max=64):
    n = int(rng.integers(n_min, n_max + 1))
    interior = np.sort(rng.uniform(0.0, 1.0, size=n - 1))
    return from_nodes(np.concatenate(([0.0], interior, [1.0])))


def random_jump_control(rng, max_jumps=8):
    m = int(rng.integers(0, max_jumps + 1))
    locs = np.unique(rng.uniform(0.0, 1.0, size=m))
    locs = locs[(locs > 0.0) & (locs < 1.0)]
    return JumpControl(rng.normal(), locs, rng.normal(size=locs.size))


def projection_check(seed=0, trials=100, tol=1e-14):
    """Cell averaging: integral identity, L1 error <= h |u'|, seminorm contraction."""
    rng = np.random.default_rng(seed)
    worst_identity, ok = 0.0, True
    for _ in range(trials):
        mesh = random_mesh(rng)
        u = random_jump_control(rng)
        proj = upsilon_project(u, mesh)
        w = rng.normal(size=mesh.num_cells)
        # (u, w) integrated piece by piece on the merged partition
        breaks = np.union1d(mesh.nodes, u.jump_locs)
        mid = 0.5 * (breaks[:-1] + breaks[1:])
        lhs = np.sum(np.diff(breaks) * u.evaluate(mid) * w[mesh.locate(mid)])
        rhs = w @ (proj.values * mesh.cell_sizes)
        scale = np.abs(w).max() * (abs(u.base) + bv_seminorm(u))
        worst_identity = max(worst_identity, abs(lhs - rhs) / max(scale, 1e-300))
        v = JumpControl.from_cells(mesh, proj.values)
        tv = bv_seminorm(u)
        ok &= l1_distance(u, v) <= mesh.h_max * tv * (1 + 1e-12) + 1e-15
        ok &= bv_seminorm(v) <= tv * (1 + 1e-12) + 1e-15
    ok &= worst_identity <= tol
    return CheckResult(f"cell-average projection laws on {trials} random controls", bool(ok),
                       f"identity defect {worst_identity:.1e}, inequalities "
                       f"{'hold' if ok else 'violated'}")


def manufactured_rates(levels=range(3, 10)):
    """L2 state errors for -y'' = 1 against y = x(1 - x)/2, and the EOCs."""
    hs, errs = [], []
    for k in levels:
        mesh = uniform_mesh(2**k)
        _, y = solve_state(assemble(mesh), mesh.cell_sizes.copy())
        x, w = cell_points(mesh.nodes, 5)
        errs.append(np.sqrt(np.sum(w * (x * (1 - x) / 2 - y.values[:, None]) ** 2)))
        hs.append(mesh.h_max)
    hs, errs = np.array(hs), np.array(errs)
    return hs, errs, np.log(errs[:-1] / errs[1:]) / np.log(hs[:-1] / hs[1:])


def fem_check(seed=0, trials=20, tol=1e-10):
    _, _, rates = manufactured_rates()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        mesh = random_mesh(rng, n_max=200)
        system = assemble(mesh, Coefficients(lambda x: 1.0 + x, lambda x: 1.0 - x))
        u = rng.normal(size=mesh.num_cells)
        z, y = solve_state(system, u)
        z_s, y_s = system.solve_state_schur(u)
        worst = max(worst, np.abs(z.values - z_s).max(), np.abs(y.values - y_s).max())
    ok = bool(np.all((rates >= 0.9) & (rates <= 1.1)) and worst <= tol)
    return CheckResult("mixed FEM manufactured rate and Schur path", ok,
                       f"EOC range [{rates.min():.3f}, {rates.max():.3f}], "
                       f"block vs Schur {worst:.1e}")


def run_all(seed=0):
    return [
        fem_check(seed),
        projection_check(seed),
        gradient_check(seed),
        kkt_check(),
        consistency_check(),
        oracle_check(seed),
    ]
