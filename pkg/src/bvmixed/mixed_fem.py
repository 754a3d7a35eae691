"""Lowest-order Raviart-Thomas discretization of -(a y')' + d y = u on (0, 1).

The flux z = a y' lives in P1 (continuous piecewise linear, N+1 nodal values)
and the state y in P0 (one value per cell). With the hat functions e_i and the
cell indicators chi_j the discrete equations read

    A z + B y = 0,       -B^T z + D y = u,

where A_ij = int (1/a) e_i e_j, B_ij = int e_i' chi_j, D_jj = int d chi_j and
u_j = int_{I_j} u. Eliminating z gives K y = u with K = B^T A^{-1} B + D.

K is dense (A^{-1} is), so solves go through a banded LU of the full block
system with the unknowns interleaved as (z_0, y_1, z_1, y_2, ..., z_N); the
bandwidth is two on each side. ``schur_complement`` forms K explicitly and is
kept as an independent route for verification.
"""

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solveh_banded
from scipy.linalg.lapack import dgbtrf, dgbtrs

from .mesh import Mesh
from .quadrature import cell_points

_KL = _KU = 2
_QUAD_PTS = 3


class InvalidCoefficientError(ValueError):
    pass


def _as_function(value):
    if callable(value):
        return value
    const = float(value)
    return lambda x: np.full(np.shape(x), const)


class Coefficients:
    """Diffusion ``a`` (> 0) and reaction ``d`` (>= 0); constants or vectorized callables."""

    def __init__(self, a=1.0, d=0.0):
        self.a = _as_function(a)
        self.d = _as_function(d)
        self.constant_a = None if callable(a) else float(a)
        self.constant_d = None if callable(d) else float(d)

    def __repr__(self):
        a = self.constant_a if self.constant_a is not None else "<function>"
        d = self.constant_d if self.constant_d is not None else "<function>"
        return f"Coefficients(a={a}, d={d})"


class P0Function:
    """Piecewise constant function, one value per cell."""

    def __init__(self, mesh, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (mesh.num_cells,):
            raise ValueError(
                f"P0 function on {mesh.num_cells} cells got {values.shape} values"
            )
        self.mesh = mesh
        self.values = values

    def __call__(self, x):
        return self.values[self.mesh.locate(x)]

    def __repr__(self):
        return f"P0Function(N={self.mesh.num_cells})"


class P1Function:
    """Continuous piecewise linear function given by its nodal values."""

    def __init__(self, mesh, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (mesh.num_nodes,):
            raise ValueError(
                f"P1 function on {mesh.num_nodes} nodes got {values.shape} values"
            )
        self.mesh = mesh
        self.values = values

    def __call__(self, x):
        return np.interp(x, self.mesh.nodes, self.values)

    def __repr__(self):
        return f"P1Function(N={self.mesh.num_cells})"


def _check_same_mesh(f, g):
    if f.mesh is not g.mesh and f.mesh != g.mesh:
        raise ValueError("functions live on different meshes")


def l2_inner_p0(f, g):
    _check_same_mesh(f, g)
    return float(np.sum(f.mesh.cell_sizes * f.values * g.values))


def l2_norm_p0(f):
    return float(np.sqrt(np.sum(f.mesh.cell_sizes * f.values**2)))


def _interleave_index(N):
    """Positions of z (nodes) and y (cells) in the interleaved block vector."""
    return 2 * np.arange(N + 1), 2 * np.arange(N) + 1


class MixedSystem:
    """Assembled matrices and a reusable factorization of the block system.

    ``A`` is stored as a symmetric tridiagonal (``A_diag``, ``A_off``), ``B``
    is implied by the mesh incidence (-1 on the left node, +1 on the right
    node of every cell) and ``D`` is diagonal (``D_diag``).
    """

    def __init__(self, mesh, coeffs, A_diag, A_off, D_diag):
        self.mesh = mesh
        self.coeffs = coeffs
        self.A_diag = A_diag
        self.A_off = A_off
        self.D_diag = D_diag
        for arr in (A_diag, A_off, D_diag):
            arr.flags.writeable = False
        self._lu, self._piv = self._factorize()

    @property
    def num_cells(self):
        return self.mesh.num_cells

    # dense views, for tests and small problems
    @property
    def A(self):
        return (
            np.diag(self.A_diag) + np.diag(self.A_off, 1) + np.diag(self.A_off, -1)
        )

    @property
    def B(self):
        N = self.num_cells
        B = np.zeros((N + 1, N))
        B[np.arange(N), np.arange(N)] = -1.0
        B[np.arange(1, N + 1), np.arange(N)] = 1.0
        return B

    @property
    def D(self):
        return np.diag(self.D_diag)

    def block_matrix(self):
        """Dense (2N+1) block operator [[A, B], [-B^T, D]] in (z, y) ordering."""
        N = self.num_cells
        M = np.zeros((2 * N + 1, 2 * N + 1))
        M[: N + 1, : N + 1] = self.A
        M[: N + 1, N + 1 :] = self.B
        M[N + 1 :, : N + 1] = -self.B.T
        M[N + 1 :, N + 1 :] = self.D
        return M

    def _factorize(self):
        N = self.num_cells
        n = 2 * N + 1
        iz, iy = _interleave_index(N)
        ab = np.zeros((2 * _KL + _KU + 1, n))

        def put(i, j, v):
            ab[_KL + _KU + i - j, j] = v

        put(iz, iz, self.A_diag)
        put(iz[:-1], iz[1:], self.A_off)
        put(iz[1:], iz[:-1], self.A_off)
        # z-rows: B entries; y-rows: -B^T entries and D
        put(iz[:-1], iy, -1.0)
        put(iz[1:], iy, 1.0)
        put(iy, iz[:-1], 1.0)
        put(iy, iz[1:], -1.0)
        put(iy, iy, self.D_diag)

        lu, piv, info = dgbtrf(ab, _KL, _KU)
        if info != 0:
            raise np.linalg.LinAlgError(f"block system is singular (dgbtrf info={info})")
        return lu, piv

    def _solve_block(self, rhs_y):
        N = self.num_cells
        rhs_y = np.asarray(rhs_y, dtype=float)
        if rhs_y.shape[0] != N:
            raise ValueError(f"right-hand side must have {N} rows, got {rhs_y.shape}")
        squeeze = rhs_y.ndim == 1
        rhs_y = rhs_y.reshape(N, -1)
        iz, iy = _interleave_index(N)
        b = np.zeros((2 * N + 1, rhs_y.shape[1]), order="F")
        b[iy] = rhs_y
        x, info = dgbtrs(self._lu, _KL, _KU, b, self._piv)
        if info != 0:
            raise np.linalg.LinAlgError(f"dgbtrs failed (info={info})")
        z, y = x[iz], x[iy]
        if squeeze:
            return z[:, 0], y[:, 0]
        return z, y

    def apply_inverse(self, rhs):
        """K^{-1} rhs for a vector or an (N, k) block of right-hand sides."""
        return self._solve_block(rhs)[1]

    def schur_complement(self):
        """Dense K = B^T A^{-1} B + D, built with tridiagonal solves."""
        banded = np.zeros((2, self.num_cells + 1))
        banded[0, 1:] = self.A_off
        banded[1] = self.A_diag
        AinvB = solveh_banded(banded, self.B, lower=False)
        return self.B.T @ AinvB + self.D

    def solve_state_schur(self, u_cells):
        """Reference route through the dense Schur complement."""
        u_cells = np.asarray(u_cells, dtype=float)
        K = self.schur_complement()
        y = cho_solve(cho_factor(K), u_cells)
        banded = np.zeros((2, self.num_cells + 1))
        banded[0, 1:] = self.A_off
        banded[1] = self.A_diag
        z = -solveh_banded(banded, self.B @ y, lower=False)
        return z, y

    def __repr__(self):
        return f"MixedSystem(N={self.num_cells}, coeffs={self.coeffs!r})"


def assemble(mesh: Mesh, coeffs: Coefficients = None) -> MixedSystem:
    """Assemble A, B, D on ``mesh`` with 3-point Gauss quadrature per cell."""
    if coeffs is None:
        coeffs = Coefficients()
    x, w = cell_points(mesh.nodes, _QUAD_PTS)
    a_vals = np.asarray(coeffs.a(x), dtype=float) * np.ones_like(x)
    d_vals = np.asarray(coeffs.d(x), dtype=float) * np.ones_like(x)
    if not np.all(np.isfinite(a_vals)) or np.any(a_vals <= 0.0):
        raise InvalidCoefficientError("diffusion coefficient must be positive")
    if not np.all(np.isfinite(d_vals)) or np.any(d_vals < 0.0):
        raise InvalidCoefficientError("reaction coefficient must be nonnegative")

    h = mesh.cell_sizes[:, None]
    xi = (x - mesh.nodes[:-1, None]) / h
    left, right = 1.0 - xi, xi
    inv_a = w / a_vals
    m_ll = np.sum(inv_a * left * left, axis=1)
    m_lr = np.sum(inv_a * left * right, axis=1)
    m_rr = np.sum(inv_a * right * right, axis=1)

    A_diag = np.zeros(mesh.num_nodes)
    A_diag[:-1] += m_ll
    A_diag[1:] += m_rr
    D_diag = np.sum(w * d_vals, axis=1)
    return MixedSystem(mesh, coeffs, A_diag, m_lr.copy(), D_diag)


def solve_state(system, u_cells):
    """Discrete state for control cell integrals ``u_cells``.

    Returns the flux ``z`` (P1) and the state ``y`` (P0).
    """
    u_cells = np.asarray(u_cells, dtype=float)
    if u_cells.shape != (system.num_cells,):
        raise ValueError(
            f"expected {system.num_cells} cell integrals, got shape {u_cells.shape}"
        )
    z, y = system._solve_block(u_cells)
    return P1Function(system.mesh, z), P0Function(system.mesh, y)


def solve_adjoint(system, r_cells):
    """Discrete adjoint for ``r_cells[j] = int_{I_j} (y_h - y_d)``.

    The operator is self-adjoint, so this is the state solve with a different
    right-hand side. Returns (phi, p) as (P1, P0).
    """
    return solve_state(system, r_cells)


def weak_residuals(system, z, y, u_cells):
    """Residuals of both discrete weak equations, tested with every basis function."""
    zv = z.values if isinstance(z, P1Function) else np.asarray(z)
    yv = y.values if isinstance(y, P0Function) else np.asarray(y)
    r1 = system.A @ zv + system.B @ yv
    r2 = -system.B.T @ zv + system.D_diag * yv - np.asarray(u_cells)
    return r1, r2
