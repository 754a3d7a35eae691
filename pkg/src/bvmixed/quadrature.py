"""Gauss-Legendre rules mapped onto mesh cells."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_legendre(npts):
    """Reference points and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w


def cell_points(nodes, npts):
    """Quadrature points and weights for every cell.

    Returns arrays of shape (N, npts); weights already include the cell size.
    """
    nodes = np.asarray(nodes, dtype=float)
    ref_x, ref_w = gauss_legendre(npts)
    left = nodes[:-1, None]
    h = np.diff(nodes)[:, None]
    return left + h * ref_x, h * ref_w
