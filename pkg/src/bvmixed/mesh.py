"""One-dimensional partitions of the unit interval."""

import numpy as np


class Mesh:
    """Partition 0 = x_0 < x_1 < ... < x_N = 1.

    Cell ``i`` (zero based) is the interval (x_i, x_{i+1}). Instances are
    treated as immutable; the node array is flagged read-only.
    """

    def __init__(self, nodes):
        nodes = np.array(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a mesh needs at least two nodes")
        if nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise ValueError("mesh nodes must start at 0 and end at 1")
        sizes = np.diff(nodes)
        if np.any(sizes <= 0.0):
            raise ValueError("mesh nodes must be strictly increasing")
        nodes.flags.writeable = False
        sizes.flags.writeable = False
        self._nodes = nodes
        self._sizes = sizes

    @property
    def nodes(self):
        return self._nodes

    @property
    def cell_sizes(self):
        return self._sizes

    @property
    def num_cells(self):
        return self._sizes.size

    @property
    def num_nodes(self):
        return self._nodes.size

    @property
    def h_max(self):
        return float(self._sizes.max())

    @property
    def midpoints(self):
        return 0.5 * (self._nodes[:-1] + self._nodes[1:])

    def locate(self, x):
        """Index of the cell containing each point (right endpoint goes left)."""
        idx = np.searchsorted(self._nodes, x, side="right") - 1
        return np.clip(idx, 0, self.num_cells - 1)

    def refines(self, coarse):
        """True if every node of ``coarse`` is a node of this mesh."""
        pos = np.searchsorted(self._nodes, coarse.nodes)
        pos = np.clip(pos, 0, self.num_nodes - 1)
        return bool(np.all(np.abs(self._nodes[pos] - coarse.nodes) <= 1e-14))

    def parent_cells(self, coarse):
        """For each cell of this (fine) mesh, the index of the coarse cell containing it."""
        if not self.refines(coarse):
            raise ValueError("meshes are not nested")
        return coarse.locate(self.midpoints)

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return self._nodes.shape == other._nodes.shape and bool(
            np.all(self._nodes == other._nodes)
        )

    def __hash__(self):
        return hash(self._nodes.tobytes())

    def __repr__(self):
        return f"Mesh(N={self.num_cells}, h_max={self.h_max:.4g})"


def uniform_mesh(N):
    """Uniform mesh with ``N`` cells of size 1/N."""
    if int(N) != N or N < 2:
        raise ValueError(f"uniform_mesh needs an integer N >= 2, got {N!r}")
    N = int(N)
    return Mesh(np.arange(N + 1) / N)


def from_nodes(nodes):
    return Mesh(nodes)
