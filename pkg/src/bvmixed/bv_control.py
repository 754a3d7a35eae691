"""Step-function controls of bounded variation.

A control is a base value plus finitely many jumps,

    u(x) = base + sum_{i: x_i < x} c_i,

which covers both the continuous optimal controls (jumps anywhere in (0, 1))
and the discrete ones (jumps at mesh nodes).
"""

import json

import numpy as np

from .mixed_fem import P0Function, P1Function


class JumpControl:
    def __init__(self, base, jump_locs=(), jump_heights=()):
        locs = np.array(jump_locs, dtype=float).reshape(-1)
        heights = np.array(jump_heights, dtype=float).reshape(-1)
        if locs.shape != heights.shape:
            raise ValueError("jump_locs and jump_heights differ in length")
        if locs.size and (locs[0] <= 0.0 or locs[-1] >= 1.0):
            raise ValueError("jump locations must lie in the open interval (0, 1)")
        if np.any(np.diff(locs) <= 0.0):
            raise ValueError("jump locations must be strictly increasing")
        locs.flags.writeable = False
        heights.flags.writeable = False
        self.base = float(base)
        self.jump_locs = locs
        self.jump_heights = heights

    @classmethod
    def from_cells(cls, mesh, values):
        """Step function with the given value on each mesh cell."""
        values = np.asarray(values, dtype=float)
        diffs = np.diff(values)
        keep = diffs != 0.0
        return cls(values[0], mesh.nodes[1:-1][keep], diffs[keep])

    @property
    def num_jumps(self):
        return self.jump_locs.size

    def evaluate(self, x):
        """Value at ``x``; at a jump point the left limit is returned."""
        x = np.asarray(x, dtype=float)
        partial = np.concatenate(([0.0], np.cumsum(self.jump_heights)))
        return self.base + partial[np.searchsorted(self.jump_locs, x, side="left")]

    __call__ = evaluate

    def antiderivative(self, x):
        """int_0^x u(s) ds."""
        x = np.asarray(x, dtype=float)
        ramps = np.maximum(x[..., None] - self.jump_locs, 0.0)
        return self.base * x + ramps @ self.jump_heights

    def piecewise(self):
        """Breakpoints (including 0 and 1) and the value on each piece."""
        breaks = np.concatenate(([0.0], self.jump_locs, [1.0]))
        values = self.base + np.concatenate(([0.0], np.cumsum(self.jump_heights)))
        return breaks, values

    def to_dict(self):
        return {
            "base": self.base,
            "jumps": [
                {"x": float(x), "c": float(c)}
                for x, c in zip(self.jump_locs, self.jump_heights)
            ],
        }

    @classmethod
    def from_dict(cls, data):
        jumps = data.get("jumps", [])
        return cls(data["base"], [j["x"] for j in jumps], [j["c"] for j in jumps])

    def to_json(self):
        return json.dumps(self.to_dict())

    def __repr__(self):
        return (
            f"JumpControl(base={self.base:g}, jumps="
            f"{list(zip(self.jump_locs.round(6), self.jump_heights.round(6)))})"
        )


def evaluate(u, x):
    return u.evaluate(x)


def bv_seminorm(u):
    return float(np.sum(np.abs(u.jump_heights)))


def cell_averages(u, mesh):
    """Mean of ``u`` over every mesh cell.

    A jump inside a cell contributes the fraction of the cell to its right,
    jumps left of the cell contribute fully. Working with fractions instead of
    differences of the antiderivative keeps tiny cells free of cancellation.
    """
    right, h = mesh.nodes[1:], mesh.cell_sizes
    frac = np.clip((right[:, None] - u.jump_locs) / h[:, None], 0.0, 1.0)
    return u.base + frac @ u.jump_heights


def cell_integrals(u, mesh):
    """Exact integrals of ``u`` over every mesh cell."""
    return cell_averages(u, mesh) * mesh.cell_sizes


def upsilon_project(u, mesh):
    """Cell-average projection onto piecewise constants."""
    return P0Function(mesh, cell_averages(u, mesh))


def phi_from_p(p):
    """Antiderivative Phi(x) = int_0^x p of a P0 function, as a P1 function."""
    nodal = np.concatenate(([0.0], np.cumsum(p.values * p.mesh.cell_sizes)))
    return P1Function(p.mesh, nodal)


def _difference_pieces(u, v):
    breaks = np.union1d(
        np.concatenate((u.jump_locs, v.jump_locs)), np.array([0.0, 1.0])
    )
    mid = 0.5 * (breaks[:-1] + breaks[1:])
    return np.diff(breaks), u.evaluate(mid) - v.evaluate(mid)


def l1_distance(u, v):
    """Exact L1(0,1) distance between two step functions."""
    lengths, diff = _difference_pieces(u, v)
    return float(np.sum(lengths * np.abs(diff)))


def l2_distance(u, v):
    """Exact L2(0,1) distance between two step functions."""
    lengths, diff = _difference_pieces(u, v)
    return float(np.sqrt(np.sum(lengths * diff**2)))
