"""Uniform 1D grid over [0, L] with the discrete calculus shared by all solvers.

Nodal fields live on the ``n_cells + 1`` grid nodes, cell fields on the
``n_cells`` midpoints.  Quadrature pairing used throughout the package:
trapezoid for nodal integrands, midpoint for cell integrands; forward
differences map nodal fields to cell fields.  The degradation coefficient
``eta + v**2`` is averaged onto cells as the mean of the squared nodal
values, which makes the u-solve, the v-solve and the energy the exact
coordinate pieces of one discrete functional (see :mod:`atobstacle.energy`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Nodal/cell fields are plain float arrays sized node_count / n_cells.
NodalField = np.ndarray
CellField = np.ndarray


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on [0, length] with ``n_cells`` cells of width ``spacing``."""

    length: float
    n_cells: int
    spacing: float
    node_count: int

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.node_count)

    @property
    def midpoints(self) -> np.ndarray:
        x = self.nodes
        return 0.5 * (x[:-1] + x[1:])


def make_grid(length: float, n_cells: int) -> Grid1D:
    """Build a uniform grid; rejects non-positive length and n_cells < 2."""
    if not np.isfinite(length) or length <= 0.0:
        raise ValueError(f"grid length must be positive, got {length}")
    if int(n_cells) != n_cells or n_cells < 2:
        raise ValueError(f"n_cells must be an integer >= 2, got {n_cells}")
    n = int(n_cells)
    return Grid1D(float(length), n, float(length) / n, n + 1)


def require_nodal(f: NodalField, g: Grid1D) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (g.node_count,):
        raise ValueError(f"nodal field of size {f.shape} does not match grid with {g.node_count} nodes")
    return f


def require_cell(f: CellField, g: Grid1D) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (g.n_cells,):
        raise ValueError(f"cell field of size {f.shape} does not match grid with {g.n_cells} cells")
    return f


def integrate(f: NodalField, g: Grid1D) -> float:
    """Trapezoidal quadrature of a nodal field over [0, L]."""
    f = require_nodal(f, g)
    return float(g.spacing * (f.sum() - 0.5 * (f[0] + f[-1])))


def integrate_cells(f: CellField, g: Grid1D) -> float:
    """Midpoint quadrature of a cell field over [0, L]."""
    f = require_cell(f, g)
    return float(g.spacing * f.sum())


def derivative(f: NodalField, g: Grid1D) -> CellField:
    """Forward differences (f[i+1] - f[i]) / h, one value per cell."""
    f = require_nodal(f, g)
    return np.diff(f) / g.spacing


def node_average(c: CellField, g: Grid1D) -> NodalField:
    """Average a cell field onto nodes; one-sided at the two endpoints."""
    c = require_cell(c, g)
    out = np.empty(g.node_count)
    out[0] = c[0]
    out[-1] = c[-1]
    out[1:-1] = 0.5 * (c[:-1] + c[1:])
    return out


def cell_mean_square(v: NodalField, g: Grid1D) -> CellField:
    """Cellwise mean of the squared nodal values, (v_i^2 + v_{i+1}^2) / 2."""
    v = require_nodal(v, g)
    return 0.5 * (v[:-1] ** 2 + v[1:] ** 2)
