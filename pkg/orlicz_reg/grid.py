"""Uniform lattices with cell masks, nodal fields and the cell gradient operator."""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from orlicz_reg.expression import Expression
from orlicz_reg.geometry import Domain

logger = logging.getLogger(__name__)

__all__ = ["Grid", "GridField", "GridMismatchError"]


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Grid:
    """Cells of a uniform lattice whose centers lie in a domain.

    Nodes are the corners of the lattice cells. A node is active when it is
    a corner of an active cell and a boundary node when it is active and
    also touches an inactive cell or the edge of the lattice.

    Parameters
    ----------
    origin : np.ndarray
        Lower corner of the lattice, shape (n,).
    spacing : np.ndarray
        Cell size per axis, shape (n,).
    shape : tuple[int, ...]
        Number of cells per axis.
    cell_mask : np.ndarray
        Active cells, boolean array of ``shape``.
    """

    origin: np.ndarray
    spacing: np.ndarray
    shape: tuple[int, ...]
    cell_mask: np.ndarray

    @classmethod
    def for_domain(cls, domain: Domain, n: int) -> Grid:
        if domain.dimension not in (1, 2):
            raise ValueError(f"Grids are 1D or 2D, got dimension {domain.dimension}")
        if n < 2:
            raise ValueError(f"Need at least 2 cells per axis, got {n}")
        lower = np.asarray(domain.lower, dtype=float)
        upper = np.asarray(domain.upper, dtype=float)
        shape = (int(n),) * domain.dimension
        spacing = (upper - lower) / n
        grid = cls(lower, spacing, shape, np.ones(shape, dtype=bool))
        return grid.restrict(domain)

    def restrict(self, domain: Domain) -> Grid:
        """Same lattice, keeping only active cells with centers in *domain*."""
        inside = domain.contains(self._all_cell_centers, tol=0.0)
        mask = self.cell_mask & inside.reshape(self.shape)
        if not mask.any():
            raise ValueError("No grid cell center lies in the domain")
        return Grid(self.origin, self.spacing, self.shape, mask)

    def same_lattice(self, other: Grid) -> bool:
        return (
            self.shape == other.shape
            and np.allclose(self.origin, other.origin, rtol=0, atol=1e-14)
            and np.allclose(self.spacing, other.spacing, rtol=0, atol=1e-14)
        )

    # ---- Geometry ----

    @property
    def dimension(self) -> int:
        return len(self.shape)

    @property
    def h(self) -> float:
        return float(self.spacing.max())

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def node_shape(self) -> tuple[int, ...]:
        return tuple(s + 1 for s in self.shape)

    @property
    def node_count(self) -> int:
        return int(np.prod(self.node_shape))

    @functools.cached_property
    def node_coords(self) -> np.ndarray:
        axes = [
            self.origin[k] + self.spacing[k] * np.arange(m)
            for k, m in enumerate(self.node_shape)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    @functools.cached_property
    def _all_cell_centers(self) -> np.ndarray:
        axes = [
            self.origin[k] + self.spacing[k] * (np.arange(m) + 0.5)
            for k, m in enumerate(self.shape)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    @functools.cached_property
    def cell_centers(self) -> np.ndarray:
        """Centers of active cells, (C, n)."""
        return self._all_cell_centers[self.cell_mask.reshape(-1)]

    @property
    def cell_count(self) -> int:
        return int(self.cell_mask.sum())

    @functools.cached_property
    def _cell_corners(self) -> np.ndarray:
        """Flat node indices of the corners of every active cell, (C, 2^n).

        Corner order is (0), (1) in 1D and (00), (10), (01), (11) in 2D.
        """
        cells = np.argwhere(self.cell_mask)
        if self.dimension == 1:
            i = cells[:, 0]
            return np.stack([i, i + 1], axis=1)
        i, j = cells[:, 0], cells[:, 1]
        ny = self.node_shape[1]
        base = i * ny + j
        return np.stack([base, base + ny, base + 1, base + ny + 1], axis=1)

    @functools.cached_property
    def active_nodes(self) -> np.ndarray:
        mask = np.zeros(self.node_count, dtype=bool)
        mask[self._cell_corners.reshape(-1)] = True
        return mask

    @functools.cached_property
    def boundary_nodes(self) -> np.ndarray:
        # a node is interior iff every lattice cell around it exists and is active
        padded = np.pad(self.cell_mask, 1, constant_values=False)
        if self.dimension == 1:
            full = padded[:-1] & padded[1:]
        else:
            full = padded[:-1, :-1] & padded[1:, :-1] & padded[:-1, 1:] & padded[1:, 1:]
        return self.active_nodes & ~full.reshape(-1)

    @property
    def interior_nodes(self) -> np.ndarray:
        return self.active_nodes & ~self.boundary_nodes

    def cells_across(self, radius: float) -> float:
        return 2.0 * radius / self.h

    # ---- Operators ----

    @functools.cached_property
    def gradient_operator(self) -> sparse.csr_matrix:
        """Sparse D with (D u) = cell gradients, component-major, shape (n·C, nodes)."""
        corners = self._cell_corners
        count = len(corners)
        rows, cols, vals = [], [], []
        if self.dimension == 1:
            hx = self.spacing[0]
            rows = np.repeat(np.arange(count), 2)
            cols = corners.reshape(-1)
            vals = np.tile([-1.0 / hx, 1.0 / hx], count)
        else:
            hx, hy = self.spacing
            c00, c10, c01, c11 = corners.T
            ids = np.arange(count)
            # gx = ((u10 − u00) + (u11 − u01)) / 2hx, gy = ((u01 − u00) + (u11 − u10)) / 2hy
            for node, wx, wy in ((c00, -1, -1), (c10, 1, -1), (c01, -1, 1), (c11, 1, 1)):
                rows += [ids, ids + count]
                cols += [node, node]
                vals += [np.full(count, wx / (2 * hx)), np.full(count, wy / (2 * hy))]
            rows = np.concatenate(rows)
            cols = np.concatenate(cols)
            vals = np.concatenate(vals)
        return sparse.csr_matrix(
            (vals, (rows, cols)), shape=(self.dimension * count, self.node_count)
        )

    def cell_average_operator(self) -> sparse.csr_matrix:
        corners = self._cell_corners
        count, k = corners.shape
        rows = np.repeat(np.arange(count), k)
        return sparse.csr_matrix(
            (np.full(count * k, 1.0 / k), (rows, corners.reshape(-1))),
            shape=(count, self.node_count),
        )

    def cells_in_ball(self, center, radius: float) -> np.ndarray:
        """Mask over active cells whose centers lie in B_radius(center)."""
        d = np.linalg.norm(self.cell_centers - np.asarray(center, dtype=float), axis=-1)
        return d <= radius


@dataclass(frozen=True, eq=False)
class GridField:
    """Nodal values on a grid; inactive nodes carry 0."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.grid.node_count,):
            raise GridMismatchError(
                f"Field has {self.values.shape} values, grid has {self.grid.node_count} nodes"
            )

    @classmethod
    def from_expression(cls, grid: Grid, expr: Expression) -> GridField:
        values = np.zeros(grid.node_count)
        active = grid.active_nodes
        values[active] = expr.at_points(grid.node_coords[active])
        return cls(grid, values)

    @classmethod
    def from_function(cls, grid: Grid, func) -> GridField:
        values = np.zeros(grid.node_count)
        active = grid.active_nodes
        values[active] = func(grid.node_coords[active])
        return cls(grid, values)

    def gradient(self) -> np.ndarray:
        """Cell gradients, (C, n)."""
        flat = self.grid.gradient_operator @ self.values
        return flat.reshape(self.grid.dimension, -1).T

    def gradient_norm(self) -> np.ndarray:
        return np.linalg.norm(self.gradient(), axis=1)

    def cell_values(self) -> np.ndarray:
        return self.grid.cell_average_operator() @ self.values

    def on(self, grid: Grid) -> GridField:
        """This field's values on a restriction of its lattice."""
        if not self.grid.same_lattice(grid):
            raise GridMismatchError("Grids do not share a lattice")
        values = np.where(grid.active_nodes, self.values, 0.0)
        return GridField(grid, values)

    def rows(self) -> list[tuple[float, ...]]:
        active = self.grid.active_nodes
        coords = self.grid.node_coords[active]
        return [tuple(c) + (v,) for c, v in zip(coords.tolist(), self.values[active].tolist())]

    def gradient_rows(self) -> list[tuple[float, ...]]:
        norms = self.gradient_norm()
        return [
            tuple(c) + (g,) for c, g in zip(self.grid.cell_centers.tolist(), norms.tolist())
        ]
