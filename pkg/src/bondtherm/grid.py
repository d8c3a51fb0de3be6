"""Staggered primary/dual tensor-product hexahedral grid.

Nodes live on the primary grid and are indexed lexicographically with x
fastest: ``node = i + nx*j + nx*ny*k``.  Edges are ordered x-block, then
y-block, then z-block, each block again with x fastest.  Every primary edge
crosses exactly one dual facet; every primary node owns one dual cell, so
edge/facet and node/cell quantities share an index.

Dual cells split each primary interval at its midpoint: boundary nodes own
half intervals, so dual cells tile the domain exactly and each primary cell
is divided into eight equal octants by the dual planes.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, GeometryError

AXIS_NAMES = ("x", "y", "z")
FACE_NAMES = ("x_min", "x_max", "y_min", "y_max", "z_min", "z_max")


class GridSnapWarning(UserWarning):
    """A point was snapped to a grid node over a small nonzero distance."""


def _dual_widths(ticks: np.ndarray) -> np.ndarray:
    # Width of the dual interval owned by each node: half of each adjacent
    # primary interval, a single half interval at the two ends.
    d = np.diff(ticks)
    w = np.empty(ticks.size)
    w[0] = 0.5 * d[0]
    w[-1] = 0.5 * d[-1]
    w[1:-1] = 0.5 * (d[:-1] + d[1:])
    return w


def _chain_gradient(n: int) -> sp.csr_matrix:
    """Incidence matrix of a 1D chain of n nodes: (n-1) edges, -1 tail / +1 head."""
    return sp.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1],
                    shape=(n - 1, n), format="csr")


class Grid:
    """Immutable tensor-product grid with incidence topology and dual metrics.

    Attributes:
        axes: the three strictly increasing tick arrays (m)
        shape: (nx, ny, nz) node counts
        n_nodes, n_edges, n_cells: entity counts
        edge_lengths: primary edge length per edge (m)
        edge_dual_areas: dual facet area crossed by each edge (m^2)
        dual_volumes: dual cell volume per node (m^3)
        boundary_face_areas: (6, n_nodes) exterior dual area per box face
        boundary_areas: total exterior dual area per node (m^2)
        edge_tails, edge_heads: endpoint node index per edge
    """

    def __init__(self, axes):
        axes = tuple(np.asarray(a, dtype=float) for a in axes)
        for name, a in zip(AXIS_NAMES, axes):
            if a.ndim != 1 or a.size < 2:
                raise ConfigurationError(
                    f"grid.{name}: needs at least 2 strictly increasing ticks, got {a.size}")
            if not np.all(np.isfinite(a)):
                raise ConfigurationError(f"grid.{name}: ticks must be finite")
            if not np.all(np.diff(a) > 0):
                raise ConfigurationError(f"grid.{name}: ticks must be strictly increasing")
        self.axes = axes
        nx, ny, nz = (a.size for a in axes)
        self.shape = (nx, ny, nz)
        self.n_nodes = nx * ny * nz
        self.cell_shape = (nx - 1, ny - 1, nz - 1)
        self.n_cells = (nx - 1) * (ny - 1) * (nz - 1)

        self.spacings = tuple(np.diff(a) for a in axes)           # primary interval widths
        self.dual_widths = tuple(_dual_widths(a) for a in axes)   # per-node dual widths

        self._build_edges()
        self._build_dual_metrics()
        self._lazy = {}
        for arr in (*self.axes, self.edge_lengths, self.edge_dual_areas,
                    self.dual_volumes, self.boundary_face_areas,
                    self.boundary_areas, self.edge_tails, self.edge_heads):
            arr.flags.writeable = False

    # -- construction -----------------------------------------------------

    def _build_edges(self):
        nx, ny, nz = self.shape
        dx, dy, dz = self.spacings
        wx, wy, wz = self.dual_widths

        self.edge_block_sizes = ((nx - 1) * ny * nz,
                                 nx * (ny - 1) * nz,
                                 nx * ny * (nz - 1))
        self.n_edges = sum(self.edge_block_sizes)

        tails, heads, lengths, areas = [], [], [], []
        # Per block, index grids are shaped (nz, ny, nx) style so that a
        # C-order ravel runs x fastest, matching the node numbering.
        k, j, i = np.indices((nz, ny, nx - 1))
        tails.append(((k * ny + j) * nx + i).ravel())
        heads.append(tails[-1] + 1)
        lengths.append(np.broadcast_to(dx[None, None, :], (nz, ny, nx - 1)).ravel())
        areas.append((wz[:, None, None] * wy[None, :, None]
                      * np.ones((1, 1, nx - 1))).ravel())

        k, j, i = np.indices((nz, ny - 1, nx))
        tails.append(((k * ny + j) * nx + i).ravel())
        heads.append(tails[-1] + nx)
        lengths.append(np.broadcast_to(dy[None, :, None], (nz, ny - 1, nx)).ravel())
        areas.append((wz[:, None, None] * np.ones((1, ny - 1, 1))
                      * wx[None, None, :]).ravel())

        k, j, i = np.indices((nz - 1, ny, nx))
        tails.append(((k * ny + j) * nx + i).ravel())
        heads.append(tails[-1] + nx * ny)
        lengths.append(np.broadcast_to(dz[:, None, None], (nz - 1, ny, nx)).ravel())
        areas.append((np.ones((nz - 1, 1, 1)) * wy[None, :, None]
                      * wx[None, None, :]).ravel())

        self.edge_tails = np.concatenate(tails)
        self.edge_heads = np.concatenate(heads)
        self.edge_lengths = np.concatenate(lengths)
        self.edge_dual_areas = np.concatenate(areas)

    def _build_dual_metrics(self):
        nx, ny, nz = self.shape
        wx, wy, wz = self.dual_widths
        self.dual_volumes = (wz[:, None, None] * wy[None, :, None]
                             * wx[None, None, :]).ravel()

        faces = np.zeros((6, nz, ny, nx))
        faces[0, :, :, 0] = wz[:, None] * wy[None, :]
        faces[1, :, :, -1] = wz[:, None] * wy[None, :]
        faces[2, :, 0, :] = wz[:, None] * wx[None, :]
        faces[3, :, -1, :] = wz[:, None] * wx[None, :]
        faces[4, 0, :, :] = wy[:, None] * wx[None, :]
        faces[5, -1, :, :] = wy[:, None] * wx[None, :]
        self.boundary_face_areas = faces.reshape(6, -1)
        self.boundary_areas = self.boundary_face_areas.sum(axis=0)

    # -- indexing helpers --------------------------------------------------

    def node_index(self, i: int, j: int, k: int) -> int:
        nx, ny, _ = self.shape
        return i + nx * (j + ny * k)

    def node_coordinates(self, nodes=None) -> np.ndarray:
        """Coordinates of the given node indices (all nodes by default), (n, 3)."""
        nx, ny, nz = self.shape
        if nodes is None:
            nodes = np.arange(self.n_nodes)
        nodes = np.asarray(nodes)
        i = nodes % nx
        j = (nodes // nx) % ny
        k = nodes // (nx * ny)
        return np.column_stack([self.axes[0][i], self.axes[1][j], self.axes[2][k]])

    def nodes_in_box(self, lo, hi, tol: float = 0.0) -> np.ndarray:
        """Indices of nodes inside the axis-aligned box [lo, hi], inflated by tol."""
        lo = np.asarray(lo, dtype=float) - tol
        hi = np.asarray(hi, dtype=float) + tol
        masks = []
        for a, l, h in zip(self.axes, lo, hi):
            masks.append((a >= l) & (a <= h))
        mx, my, mz = masks
        full = mz[:, None, None] & my[None, :, None] & mx[None, None, :]
        return np.flatnonzero(full.ravel())

    @property
    def domain_bounds(self):
        lo = np.array([a[0] for a in self.axes])
        hi = np.array([a[-1] for a in self.axes])
        return lo, hi

    # -- cell topology (lazy, shared by material assembly) ------------------

    def cell_volumes(self) -> np.ndarray:
        if "cell_volumes" not in self._lazy:
            dx, dy, dz = self.spacings
            self._lazy["cell_volumes"] = (dz[:, None, None] * dy[None, :, None]
                                          * dx[None, None, :]).ravel()
        return self._lazy["cell_volumes"]

    def cell_corner_nodes(self) -> np.ndarray:
        """Node indices of the 8 corners of each primary cell, (n_cells, 8)."""
        if "cell_corners" not in self._lazy:
            nx, ny, nz = self.shape
            k, j, i = np.indices((nz - 1, ny - 1, nx - 1))
            base = ((k * ny + j) * nx + i).ravel()
            offs = np.array([0, 1, nx, nx + 1, nx * ny, nx * ny + 1,
                             nx * ny + nx, nx * ny + nx + 1])
            self._lazy["cell_corners"] = base[:, None] + offs[None, :]
        return self._lazy["cell_corners"]

    def cell_edge_ids(self, direction: int) -> np.ndarray:
        """Edge indices of the 4 cell edges parallel to ``direction``, (n_cells, 4)."""
        key = ("cell_edges", direction)
        if key not in self._lazy:
            nx, ny, nz = self.shape
            off_x = self.edge_block_sizes[0]
            off_xy = off_x + self.edge_block_sizes[1]
            k, j, i = np.indices((nz - 1, ny - 1, nx - 1))
            k, j, i = k.ravel(), j.ravel(), i.ravel()
            cols = []
            if direction == 0:
                for dk in (0, 1):
                    for dj in (0, 1):
                        cols.append(i + (nx - 1) * ((j + dj) + ny * (k + dk)))
            elif direction == 1:
                for dk in (0, 1):
                    for di in (0, 1):
                        cols.append(off_x + (i + di) + nx * (j + (ny - 1) * (k + dk)))
            elif direction == 2:
                for dj in (0, 1):
                    for di in (0, 1):
                        cols.append(off_xy + (i + di) + nx * ((j + dj) + ny * k))
            else:
                raise ValueError(f"direction must be 0, 1 or 2, got {direction}")
            self._lazy[key] = np.column_stack(cols)
        return self._lazy[key]

    def edge_quadrants(self):
        """Touching primary cells and dual-facet quadrant areas per edge.

        Returns (cells, areas): two (n_edges, 4) arrays.  areas[e, q] is the
        part of edge e's dual facet lying inside primary cell cells[e, q];
        quadrants outside the grid carry area 0 (cell index clamped to a
        valid slot).  Row sums of areas equal edge_dual_areas.
        """
        if "edge_quadrants" not in self._lazy:
            nx, ny, nz = self.shape
            ncx, ncy, ncz = self.cell_shape

            def half_sides(spacing):
                # dual half-width on the minus/plus side of node index m
                minus = np.concatenate([[0.0], spacing / 2.0])
                plus = np.concatenate([spacing / 2.0, [0.0]])
                return minus, plus

            hx = half_sides(self.spacings[0])
            hy = half_sides(self.spacings[1])
            hz = half_sides(self.spacings[2])

            def cell_id(ci, cj, ck):
                return ci + ncx * (cj + ncy * ck)

            all_cells, all_areas = [], []

            def add_block(make_cell, ta_idx, ta_half, ta_ncells,
                          tb_idx, tb_half, tb_ncells):
                cells_cols, areas_cols = [], []
                for sa in (0, 1):        # minus/plus side, first transverse axis
                    for sb in (0, 1):    # minus/plus side, second transverse axis
                        ca = ta_idx - 1 + sa
                        cb = tb_idx - 1 + sb
                        ok = (ca >= 0) & (ca < ta_ncells) & (cb >= 0) & (cb < tb_ncells)
                        area = ta_half[sa][ta_idx] * tb_half[sb][tb_idx]
                        areas_cols.append(np.where(ok, area, 0.0).ravel())
                        cells_cols.append(make_cell(np.clip(ca, 0, ta_ncells - 1),
                                                    np.clip(cb, 0, tb_ncells - 1)).ravel())
                all_cells.append(np.column_stack(cells_cols))
                all_areas.append(np.column_stack(areas_cols))

            # x-edges: transverse axes y, z
            k, j, i = np.indices((nz, ny, nx - 1))
            add_block(lambda cj, ck: cell_id(i, cj, ck), j, hy, ncy, k, hz, ncz)
            # y-edges: transverse axes x, z
            k, j, i = np.indices((nz, ny - 1, nx))
            add_block(lambda ci, ck: cell_id(ci, j, ck), i, hx, ncx, k, hz, ncz)
            # z-edges: transverse axes x, y
            k, j, i = np.indices((nz - 1, ny, nx))
            add_block(lambda ci, cj: cell_id(ci, cj, k), i, hx, ncx, j, hy, ncy)

            self._lazy["edge_quadrants"] = (np.vstack(all_cells), np.vstack(all_areas))
        return self._lazy["edge_quadrants"]


def build_grid(axes) -> Grid:
    """Build a grid from three strictly increasing coordinate arrays (meters)."""
    return Grid(axes)


def gradient_operator(g: Grid) -> sp.csr_matrix:
    """Discrete gradient G (n_edges x n_nodes): -1 at the tail, +1 at the head."""
    nx, ny, nz = g.shape
    gx = sp.kron(sp.eye(nz * ny), _chain_gradient(nx), format="csr")
    gy = sp.kron(sp.eye(nz), sp.kron(_chain_gradient(ny), sp.eye(nx)), format="csr")
    gz = sp.kron(_chain_gradient(nz), sp.eye(ny * nx), format="csr")
    return sp.vstack([gx, gy, gz], format="csr")


def divergence_operator(g: Grid) -> sp.csr_matrix:
    """Discrete dual divergence, equal to -G^T by grid duality."""
    return (-gradient_operator(g).T).tocsr()


def snap_point(g: Grid, point, tol: float) -> int:
    """Index of the grid node nearest to ``point``.

    Ties are broken toward the lowest node index.  A nonzero snap distance
    within ``tol`` emits a GridSnapWarning; beyond ``tol`` it is an error.
    """
    point = np.asarray(point, dtype=float)
    if point.shape != (3,):
        raise GeometryError(f"point must have 3 coordinates, got {point!r}")
    idx = []
    dist2 = 0.0
    for a, p in zip(g.axes, point):
        d = np.abs(a - p)
        m = int(np.argmin(d))  # argmin takes the first minimum: lowest index
        idx.append(m)
        dist2 += float(d[m]) ** 2
    node = g.node_index(*idx)
    dist = float(np.sqrt(dist2))
    if dist > tol:
        raise GeometryError(
            f"point {point.tolist()} is {dist:.3e} m from the nearest grid node "
            f"{node} at {g.node_coordinates([node])[0].tolist()} (tol {tol:.3e} m)")
    if dist > 0.0:
        warnings.warn(
            f"snapped point {point.tolist()} to node {node} over {dist:.3e} m",
            GridSnapWarning, stacklevel=2)
    return node
