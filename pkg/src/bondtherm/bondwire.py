"""Lumped electrothermal bonding wires.

A wire is a two-terminal conductance between a pad node and a chip node.
Its incidence vector carries +1/-1 at the endpoints, its averaging vector
two 1/2 entries; stamping adds the familiar [[G,-G],[-G,G]] pattern into a
system matrix.  Geometry enters only through the cross-section area and the
elongated length L = d / (1 - delta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .errors import GeometryError
from .grid import Grid, snap_point
from .materials import MaterialLaw


@dataclass(frozen=True)
class WireSpec:
    """Geometry and material of one bonding wire.

    ``direct_distance`` is the straight pad-to-chip distance d; the relative
    elongation delta = (L - d) / L gives the true length L = d / (1 - delta).
    """

    id: str
    material: str
    diameter: float                 # m
    pad_point: tuple = None         # (x, y, z) m
    chip_point: tuple = None
    pad_node: int = None            # direct node indices, alternative to points
    chip_node: int = None
    direct_distance: float = None   # m; defaults to |pad - chip|
    delta: float = 0.0

    def __post_init__(self):
        if self.diameter <= 0:
            raise GeometryError(f"wire '{self.id}': diameter must be positive")
        if not 0.0 <= self.delta < 1.0:
            raise GeometryError(f"wire '{self.id}': delta must be in [0, 1), got {self.delta}")
        have_points = self.pad_point is not None and self.chip_point is not None
        have_nodes = self.pad_node is not None and self.chip_node is not None
        if not have_points and not have_nodes:
            raise GeometryError(f"wire '{self.id}': endpoint coordinates or node indices required")
        if self.direct_distance is None:
            if not have_points:
                raise GeometryError(
                    f"wire '{self.id}': direct_distance required with node-index endpoints")
            d = float(np.linalg.norm(np.asarray(self.pad_point, dtype=float)
                                     - np.asarray(self.chip_point, dtype=float)))
            object.__setattr__(self, "direct_distance", d)
        if self.direct_distance <= 0:
            raise GeometryError(f"wire '{self.id}': direct distance must be positive "
                                "(distinct endpoints)")

    @property
    def length(self) -> float:
        """Elongated wire length L = d / (1 - delta)."""
        return self.direct_distance / (1.0 - self.delta)

    @property
    def area(self) -> float:
        """Cross-section area pi d^2 / 4."""
        return math.pi * self.diameter ** 2 / 4.0

    def with_delta(self, delta: float) -> "WireSpec":
        return replace(self, delta=float(delta))


@dataclass(frozen=True)
class WireStamp:
    """Grid incidence of one wire: +1 at the pad node, -1 at the chip node."""

    pad_node: int
    chip_node: int
    area: float

    def __post_init__(self):
        if self.pad_node == self.chip_node:
            raise GeometryError(
                f"wire endpoints snap to the same grid node {self.pad_node}")

    def incidence_vector(self, n_nodes: int) -> np.ndarray:
        p = np.zeros(n_nodes)
        p[self.pad_node] = 1.0
        p[self.chip_node] = -1.0
        return p

    def averaging_vector(self, n_nodes: int) -> np.ndarray:
        x = np.zeros(n_nodes)
        x[self.pad_node] = 0.5
        x[self.chip_node] = 0.5
        return x


def wire_conductances(wire: WireSpec, law: MaterialLaw, t_wire: float):
    """Electrical and thermal conductance of a uniform cylinder: G = par * A / L."""
    if wire.delta >= 1.0:
        raise GeometryError(f"wire '{wire.id}': delta >= 1 gives non-positive length")
    scale = wire.area / wire.length
    return (float(law.sigma_at(t_wire)) * scale,
            float(law.lambda_at(t_wire)) * scale)


def build_wire_stamp(grid: Grid, wire: WireSpec, tol: float) -> WireStamp:
    """Snap the wire endpoints to grid nodes and build the stamp."""
    if wire.pad_node is not None and wire.chip_node is not None:
        pad, chip = int(wire.pad_node), int(wire.chip_node)
    else:
        pad = snap_point(grid, wire.pad_point, tol)
        chip = snap_point(grid, wire.chip_point, tol)
    return WireStamp(pad_node=pad, chip_node=chip, area=wire.area)


def stamp_conductance(matrix, stamp: WireStamp, g_value: float) -> None:
    """Add P G P^T, i.e. [[G,-G],[-G,G]] at the endpoint rows/columns, in place.

    ``matrix`` must support element updates (scipy lil/dok or a dense array).
    """
    if g_value < 0:
        raise ValueError(f"conductance must be nonnegative, got {g_value}")
    p, c = stamp.pad_node, stamp.chip_node
    matrix[p, p] += g_value
    matrix[c, c] += g_value
    matrix[p, c] -= g_value
    matrix[c, p] -= g_value


def conductance_matrix(stamps, g_values, n_nodes: int) -> sp.csr_matrix:
    """Sum of all wire stamps as one sparse N x N matrix."""
    rows, cols, vals = [], [], []
    for stamp, g in zip(stamps, g_values):
        p, c = stamp.pad_node, stamp.chip_node
        rows += [p, c, p, c]
        cols += [p, c, c, p]
        vals += [g, g, -g, -g]
    return sp.coo_matrix((vals, (rows, cols)), shape=(n_nodes, n_nodes)).tocsr()


def wire_temperature(stamp: WireStamp, temperature: np.ndarray) -> float:
    """Endpoint-mean wire temperature (linear profile across the lumped element)."""
    return 0.5 * float(temperature[stamp.pad_node] + temperature[stamp.chip_node])


def wire_joule(stamp: WireStamp, g_el: float, phi: np.ndarray) -> float:
    """Joule power G_el (dPhi)^2 dissipated in the wire (W, nonnegative)."""
    dphi = float(phi[stamp.pad_node] - phi[stamp.chip_node])
    return g_el * dphi * dphi


def distribute_wire_heat(stamps, powers, n_nodes: int) -> np.ndarray:
    """Deposit half of each wire's Joule power at each endpoint node."""
    out = np.zeros(n_nodes)
    for stamp, q in zip(stamps, powers):
        out[stamp.pad_node] += 0.5 * q
        out[stamp.chip_node] += 0.5 * q
    return out
