"""Material laws, staircase region assignment and material matrix assembly.

Each primary cell holds one homogeneous material.  Edge conductances average
the parameters of the up-to-four cells around each edge weighted by the
dual-facet quadrant areas; dual-cell heat capacities average over the
up-to-eight primary-cell octants inside each dual cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import GeometryError, MaterialRangeError
from .grid import AXIS_NAMES, Grid

VALID_RANGE_K = (200.0, 1500.0)


@dataclass(frozen=True)
class MaterialLaw:
    """Temperature-dependent conductivities with reciprocal (resistivity-linear) laws.

    sigma(T) = sigma_ref / (1 + alpha_sigma * (T - t_ref)), same form for
    lambda.  With zero coefficients both reduce to the reference constants.
    The volumetric heat capacity rhoc is temperature independent.
    """

    name: str
    sigma_ref: float          # electrical conductivity at t_ref (S/m)
    lambda_ref: float         # thermal conductivity at t_ref (W/K/m)
    rhoc: float               # volumetric heat capacity (J/K/m^3)
    alpha_sigma: float = 0.0  # 1/K
    alpha_lambda: float = 0.0  # 1/K
    t_ref: float = 300.0      # K

    def __post_init__(self):
        if self.sigma_ref <= 0 or self.lambda_ref <= 0 or self.rhoc <= 0:
            raise MaterialRangeError(
                f"material '{self.name}': sigma_ref, lambda_ref and rhoc must be positive")
        for alpha, label in ((self.alpha_sigma, "alpha_sigma"),
                             (self.alpha_lambda, "alpha_lambda")):
            for t in VALID_RANGE_K:
                if 1.0 + alpha * (t - self.t_ref) <= 0.0:
                    raise MaterialRangeError(
                        f"material '{self.name}': {label}={alpha} makes the law "
                        f"non-positive at {t} K")

    def _reciprocal(self, ref, alpha, temperature):
        denom = 1.0 + alpha * (np.asarray(temperature, dtype=float) - self.t_ref)
        if np.any(denom <= 0.0):
            raise MaterialRangeError(
                f"material '{self.name}': temperature outside valid range")
        return ref / denom

    def sigma_at(self, temperature):
        """Electrical conductivity (S/m) at the given temperature(s)."""
        return self._reciprocal(self.sigma_ref, self.alpha_sigma, temperature)

    def lambda_at(self, temperature):
        """Thermal conductivity (W/K/m) at the given temperature(s)."""
        return self._reciprocal(self.lambda_ref, self.alpha_lambda, temperature)


@dataclass(frozen=True)
class RegionBox:
    """Axis-aligned box assigning a material; later boxes override earlier ones."""

    material: str
    lo: tuple
    hi: tuple


class MaterialField:
    """Per-primary-cell material assignment with vectorized parameter lookup."""

    def __init__(self, grid: Grid, cell_law_index: np.ndarray, laws):
        self.grid = grid
        self.cell_law_index = cell_law_index
        self.laws = tuple(laws)
        self._sigma_ref = np.array([m.sigma_ref for m in self.laws])[cell_law_index]
        self._lambda_ref = np.array([m.lambda_ref for m in self.laws])[cell_law_index]
        self._rhoc = np.array([m.rhoc for m in self.laws])[cell_law_index]
        self._alpha_sigma = np.array([m.alpha_sigma for m in self.laws])[cell_law_index]
        self._alpha_lambda = np.array([m.alpha_lambda for m in self.laws])[cell_law_index]
        self._t_ref = np.array([m.t_ref for m in self.laws])[cell_law_index]

    @property
    def temperature_dependent(self) -> bool:
        return bool(np.any(self._alpha_sigma != 0.0) or np.any(self._alpha_lambda != 0.0))

    def cell_rhoc(self) -> np.ndarray:
        return self._rhoc

    def _cell_property(self, ref, alpha, cells, temperature):
        """Evaluate ref/(1+alpha dT) for the given cells at per-entry temperatures."""
        denom = 1.0 + alpha[cells] * (temperature - self._t_ref[cells])
        return ref[cells], denom

    def cell_sigma(self, cells, temperature, guard=None):
        ref, denom = self._cell_property(self._sigma_ref, self._alpha_sigma,
                                         cells, temperature)
        _check_denominator(denom, guard)
        return ref / denom

    def cell_lambda(self, cells, temperature, guard=None):
        ref, denom = self._cell_property(self._lambda_ref, self._alpha_lambda,
                                         cells, temperature)
        _check_denominator(denom, guard)
        return ref / denom


def _check_denominator(denom, guard):
    bad = denom <= 0.0
    if guard is not None:
        bad = bad & guard
    if np.any(bad):
        raise MaterialRangeError("temperature outside the valid range of a material law")


def _snap_plane(ticks: np.ndarray, value: float, tol: float, what: str) -> int:
    idx = int(np.argmin(np.abs(ticks - value)))
    if abs(ticks[idx] - value) > tol:
        raise GeometryError(
            f"{what}: coordinate {value:.6e} m is {abs(ticks[idx] - value):.3e} m from "
            f"the nearest grid plane (tol {tol:.3e} m)")
    return idx


def assign_regions(grid: Grid, laws: dict, regions, background: str,
                   tol: float = 1e-9) -> MaterialField:
    """Staircase material assignment: boxes snap to grid planes, later boxes win.

    ``laws`` maps material names to MaterialLaw; ``regions`` is an iterable of
    RegionBox.  Cells not covered by any box get the background material.
    """
    if background not in laws:
        raise GeometryError(f"background material '{background}' is not in the table")
    names = list(laws)
    index_of = {n: i for i, n in enumerate(names)}
    ncx, ncy, ncz = grid.cell_shape
    cells = np.full((ncz, ncy, ncx), index_of[background], dtype=np.int32)
    for r, box in enumerate(regions):
        if box.material not in index_of:
            raise GeometryError(f"regions[{r}]: unknown material '{box.material}'")
        sl = []
        for ax, name in enumerate(AXIS_NAMES):
            lo = _snap_plane(grid.axes[ax], box.lo[ax], tol, f"regions[{r}].{name} lo")
            hi = _snap_plane(grid.axes[ax], box.hi[ax], tol, f"regions[{r}].{name} hi")
            if hi <= lo:
                raise GeometryError(
                    f"regions[{r}]: box collapses to zero cells along {name} after snapping")
            sl.append(slice(lo, hi))
        cells[sl[2], sl[1], sl[0]] = index_of[box.material]
    return MaterialField(grid, cells.ravel(), [laws[n] for n in names])


def _edge_conductance_diagonal(grid: Grid, field: MaterialField,
                               temperature: np.ndarray, thermal: bool) -> np.ndarray:
    t_edge = 0.5 * (temperature[grid.edge_tails] + temperature[grid.edge_heads])
    cells, areas = grid.edge_quadrants()
    guard = areas > 0.0
    if thermal:
        par = field.cell_lambda(cells, t_edge[:, None], guard)
    else:
        par = field.cell_sigma(cells, t_edge[:, None], guard)
    # sum_q area_q * par_q == averaged parameter times the full dual area
    return (areas * par).sum(axis=1) / grid.edge_lengths


def assemble_m_sigma(grid: Grid, field: MaterialField,
                     temperature: np.ndarray) -> sp.csr_matrix:
    """Diagonal electrical conductance matrix, entry sigma_avg * A_dual / len."""
    return sp.diags(_edge_conductance_diagonal(grid, field, temperature, False),
                    format="csr")


def assemble_m_lambda(grid: Grid, field: MaterialField,
                      temperature: np.ndarray) -> sp.csr_matrix:
    """Diagonal thermal conductance matrix, entry lambda_avg * A_dual / len."""
    return sp.diags(_edge_conductance_diagonal(grid, field, temperature, True),
                    format="csr")


def assemble_m_rhoc(grid: Grid, field: MaterialField) -> sp.csr_matrix:
    """Diagonal heat capacitance matrix: octant-volume average times dual volume.

    Each primary cell contributes one eighth of its volume times its rhoc to
    each of its 8 corner nodes; temperature independent, assembled once.
    """
    corners = grid.cell_corner_nodes()
    contrib = grid.cell_volumes() * field.cell_rhoc() / 8.0
    diag = np.bincount(corners.ravel(),
                       weights=np.repeat(contrib, 8),
                       minlength=grid.n_nodes)
    return sp.diags(diag, format="csr")


def joule_cell_density(grid: Grid, field: MaterialField, phi: np.ndarray,
                       temperature: np.ndarray) -> np.ndarray:
    """Joule power density sigma(T_cell) |E|^2 per primary cell (W/m^3).

    The cell field component in each direction is the mean of the four
    parallel edge voltages divided by the edge length; the cell temperature
    is the mean of the 8 corner values.
    """
    corners = grid.cell_corner_nodes()
    t_cell = temperature[corners].mean(axis=1)
    volt = phi[grid.edge_tails] - phi[grid.edge_heads]
    e2 = np.zeros(grid.n_cells)
    for d in range(3):
        edges = grid.cell_edge_ids(d)
        lengths = grid.edge_lengths[edges[:, 0]]
        e2 += (volt[edges].mean(axis=1) / lengths) ** 2
    sigma = field.cell_sigma(np.arange(grid.n_cells), t_cell)
    return sigma * e2


def joule_node_power(grid: Grid, field: MaterialField, phi: np.ndarray,
                     temperature: np.ndarray) -> np.ndarray:
    """Nodal Joule power vector (W): octant-volume weighting of cell powers."""
    q_cell = joule_cell_density(grid, field, phi, temperature)
    corners = grid.cell_corner_nodes()
    contrib = grid.cell_volumes() * q_cell / 8.0
    return np.bincount(corners.ravel(), weights=np.repeat(contrib, 8),
                       minlength=grid.n_nodes)
