"""Electric Dirichlet contacts and thermal Robin boundary terms.

PEC contact boxes pin nodal potentials; the electric system is reduced by
eliminating those rows and columns.  Convection enters as a Robin term
h * A_bnd on the exterior dual areas; radiation is Picard-linearized with
h_rad = eps * sigma_SB * (T_k^2 + T_inf^2)(T_k + T_inf), which reproduces the
exact quartic flux once the iteration has converged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, GeometryError, SolverError
from .grid import FACE_NAMES, Grid

STEFAN_BOLTZMANN = 5.670374419e-8  # W/m^2/K^4


@dataclass(frozen=True)
class ContactBox:
    """PEC region held at a fixed potential."""

    potential: float  # V
    lo: tuple
    hi: tuple


@dataclass(frozen=True)
class BoundarySpec:
    """Thermal boundary data plus the list of electric contacts."""

    contacts: tuple = ()
    h: float = 0.0                 # W/m^2/K, all faces unless overridden
    emissivity: float = 0.0
    ambient: float = 300.0         # K
    h_faces: dict = field(default_factory=dict)  # optional per-face h override
    sigma_sb: float = STEFAN_BOLTZMANN

    def __post_init__(self):
        if self.h < 0:
            raise ConfigurationError("boundary.h: must be nonnegative")
        if not 0.0 <= self.emissivity <= 1.0:
            raise ConfigurationError("boundary.emissivity: must be in [0, 1]")
        if self.ambient <= 0:
            raise ConfigurationError("boundary.ambient: must be positive (kelvin)")
        for name, value in self.h_faces.items():
            if name not in FACE_NAMES:
                raise ConfigurationError(f"boundary.h_faces.{name}: unknown face")
            if value < 0:
                raise ConfigurationError(f"boundary.h_faces.{name}: must be nonnegative")

    def face_h(self) -> np.ndarray:
        return np.array([self.h_faces.get(name, self.h) for name in FACE_NAMES])


def dirichlet_partition(grid: Grid, spec: BoundarySpec, tol: float = 1e-9):
    """Split nodes into PEC-fixed and free sets.

    Returns (fixed_nodes, fixed_values, free_nodes).  A node claimed by two
    contacts at different potentials is a configuration error; without any
    contact the stationary current problem is singular.
    """
    if not spec.contacts:
        raise ConfigurationError(
            "contacts: at least one PEC contact is required; the electric "
            "problem is singular without Dirichlet data")
    values = {}
    for c, contact in enumerate(spec.contacts):
        nodes = grid.nodes_in_box(contact.lo, contact.hi, tol)
        if nodes.size == 0:
            raise GeometryError(f"contacts[{c}]: box contains no grid node")
        for n in nodes:
            n = int(n)
            if n in values and values[n] != contact.potential:
                raise ConfigurationError(
                    f"contacts[{c}]: node {n} already fixed at {values[n]} V, "
                    f"conflicting with {contact.potential} V")
            values[n] = contact.potential
    fixed = np.array(sorted(values), dtype=np.int64)
    fixed_values = np.array([values[n] for n in fixed])
    mask = np.ones(grid.n_nodes, dtype=bool)
    mask[fixed] = False
    return fixed, fixed_values, np.flatnonzero(mask)


def convection_terms(grid: Grid, spec: BoundarySpec):
    """Robin convection: diagonal matrix h*A_bnd and rhs h*A_bnd*T_inf."""
    coeff = spec.face_h() @ grid.boundary_face_areas
    return sp.diags(coeff, format="csr"), coeff * spec.ambient


def radiation_coefficient(spec: BoundarySpec, t_prev: np.ndarray) -> np.ndarray:
    """Linearized radiative transfer coefficient at the previous iterate (W/m^2/K)."""
    t_inf = spec.ambient
    return (spec.emissivity * spec.sigma_sb
            * (t_prev ** 2 + t_inf ** 2) * (t_prev + t_inf))


def radiation_terms(grid: Grid, spec: BoundarySpec, t_prev: np.ndarray):
    """Picard-linearized radiation: diagonal h_rad*A_bnd and rhs h_rad*A_bnd*T_inf.

    h_rad(T_k) (T - T_inf) equals eps*sigma_SB*(T^4 - T_inf^4) when T = T_k,
    so the converged flux obeys the exact quartic law.
    """
    if np.any(t_prev[grid.boundary_areas > 0] <= 0.0):
        raise SolverError("radiation linearization needs positive boundary temperatures")
    coeff = radiation_coefficient(spec, t_prev) * grid.boundary_areas
    return sp.diags(coeff, format="csr"), coeff * spec.ambient


def boundary_outflow(grid: Grid, spec: BoundarySpec, temperature: np.ndarray) -> float:
    """Total convective plus exact (quartic) radiative heat leaving the box (W)."""
    conv = spec.face_h() @ grid.boundary_face_areas * (temperature - spec.ambient)
    rad = (spec.emissivity * spec.sigma_sb * grid.boundary_areas
           * (temperature ** 4 - spec.ambient ** 4))
    return float(conv.sum() + rad.sum())
