"""Coupled stationary-current / transient-heat solver.

Each time step runs a successive-substitution (Picard) loop: solve the
electric system with conductivities frozen at the previous temperature
iterate, then take one implicit-Euler heat step with the matching Joule,
wire and boundary terms, until the temperature increment drops below
tolerance.  Both linear systems are symmetric positive definite and are
solved by sparse LU with an explicit residual check.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import bondwire, materials
from .boundary import BoundarySpec, boundary_outflow, convection_terms, \
    dirichlet_partition, radiation_terms
from .errors import SolverError
from .grid import Grid, build_grid, gradient_operator
from .materials import MaterialField, assemble_m_lambda, assemble_m_rhoc, \
    assemble_m_sigma, assign_regions, joule_node_power


@dataclass(frozen=True)
class SolverConfig:
    """Time discretization and iteration tolerances."""

    dt: float = 1.0               # s
    steps: int = 50
    tol_t: float = 1e-6           # Picard increment tolerance (K)
    tol_phi: float = 1e-10        # electric solve relative residual
    max_picard: int = 50
    linear_tol: float = 1e-10     # thermal solve relative residual

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")
        if min(self.tol_t, self.tol_phi, self.linear_tol) <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class SimState:
    """Solution at one time level."""

    t: float
    phi: np.ndarray                # V, n_nodes
    temperature: np.ndarray        # K, n_nodes
    wire_temperatures: np.ndarray  # K, per wire
    wire_powers: np.ndarray        # W, per wire


@dataclass(frozen=True)
class Model:
    """Assembled scenario: grid, materials, wires, boundary and operators.

    Immutable and shared read-only across Monte Carlo workers; per-sample
    variants only swap the wire specs (elongations).
    """

    grid: Grid
    field: MaterialField
    wires: tuple
    stamps: tuple
    wire_laws: tuple
    bspec: BoundarySpec
    gradient: sp.csr_matrix
    rhoc_diag: np.ndarray
    fixed: np.ndarray
    fixed_values: np.ndarray
    free: np.ndarray
    conv_matrix: sp.csr_matrix
    conv_rhs: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.grid.n_nodes

    def with_wire_deltas(self, deltas) -> "Model":
        wires = tuple(w.with_delta(d) for w, d in zip(self.wires, deltas))
        return replace(self, wires=wires)

    def wire_temperatures(self, temperature: np.ndarray) -> np.ndarray:
        return np.array([bondwire.wire_temperature(s, temperature)
                         for s in self.stamps])

    def wire_conductances(self, temperature: np.ndarray):
        """(g_el, g_th) per wire, evaluated at the endpoint-mean temperatures."""
        g_el, g_th = [], []
        for wire, stamp, law in zip(self.wires, self.stamps, self.wire_laws):
            t_bw = bondwire.wire_temperature(stamp, temperature)
            ge, gt = bondwire.wire_conductances(wire, law, t_bw)
            g_el.append(ge)
            g_th.append(gt)
        return np.array(g_el), np.array(g_th)


def build_model(scenario) -> Model:
    """Assemble the temperature-independent parts of a scenario."""
    grid = build_grid(scenario.grid_axes)
    field = assign_regions(grid, scenario.materials, scenario.regions,
                           scenario.background, scenario.snap_tol)
    stamps = tuple(bondwire.build_wire_stamp(grid, w, scenario.snap_tol)
                   for w in scenario.wires)
    wire_laws = tuple(scenario.materials[w.material] for w in scenario.wires)
    fixed, fixed_values, free = dirichlet_partition(grid, scenario.boundary,
                                                    scenario.snap_tol)
    conv_matrix, conv_rhs = convection_terms(grid, scenario.boundary)
    rhoc_diag = assemble_m_rhoc(grid, field).diagonal()
    return Model(grid=grid, field=field, wires=tuple(scenario.wires),
                 stamps=stamps, wire_laws=wire_laws, bspec=scenario.boundary,
                 gradient=gradient_operator(grid), rhoc_diag=rhoc_diag,
                 fixed=fixed, fixed_values=fixed_values, free=free,
                 conv_matrix=conv_matrix, conv_rhs=conv_rhs)


def solve_spd(matrix: sp.spmatrix, rhs: np.ndarray, tol: float, what: str) -> np.ndarray:
    """Direct sparse solve with an explicit relative-residual guarantee."""
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return np.zeros_like(rhs)
    try:
        lu = spla.splu(matrix.tocsc())
        x = lu.solve(rhs)
    except (RuntimeError, ValueError) as exc:
        raise SolverError(f"{what}: factorization failed ({exc})") from exc
    residual = float(np.linalg.norm(matrix @ x - rhs)) / rhs_norm
    if not np.isfinite(residual) or residual > tol:
        raise SolverError(
            f"{what}: relative residual {residual:.3e} exceeds tolerance {tol:.1e}")
    return x


def _reduce_dirichlet(matrix: sp.csr_matrix, rhs: np.ndarray, model: Model):
    free, fixed = model.free, model.fixed
    reduced = matrix[free][:, free]
    reduced_rhs = rhs[free] - matrix[free][:, fixed] @ model.fixed_values
    return reduced.tocsc(), reduced_rhs


def solve_electric(model: Model, t_prev: np.ndarray,
                   tol: float = 1e-10) -> np.ndarray:
    """Solve the stationary current problem at the given temperature iterate."""
    g = model.gradient
    m_sigma = assemble_m_sigma(model.grid, model.field, t_prev)
    k = (g.T @ (m_sigma @ g)).tocsr()
    g_el, _ = model.wire_conductances(t_prev)
    if model.stamps:
        k = k + bondwire.conductance_matrix(model.stamps, g_el, model.n_nodes)
    phi = np.zeros(model.n_nodes)
    phi[model.fixed] = model.fixed_values
    if model.free.size:
        reduced, rhs = _reduce_dirichlet(k, np.zeros(model.n_nodes), model)
        phi[model.free] = solve_spd(reduced, rhs, tol, "electric solve")
    return phi


def thermal_step(model: Model, t_n: np.ndarray, phi: np.ndarray,
                 t_prev: np.ndarray, dt: float, tol: float = 1e-10,
                 extra_source: np.ndarray = None) -> np.ndarray:
    """One implicit-Euler heat step with coefficients frozen at t_prev.

    extra_source is an optional nodal power vector (W) on top of the Joule,
    wire and boundary terms; used for manufactured-solution verification.
    """
    g = model.gradient
    m_lambda = assemble_m_lambda(model.grid, model.field, t_prev)
    k = (g.T @ (m_lambda @ g)).tocsr()
    g_el, g_th = model.wire_conductances(t_prev)
    if model.stamps:
        k = k + bondwire.conductance_matrix(model.stamps, g_th, model.n_nodes)
    rad_matrix, rad_rhs = radiation_terms(model.grid, model.bspec, t_prev)
    system = (sp.diags(model.rhoc_diag / dt) + k
              + model.conv_matrix + rad_matrix).tocsc()

    q_el = joule_node_power(model.grid, model.field, phi, t_prev)
    powers = [bondwire.wire_joule(s, ge, phi)
              for s, ge in zip(model.stamps, g_el)]
    q_bw = bondwire.distribute_wire_heat(model.stamps, powers, model.n_nodes)
    rhs = model.rhoc_diag * t_n / dt + q_el + q_bw + model.conv_rhs + rad_rhs
    if extra_source is not None:
        rhs = rhs + extra_source
    return solve_spd(system, rhs, tol, "thermal solve")


def step(state: SimState, config: SolverConfig, model: Model,
         extra_source: np.ndarray = None) -> SimState:
    """Advance one time step, iterating the two-way coupling to a fixed point."""
    t_n = state.temperature
    t_prev = t_n
    phi = state.phi
    linearization = t_n
    increment = np.inf
    for _ in range(config.max_picard):
        phi = solve_electric(model, t_prev, config.tol_phi)
        t_new = thermal_step(model, t_n, phi, t_prev, config.dt,
                             config.linear_tol, extra_source)
        increment = float(np.max(np.abs(t_new - t_prev)))
        linearization = t_prev
        t_prev = t_new
        if increment < config.tol_t:
            break
    else:
        raise SolverError(
            f"Picard iteration did not converge in {config.max_picard} iterations; "
            f"last increment {increment:.3e} K")
    g_el, _ = model.wire_conductances(linearization)
    powers = np.array([bondwire.wire_joule(s, ge, phi)
                       for s, ge in zip(model.stamps, g_el)])
    return SimState(t=state.t + config.dt, phi=phi, temperature=t_prev,
                    wire_temperatures=model.wire_temperatures(t_prev),
                    wire_powers=powers)


@dataclass(frozen=True)
class TransientResult:
    """Recorded wire temperatures over a transient run."""

    times: np.ndarray                  # s, n_steps + 1
    wire_temperatures: np.ndarray      # K, (n_steps + 1, n_wires)
    step_max_delta: np.ndarray         # K, max nodal change per step
    final_state: SimState
    energy: dict                       # balance diagnostics at the final step


def initial_state(model: Model) -> SimState:
    """Ambient temperature everywhere, zero potential except at PEC nodes."""
    temperature = np.full(model.n_nodes, model.bspec.ambient)
    phi = np.zeros(model.n_nodes)
    phi[model.fixed] = model.fixed_values
    return SimState(t=0.0, phi=phi, temperature=temperature,
                    wire_temperatures=model.wire_temperatures(temperature),
                    wire_powers=np.zeros(len(model.stamps)))


def energy_balance(model: Model, previous: SimState, current: SimState,
                   dt: float) -> dict:
    """Power bookkeeping at a converged step.

    The column-sum identity of the discrete system makes
    joule_total = outflow + storage up to solver tolerances; near
    stationarity the storage term vanishes and the Joule input matches the
    boundary outflow directly.
    """
    q_field = float(joule_node_power(model.grid, model.field, current.phi,
                                     current.temperature).sum())
    q_wires = float(current.wire_powers.sum())
    outflow = boundary_outflow(model.grid, model.bspec, current.temperature)
    storage = float((model.rhoc_diag
                     * (current.temperature - previous.temperature)).sum() / dt)
    total_in = q_field + q_wires
    return {
        "joule_field_W": q_field,
        "joule_wires_W": q_wires,
        "boundary_outflow_W": outflow,
        "storage_W": storage,
        "imbalance_rel": abs(total_in - outflow) / total_in if total_in else 0.0,
        "residual_rel": (abs(total_in - outflow - storage) / total_in
                         if total_in else 0.0),
    }


def run_transient(scenario=None, *, model: Model = None,
                  config: SolverConfig = None, snapshot_callback=None) -> TransientResult:
    """Run all configured steps from the cold initial condition.

    snapshot_callback(step_index, state), when given, is invoked for the
    initial state and after every step.
    """
    if model is None:
        model = build_model(scenario)
    if config is None:
        config = scenario.solver
    state = initial_state(model)
    times = [0.0]
    wire_temps = [state.wire_temperatures]
    deltas = []
    previous = state
    if snapshot_callback is not None:
        snapshot_callback(0, state)
    for n in range(1, config.steps + 1):
        try:
            new_state = step(state, config, model)
        except SolverError as exc:
            raise SolverError(f"step {n} (t={state.t + config.dt:g} s): {exc}") from exc
        deltas.append(float(np.max(np.abs(new_state.temperature - state.temperature))))
        previous, state = state, new_state
        times.append(state.t)
        wire_temps.append(state.wire_temperatures)
        if snapshot_callback is not None:
            snapshot_callback(n, state)
    energy = (energy_balance(model, previous, state, config.dt)
              if config.steps > 0 else None)
    return TransientResult(times=np.array(times),
                           wire_temperatures=np.array(wire_temps),
                           step_max_delta=np.array(deltas),
                           final_state=state, energy=energy)
