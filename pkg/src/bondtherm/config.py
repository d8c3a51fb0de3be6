"""Scenario schema: parsing, validation and canonical round-trip output.

The configuration is a structured tree (YAML or JSON on disk).  All values
are SI; geometry keys accept an ``_mm`` suffixed variant (and ``_um`` for
wire diameters).  Validation accumulates every problem with its key path
before raising, so a broken file is reported in one pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .bondwire import WireSpec
from .boundary import BoundarySpec, ContactBox
from .errors import ConfigurationError
from .materials import MaterialLaw
from .solver import SolverConfig

REQUIRED_SECTIONS = ("grid", "materials", "regions", "wires", "contacts",
                     "boundary", "time")


@dataclass(frozen=True)
class UqConfig:
    """Elongation distribution settings and Monte Carlo defaults."""

    mu: float = None
    sigma: float = None
    samples_file: str = None
    delta_min: float = 0.0
    delta_max: float = 0.9
    samples: int = 1000
    seed: int = 0
    t_critical: float = 523.0   # K, failure threshold for the crossing scan
    band_sigmas: float = 6.0    # width of the reported uncertainty band


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    vtk_every: int = 0          # write field snapshots every K steps; 0 = off


@dataclass(frozen=True)
class Scenario:
    """Fully validated simulation setup."""

    grid_axes: tuple
    materials: dict
    background: str
    regions: tuple
    wires: tuple
    boundary: BoundarySpec
    solver: SolverConfig
    uq: UqConfig
    output: OutputConfig
    snap_tol: float


class _Validator:
    """Collects (path, message) problems while extracting typed values."""

    def __init__(self):
        self.problems = []

    def fail(self, path, message):
        self.problems.append(f"{path}: {message}")

    def require(self, mapping, key, path, kind=None):
        if not isinstance(mapping, dict) or key not in mapping:
            self.fail(f"{path}.{key}" if path else key, "missing required key")
            return None
        value = mapping[key]
        if kind is not None and not isinstance(value, kind):
            self.fail(f"{path}.{key}", f"expected {kind.__name__}")
            return None
        return value

    def number(self, mapping, key, path, default=None, required=False,
               minimum=None, exclusive_min=None):
        if not isinstance(mapping, dict) or key not in mapping:
            if required:
                self.fail(f"{path}.{key}" if path else key, "missing required key")
            return default
        value = mapping[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(f"{path}.{key}", f"expected a number, got {value!r}")
            return default
        value = float(value)
        if minimum is not None and value < minimum:
            self.fail(f"{path}.{key}", f"must be >= {minimum}")
        if exclusive_min is not None and value <= exclusive_min:
            self.fail(f"{path}.{key}", f"must be > {exclusive_min}")
        return value

    def length(self, mapping, key, path, default=None, required=False):
        """A length given either under ``key`` (m) or ``key_mm`` / ``key_um``."""
        present = [k for k, s in ((key, 1.0), (key + "_mm", 1e-3), (key + "_um", 1e-6))
                   if isinstance(mapping, dict) and k in mapping]
        if len(present) > 1:
            self.fail(f"{path}.{key}", f"give only one of {present}")
            return default
        if not present:
            if required:
                self.fail(f"{path}.{key}", "missing required key (or the _mm variant)")
            return default
        k = present[0]
        scale = {"": 1.0, "_mm": 1e-3, "_um": 1e-6}[k[len(key):]]
        raw = mapping[k]
        if isinstance(raw, (list, tuple)):
            try:
                return tuple(float(v) * scale for v in raw)
            except (TypeError, ValueError):
                self.fail(f"{path}.{k}", "expected numbers")
                return default
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            self.fail(f"{path}.{k}", f"expected a number, got {raw!r}")
            return default
        return float(raw) * scale

    def point(self, mapping, key, path, required=False):
        value = self.length(mapping, key, path, default=None, required=required)
        if value is None:
            return None
        if not isinstance(value, tuple) or len(value) != 3:
            self.fail(f"{path}.{key}", "expected [x, y, z]")
            return None
        return value

    def raise_if_failed(self):
        if self.problems:
            raise ConfigurationError(self.problems)


def _parse_materials(v: _Validator, tree):
    table = {}
    section = v.require(tree, "materials", "", dict)
    if not section:
        return table
    for name, entry in section.items():
        path = f"materials.{name}"
        if not isinstance(entry, dict):
            v.fail(path, "expected a mapping of properties")
            continue
        sigma = v.number(entry, "sigma", path, required=True, exclusive_min=0.0)
        lam = v.number(entry, "lambda", path, required=True, exclusive_min=0.0)
        rhoc = v.number(entry, "rhoc", path, required=True, exclusive_min=0.0)
        alpha_s = v.number(entry, "alpha_sigma", path, default=0.0)
        alpha_l = v.number(entry, "alpha_lambda", path, default=0.0)
        t_ref = v.number(entry, "t_ref", path, default=300.0, exclusive_min=0.0)
        if None in (sigma, lam, rhoc):
            continue
        try:
            table[name] = MaterialLaw(name=name, sigma_ref=sigma, lambda_ref=lam,
                                      rhoc=rhoc, alpha_sigma=alpha_s,
                                      alpha_lambda=alpha_l, t_ref=t_ref)
        except Exception as exc:
            v.fail(path, str(exc))
    return table


def _parse_grid(v: _Validator, tree):
    section = v.require(tree, "grid", "", dict)
    axes = []
    if section is None:
        return None
    for name in ("x", "y", "z"):
        ticks = v.length(section, name, "grid", required=True)
        if ticks is None:
            axes.append(None)
            continue
        if not isinstance(ticks, tuple) or len(ticks) < 2:
            v.fail(f"grid.{name}", "needs at least 2 ticks")
            axes.append(None)
            continue
        arr = np.asarray(ticks, dtype=float)
        if not np.all(np.diff(arr) > 0):
            v.fail(f"grid.{name}", "ticks must be strictly increasing")
        axes.append(arr)
    if any(a is None for a in axes):
        return None
    return tuple(axes)


def _in_domain(v, path, lo, hi, axes, tol):
    dom_lo = np.array([a[0] for a in axes]) - tol
    dom_hi = np.array([a[-1] for a in axes]) + tol
    if np.any(np.asarray(lo) < dom_lo) or np.any(np.asarray(hi) > dom_hi):
        v.fail(path, "box extends outside the grid domain")


def _parse_boxes(v, tree, key, axes, tol, extra):
    """Parse a list of boxes with min/max corners plus ``extra`` scalar keys."""
    out = []
    items = tree if isinstance(tree, list) else []
    if not isinstance(tree, list):
        v.fail(key, "expected a list")
    for n, item in enumerate(items):
        path = f"{key}[{n}]"
        if not isinstance(item, dict):
            v.fail(path, "expected a mapping")
            continue
        lo = v.point(item, "min", path, required=True)
        hi = v.point(item, "max", path, required=True)
        values = {}
        ok = lo is not None and hi is not None
        for extra_key, parse in extra.items():
            values[extra_key] = parse(v, item, path)
            ok = ok and values[extra_key] is not None
        if not ok:
            continue
        if any(h < l for l, h in zip(lo, hi)):
            v.fail(path, "min corner must not exceed max corner")
            continue
        if axes is not None:
            _in_domain(v, path, lo, hi, axes, tol)
        out.append((lo, hi, values))
    return out


def _parse_wires(v: _Validator, tree, materials, axes, tol):
    wires = []
    section = tree.get("wires") if isinstance(tree, dict) else None
    if not isinstance(section, list):
        v.fail("wires", "expected a list")
        return wires
    seen = set()
    for n, item in enumerate(section):
        path = f"wires[{n}]"
        if not isinstance(item, dict):
            v.fail(path, "expected a mapping")
            continue
        wid = item.get("id", f"w{n:02d}")
        if wid in seen:
            v.fail(path, f"duplicate wire id '{wid}'")
        seen.add(wid)
        mat = v.require(item, "material", path, str)
        if mat is not None and materials and mat not in materials:
            v.fail(f"{path}.material", f"unknown material '{mat}'")
        diameter = v.length(item, "diameter", path, required=True)
        pad = v.point(item, "pad", path, required=True)
        chip = v.point(item, "chip", path, required=True)
        dist = v.length(item, "direct_distance", path)
        delta = v.number(item, "delta", path, default=0.0, minimum=0.0)
        if None in (mat, diameter, pad, chip):
            continue
        if axes is not None:
            for pname, p in (("pad", pad), ("chip", chip)):
                _in_domain(v, f"{path}.{pname}", p, p, axes, tol)
        try:
            wires.append(WireSpec(id=str(wid), material=mat, diameter=diameter,
                                  pad_point=pad, chip_point=chip,
                                  direct_distance=dist, delta=delta))
        except Exception as exc:
            v.fail(path, str(exc))
    return wires


def parse_config(tree: dict) -> Scenario:
    """Validate a configuration tree and build a Scenario.

    Raises ConfigurationError carrying every detected problem.
    """
    v = _Validator()
    if not isinstance(tree, dict):
        v.fail("", "configuration must be a mapping")
        v.raise_if_failed()
    for section in REQUIRED_SECTIONS:
        if section not in tree:
            v.fail(section, "missing required section")

    axes = _parse_grid(v, tree) if "grid" in tree else None
    materials = _parse_materials(v, tree) if "materials" in tree else {}
    snap_tol = v.length(tree, "snap_tol", "", default=1e-9)

    background = None
    regions = []
    if isinstance(tree.get("regions"), dict):
        background = v.require(tree["regions"], "background", "regions", str)
        if background is not None and materials and background not in materials:
            v.fail("regions.background", f"unknown material '{background}'")
        boxes = tree["regions"].get("boxes", [])
        parsed = _parse_boxes(v, boxes, "regions.boxes", axes, snap_tol, {
            "material": lambda vv, item, path: vv.require(item, "material", path, str)})
        for lo, hi, values in parsed:
            if materials and values["material"] not in materials:
                v.fail("regions.boxes", f"unknown material '{values['material']}'")
                continue
            from .materials import RegionBox
            regions.append(RegionBox(material=values["material"], lo=lo, hi=hi))
    elif "regions" in tree:
        v.fail("regions", "expected a mapping with 'background' and 'boxes'")

    contacts = []
    if "contacts" in tree:
        parsed = _parse_boxes(v, tree["contacts"], "contacts", axes, snap_tol, {
            "potential": lambda vv, item, path: vv.number(item, "potential", path,
                                                          required=True)})
        contacts = [ContactBox(potential=values["potential"], lo=lo, hi=hi)
                    for lo, hi, values in parsed]

    wires = _parse_wires(v, tree, materials, axes, snap_tol) if "wires" in tree else []

    bspec = None
    if isinstance(tree.get("boundary"), dict):
        b = tree["boundary"]
        h = v.number(b, "h", "boundary", required=True, minimum=0.0)
        emissivity = v.number(b, "emissivity", "boundary", default=0.0, minimum=0.0)
        ambient = v.number(b, "ambient", "boundary", default=300.0, exclusive_min=0.0)
        h_faces = {}
        faces = b.get("h_faces", {})
        if not isinstance(faces, dict):
            v.fail("boundary.h_faces", "expected a mapping face -> h")
            faces = {}
        for face, value in faces.items():
            got = v.number(faces, face, "boundary.h_faces", required=True, minimum=0.0)
            if got is not None:
                h_faces[face] = got
        if h is not None and emissivity is not None and ambient is not None:
            try:
                bspec = BoundarySpec(contacts=tuple(contacts), h=h,
                                     emissivity=emissivity, ambient=ambient,
                                     h_faces=h_faces)
            except ConfigurationError as exc:
                v.problems.extend(exc.problems)
    elif "boundary" in tree:
        v.fail("boundary", "expected a mapping")

    solver = None
    if isinstance(tree.get("time"), dict):
        t = tree["time"]
        dt = v.number(t, "dt", "time", required=True, exclusive_min=0.0)
        steps = v.number(t, "steps", "time", required=True, minimum=0.0)
        s = tree.get("solver", {}) if isinstance(tree.get("solver"), dict) else {}
        tol_t = v.number(s, "picard_tol", "solver", default=1e-6, exclusive_min=0.0)
        max_picard = v.number(s, "picard_max_iter", "solver", default=50.0,
                              exclusive_min=0.0)
        tol_phi = v.number(s, "electric_tol", "solver", default=1e-10,
                           exclusive_min=0.0)
        linear_tol = v.number(s, "linear_tol", "solver", default=1e-10,
                              exclusive_min=0.0)
        if dt is not None and steps is not None:
            if steps != int(steps):
                v.fail("time.steps", "must be an integer")
            else:
                solver = SolverConfig(dt=dt, steps=int(steps), tol_t=tol_t,
                                      tol_phi=tol_phi, max_picard=int(max_picard),
                                      linear_tol=linear_tol)
    elif "time" in tree:
        v.fail("time", "expected a mapping")

    uq = UqConfig()
    if isinstance(tree.get("uq"), dict):
        u = tree["uq"]
        mu = v.number(u, "mu", "uq")
        sigma = v.number(u, "sigma", "uq", minimum=0.0)
        samples_file = u.get("samples_file")
        if samples_file is not None and not isinstance(samples_file, str):
            v.fail("uq.samples_file", "expected a path string")
            samples_file = None
        if samples_file is not None and (mu is not None or sigma is not None):
            v.fail("uq", "give either mu/sigma or samples_file, not both")
        if samples_file is None and (mu is None) != (sigma is None):
            v.fail("uq", "mu and sigma must be given together")
        delta_min = v.number(u, "delta_min", "uq", default=0.0)
        delta_max = v.number(u, "delta_max", "uq", default=0.9)
        if delta_min is not None and delta_max is not None:
            if not delta_min < delta_max:
                v.fail("uq.delta_min", "must be below delta_max")
            if delta_max >= 1.0:
                v.fail("uq.delta_max", "must be below 1")
        samples = v.number(u, "samples", "uq", default=1000.0, minimum=1.0)
        seed = v.number(u, "seed", "uq", default=0.0, minimum=0.0)
        t_critical = v.number(u, "t_critical", "uq", default=523.0, exclusive_min=0.0)
        band = v.number(u, "band_sigmas", "uq", default=6.0, minimum=0.0)
        uq = UqConfig(mu=mu, sigma=sigma, samples_file=samples_file,
                      delta_min=delta_min, delta_max=delta_max,
                      samples=int(samples), seed=int(seed),
                      t_critical=t_critical, band_sigmas=band)
    elif "uq" in tree:
        v.fail("uq", "expected a mapping")

    output = OutputConfig()
    if isinstance(tree.get("output"), dict):
        o = tree["output"]
        directory = o.get("directory", "out")
        vtk_every = v.number(o, "vtk_every", "output", default=0.0, minimum=0.0)
        output = OutputConfig(directory=str(directory), vtk_every=int(vtk_every))
    elif "output" in tree:
        v.fail("output", "expected a mapping")

    v.raise_if_failed()
    return Scenario(grid_axes=axes, materials=materials, background=background,
                    regions=tuple(regions), wires=tuple(wires), boundary=bspec,
                    solver=solver, uq=uq, output=output, snap_tol=snap_tol)


def load_config(path) -> Scenario:
    """Read a YAML/JSON configuration file and parse it."""
    with open(path, "r", encoding="utf-8") as fh:
        tree = yaml.safe_load(fh)
    if tree is None:
        raise ConfigurationError([f"{section}: missing required section"
                                  for section in REQUIRED_SECTIONS])
    return parse_config(tree)


def scenario_to_dict(s: Scenario) -> dict:
    """Canonical SI configuration tree; parse_config(scenario_to_dict(s)) == s."""
    tree = {
        "grid": {name: [float(t) for t in a]
                 for name, a in zip(("x", "y", "z"), s.grid_axes)},
        "materials": {
            m.name: {"sigma": m.sigma_ref, "lambda": m.lambda_ref, "rhoc": m.rhoc,
                     "alpha_sigma": m.alpha_sigma, "alpha_lambda": m.alpha_lambda,
                     "t_ref": m.t_ref}
            for m in s.materials.values()},
        "regions": {
            "background": s.background,
            "boxes": [{"material": r.material, "min": list(r.lo), "max": list(r.hi)}
                      for r in s.regions]},
        "wires": [{"id": w.id, "material": w.material, "diameter": w.diameter,
                   "pad": list(w.pad_point), "chip": list(w.chip_point),
                   "direct_distance": w.direct_distance, "delta": w.delta}
                  for w in s.wires],
        "contacts": [{"potential": c.potential, "min": list(c.lo), "max": list(c.hi)}
                     for c in s.boundary.contacts],
        "boundary": {"h": s.boundary.h, "emissivity": s.boundary.emissivity,
                     "ambient": s.boundary.ambient,
                     **({"h_faces": dict(s.boundary.h_faces)}
                        if s.boundary.h_faces else {})},
        "time": {"dt": s.solver.dt, "steps": s.solver.steps},
        "solver": {"picard_tol": s.solver.tol_t,
                   "picard_max_iter": s.solver.max_picard,
                   "electric_tol": s.solver.tol_phi,
                   "linear_tol": s.solver.linear_tol},
        "uq": {**({"mu": s.uq.mu, "sigma": s.uq.sigma}
                  if s.uq.samples_file is None else {"samples_file": s.uq.samples_file}),
               "delta_min": s.uq.delta_min, "delta_max": s.uq.delta_max,
               "samples": s.uq.samples, "seed": s.uq.seed,
               "t_critical": s.uq.t_critical, "band_sigmas": s.uq.band_sigmas},
        "output": {"directory": s.output.directory, "vtk_every": s.output.vtk_every},
        "snap_tol": s.snap_tol,
    }
    return tree


def dump_config(s: Scenario) -> str:
    """Scenario as YAML text."""
    return yaml.safe_dump(scenario_to_dict(s), sort_keys=False)
