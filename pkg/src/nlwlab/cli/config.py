"""Scenario files.

A scenario is a YAML mapping. Every section is optional except ``name``;
omitted keys take the defaults in ``DEFAULTS``. Unknown keys are rejected
in strict mode, with the dotted path and the source position.

    name: gaussian-ref
    seed: 0
    data:
      t0: 0.0
      components:
        - {family: gaussian, amplitude: 1.0, width: 1.0}
    grid: {r_max: 40.0, n: 4095}
    solver: {dt: 1.0e-3, t_end: 10.0, output_stride: 10, mu: 1.0}
    split: {j_cut: 0, epsilon_target: 0.1}
    monitors: {R: 1.0, c1: 0.01, c2: 0.01, c3: 0.01, delta: 0.5}
    hyperbolic: {s_max: 4.0, m: 2047, tau_end: 2.0}
    scatter: {r_cone: 5.0}
    output: {checkpoint_every: 1}

``data`` may also be a single component mapping (``family`` at top level).
"""

from __future__ import annotations

import copy
import hashlib
import json
import re
from dataclasses import dataclass

import numpy as np
import yaml

from ..errors import ConfigParseError, ConfigurationError
from ..monitors import MonitorConfig
from ..nlw_solver import SolverConfig, SplitConfig
from ..radial_field import (
    FieldState,
    RadialGrid,
    bump,
    dst_inverse,
    hs_norm,
    RadialField,
)

FAMILIES = ("gaussian", "bump", "band_limited", "rescaled")

COMPONENT_DEFAULTS = {
    "family": "gaussian",
    "amplitude": 1.0,
    "width": 1.0,
    "center": 0.0,
    "center_frequency": 1.0,
    "lam": 1.0,
    "velocity": 0.0,
}

DEFAULTS = {
    "name": None,
    "seed": 0,
    "data": {"t0": 0.0, "components": None},
    "grid": {"r_max": 40.0, "n": 4095},
    "solver": {"dt": 1e-3, "t_end": 10.0, "output_stride": 10, "mu": 1.0, "t_start": None},
    "split": None,
    "monitors": {"R": 1.0, "c1": 0.01, "c2": 0.01, "c3": 0.01, "delta": 0.5},
    "hyperbolic": None,
    "scatter": None,
    "output": {"checkpoint_every": 1},
}

SPLIT_DEFAULTS = {"j_cut": 0, "epsilon_target": None}
HYPERBOLIC_DEFAULTS = {"s_max": 8.0, "m": 2047, "dt_tau": None, "tau_end": 2.0,
                       "output_stride": 1, "compare_tau": 0.5}
SCATTER_DEFAULTS = {"r_cone": 5.0, "tol_factor": 1e-3}

_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


# -- positions --------------------------------------------------------------------------

def _positions(node, prefix="", out=None):
    """Dotted path -> (line, column) for every mapping key and list item."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = f"{prefix}.{k.value}" if prefix else str(k.value)
            out[path] = (k.start_mark.line + 1, k.start_mark.column + 1)
            _positions(v, path, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            path = f"{prefix}.{i}"
            out[path] = (v.start_mark.line + 1, v.start_mark.column + 1)
            _positions(v, path, out)
    return out


def _load(text: str):
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark else None
        col = mark.column + 1 if mark else None
        raise ConfigParseError(f"YAML parse error: {exc.problem or exc}", line, col) from None
    return raw, (_positions(node) if node is not None else {})


# -- scenario ------------------------------------------------------------------------------

@dataclass(frozen=True)
class Component:
    family: str
    amplitude: float
    width: float
    center: float
    center_frequency: float
    lam: float
    velocity: float


@dataclass(frozen=True)
class HyperbolicSpec:
    s_max: float
    m: int
    dt_tau: float | None
    tau_end: float
    output_stride: int
    compare_tau: float


@dataclass(frozen=True)
class ScatterSpec:
    r_cone: float
    tol_factor: float


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    seed: int
    t0: float
    components: tuple
    grid: RadialGrid
    solver: SolverConfig
    mu: float
    t_start: float | None
    split: SplitConfig | None
    monitors: MonitorConfig
    hyperbolic: HyperbolicSpec | None
    scatter: ScatterSpec | None
    checkpoint_every: int
    source: dict  # fully defaulted tree; hashing and sweeps work on this

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.source, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_value(self, path: str, value) -> "Scenario":
        tree = copy.deepcopy(self.source)
        set_path(tree, path, value)
        return from_dict(tree)

    def initial_state(self) -> FieldState:
        return build_data(self)


def _fail(msg, path, pos):
    line, col = pos.get(path, (None, None))
    if line is None:
        raise ConfigurationError(msg, path)
    raise ConfigParseError(msg, line, col, path)


def _merge(section, defaults, path, pos, strict):
    if section is None:
        section = {}
    if not isinstance(section, dict):
        _fail(f"expected a mapping, got {type(section).__name__}", path, pos)
    unknown = [k for k in section if k not in defaults]
    if unknown and strict:
        key = f"{path}.{unknown[0]}" if path else str(unknown[0])
        _fail(f"unknown key {unknown[0]!r}", key, pos)
    out = dict(defaults)
    out.update({k: v for k, v in section.items() if k in defaults})
    return out


def _num(value, path, pos, kind=float, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(f"expected a number, got {value!r}", path, pos)
    if kind is int:
        if int(value) != value:
            _fail(f"expected an integer, got {value!r}", path, pos)
        return int(value)
    return float(value)


def _build(sec, kinds, prefix, pos):
    return {k: _num(sec[k], f"{prefix}.{k}", pos, *kinds[k]) for k in kinds}


def _wrap(fn, path_prefix, pos):
    try:
        return fn()
    except ConfigParseError:
        raise
    except ConfigurationError as exc:
        field = exc.field or path_prefix
        if not field.startswith(path_prefix):
            field = f"{path_prefix}.{field}"
        msg = str(exc).split(": ", 1)[-1]
        _fail(msg, field, pos)


def from_dict(raw: dict, pos: dict | None = None, strict: bool = True) -> Scenario:
    pos = pos or {}
    if not isinstance(raw, dict):
        raise ConfigParseError("top level must be a mapping", 1, 1)
    top = _merge(raw, DEFAULTS, "", pos, strict)
    name = top["name"]
    if not isinstance(name, str) or not _NAME_RE.match(name):
        _fail("name must be a nonempty filesystem-safe string", "name", pos)
    seed = _num(top["seed"], "seed", pos, int)

    data_raw = top["data"] if top["data"] is not None else {}
    if isinstance(data_raw, dict) and "family" in data_raw:
        single = {k: v for k, v in data_raw.items() if k != "t0"}
        data_raw = {"t0": data_raw.get("t0", 0.0), "components": [single]}
    data = _merge(data_raw, DEFAULTS["data"], "data", pos, strict)
    comps_raw = data["components"]
    if comps_raw is None:
        comps_raw = [{}]
    if not isinstance(comps_raw, list) or not comps_raw:
        _fail("components must be a nonempty list", "data.components", pos)
    comps, comps_tree = [], []
    for i, c in enumerate(comps_raw):
        p = f"data.components.{i}"
        c = _merge(c, COMPONENT_DEFAULTS, p, pos, strict)
        if c["family"] not in FAMILIES:
            _fail(f"family must be one of {FAMILIES}, got {c['family']!r}", f"{p}.family", pos)
        vals = {k: _num(c[k], f"{p}.{k}", pos) for k in COMPONENT_DEFAULTS if k != "family"}
        for k in ("width", "center_frequency", "lam"):
            if not vals[k] > 0:
                _fail(f"{k} must be positive", f"{p}.{k}", pos)
        if vals["center"] < 0:
            _fail("center must be >= 0", f"{p}.center", pos)
        comps.append(Component(c["family"], **vals))
        comps_tree.append({"family": c["family"], **vals})
    t0 = _num(data["t0"], "data.t0", pos)

    gsec = _merge(top["grid"], DEFAULTS["grid"], "grid", pos, strict)
    gv = _build(gsec, {"r_max": (float,), "n": (int,)}, "grid", pos)
    grid = _wrap(lambda: RadialGrid(gv["r_max"], gv["n"]), "grid", pos)

    ssec = _merge(top["solver"], DEFAULTS["solver"], "solver", pos, strict)
    sv = _build(ssec, {"dt": (float,), "t_end": (float,), "output_stride": (int,),
                       "mu": (float,), "t_start": (float, True)}, "solver", pos)
    solver = _wrap(lambda: SolverConfig(sv["dt"], sv["t_end"], sv["output_stride"]), "solver", pos)
    _wrap(lambda: solver.check_grid(grid), "solver", pos)
    if sv["t_end"] < t0:
        _fail(f"t_end={sv['t_end']} precedes data.t0={t0}", "solver.t_end", pos)
    if sv["t_start"] is not None and sv["t_start"] > t0:
        _fail("t_start must not exceed data.t0", "solver.t_start", pos)

    split = None
    sp_tree = None
    if top["split"] is not None:
        sp = _merge(top["split"], SPLIT_DEFAULTS, "split", pos, strict)
        spv = _build(sp, {"j_cut": (int,), "epsilon_target": (float, True)}, "split", pos)
        split = _wrap(lambda: SplitConfig(**spv), "split", pos)
        sp_tree = spv

    msec = _merge(top["monitors"], DEFAULTS["monitors"], "monitors", pos, strict)
    mv = _build(msec, {k: (float,) for k in DEFAULTS["monitors"]}, "monitors", pos)
    monitors = _wrap(lambda: MonitorConfig(**mv), "monitors", pos)

    hyp = None
    hyp_tree = None
    if top["hyperbolic"] is not None:
        h = _merge(top["hyperbolic"], HYPERBOLIC_DEFAULTS, "hyperbolic", pos, strict)
        hv = _build(h, {"s_max": (float,), "m": (int,), "dt_tau": (float, True),
                        "tau_end": (float,), "output_stride": (int,), "compare_tau": (float,)},
                    "hyperbolic", pos)
        if not hv["s_max"] > 0:
            _fail("s_max must be positive", "hyperbolic.s_max", pos)
        _wrap(lambda: RadialGrid(hv["s_max"], hv["m"]), "hyperbolic", pos)
        if hv["output_stride"] < 1:
            _fail("output_stride must be >= 1", "hyperbolic.output_stride", pos)
        if not 0 <= hv["compare_tau"] <= hv["tau_end"]:
            _fail("compare_tau must lie in [0, tau_end]", "hyperbolic.compare_tau", pos)
        ds = hv["s_max"] / (hv["m"] + 1)
        if hv["dt_tau"] is not None and not 0 < hv["dt_tau"] <= 0.5 * ds:
            _fail(f"dt_tau must lie in (0, 0.5*ds={0.5 * ds:.6g}]", "hyperbolic.dt_tau", pos)
        hyp = HyperbolicSpec(**hv)
        hyp_tree = hv

    scat = None
    sc_tree = None
    if top["scatter"] is not None:
        s = _merge(top["scatter"], SCATTER_DEFAULTS, "scatter", pos, strict)
        scv = _build(s, {"r_cone": (float,), "tol_factor": (float,)}, "scatter", pos)
        if scv["r_cone"] < 0:
            _fail("r_cone must be >= 0", "scatter.r_cone", pos)
        scat = ScatterSpec(**scv)
        sc_tree = scv

    osec = _merge(top["output"], DEFAULTS["output"], "output", pos, strict)
    every = _num(osec["checkpoint_every"], "output.checkpoint_every", pos, int)
    if every < 1:
        _fail("checkpoint_every must be >= 1", "output.checkpoint_every", pos)

    source = {
        "name": name, "seed": seed,
        "data": {"t0": t0, "components": comps_tree},
        "grid": gv, "solver": sv, "split": sp_tree, "monitors": mv,
        "hyperbolic": hyp_tree, "scatter": sc_tree,
        "output": {"checkpoint_every": every},
    }
    return Scenario(name, seed, t0, tuple(comps), grid, solver, sv["mu"], sv["t_start"], split,
                    monitors, hyp, scat, every, source)


def parse_config(text: str, strict: bool = True) -> Scenario:
    """Parse and validate scenario text."""
    raw, pos = _load(text)
    if raw is None:
        raise ConfigParseError("empty configuration", 1, 1)
    return from_dict(raw, pos, strict)


def load_config(path, strict: bool = True) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), strict)


# -- dotted paths -----------------------------------------------------------------------------

def _step(node, key, path):
    if isinstance(node, list):
        if not key.isdigit() or int(key) >= len(node):
            raise ConfigurationError(f"cannot resolve {key!r} in a list of {len(node)}", path)
        return int(key)
    if not isinstance(node, dict) or key not in node:
        raise ConfigurationError("unknown schema path", path)
    return key


def get_path(tree: dict, path: str):
    node = tree
    for key in path.split("."):
        node = node[_step(node, key, path)]
    return node


def set_path(tree: dict, path: str, value):
    keys = path.split(".")
    node = tree
    for key in keys[:-1]:
        k = _step(node, key, path)
        if node[k] is None:
            raise ConfigurationError("section is disabled in the base scenario", path)
        node = node[k]
    node[_step(node, keys[-1], path)] = value


# -- initial data -------------------------------------------------------------------------------

def _profile(c: Component, rng):
    """(u0, u1) callables for one component; band_limited returns arrays."""
    if c.family == "gaussian":
        f = lambda r: np.exp(-((r - c.center) / c.width) ** 2)
    elif c.family == "bump":
        f = lambda r: bump((r - c.center) / c.width)
    elif c.family == "rescaled":
        f = lambda r: c.lam * np.exp(-((c.lam * (r - c.center)) / c.width) ** 2)
    else:
        return None
    return (lambda r: c.amplitude * f(r)), (lambda r: c.velocity * f(r))


def _band_limited(c: Component, grid: RadialGrid, rng):
    """Random sine coefficients in the band xi ~ center_frequency, scaled so
    ||u0||_{H^1/2} = amplitude (and ||u1||_{H^-1/2} = velocity)."""
    m = bump(grid.xi / (2 * c.center_frequency)) - bump(grid.xi / c.center_frequency)
    out = []
    for target, order in ((c.amplitude, 0.5), (c.velocity, -0.5)):
        coeff = rng.standard_normal(grid.n) * m
        phi = dst_inverse(coeff)
        norm = hs_norm(RadialField(grid, phi), order)
        out.append(phi * (target / norm) if norm > 0 else np.zeros(grid.n))
    return out


def build_data(sc: Scenario) -> FieldState:
    g = sc.grid
    rng = np.random.default_rng(sc.seed)
    phi = np.zeros(g.n)
    phit = np.zeros(g.n)
    for c in sc.components:
        prof = _profile(c, rng)
        if prof is None:
            a, b = _band_limited(c, g, rng)
        else:
            a, b = g.r * prof[0](g.r), g.r * prof[1](g.r)
        phi += a
        phit += b
    return FieldState.from_arrays(g, phi, phit, sc.t0)
