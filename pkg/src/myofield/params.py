"""Physical constants, geometry, grid and solver settings, config I/O.

Everything is SI internally. The config file is JSON with five sections
(geometry, conductivities, grid, solver, dsp); values are either plain SI
numbers or strings with an explicit unit suffix ("40 um", "0.58 ms"),
converted on load. Unknown keys and unknown units are errors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, ParamError

MU0 = 4e-7 * math.pi


@dataclass(frozen=True)
class PhysicalParams:
    """Geometry and conductivities of the four-region muscle model.

    a, b, c : fiber, bundle, bundle+sheath radii (m); d : fiber-center
    offset from the bundle center (m); delta = c - b sheath thickness (m);
    u : action-potential conduction velocity (m/s); sigma_* : conductivities
    (S/m) for fiber interior (i), sheath (s), bundle axial (z) and radial
    (rho), external saline (e).
    """

    a: float = 4.00e-5
    b: float = 1.50e-4
    c: float = 1.60e-4
    d: float = 8.00e-5
    delta: float | None = None
    u: float = 3.00
    sigma_i: float = 0.88
    sigma_s: float = 2.00
    sigma_z: float = 5.00
    sigma_rho: float = 1.00
    sigma_e: float = 2.00
    mu0: float = MU0
    mu_r: float = 1.0

    def __post_init__(self):
        if self.delta is None:
            object.__setattr__(self, "delta", self.c - self.b)
        if not self.a > 0:
            raise ParamError(f"fiber radius a must be > 0, got {self.a}")
        if self.d < 0:
            raise ParamError(f"fiber offset d must be >= 0, got {self.d}")
        if self.a + self.d > self.b * (1.0 + 1e-12):
            raise ParamError(
                f"fiber must fit inside the bundle: a + d = {self.a + self.d}"
                f" exceeds b = {self.b}")
        if not self.b < self.c:
            raise ParamError(f"bundle radius b = {self.b} must be < c = {self.c}")
        if abs(self.delta - (self.c - self.b)) > 1e-12 * self.c:
            raise ParamError(
                f"sheath thickness delta = {self.delta} inconsistent with "
                f"c - b = {self.c - self.b}")
        for name in ("sigma_i", "sigma_s", "sigma_z", "sigma_rho", "sigma_e"):
            if not getattr(self, name) > 0:
                raise ParamError(f"{name} must be > 0, got {getattr(self, name)}")
        if not self.u > 0:
            raise ParamError(f"conduction velocity u must be > 0, got {self.u}")
        if not self.mu_r > 0:
            raise ParamError(f"mu_r must be > 0, got {self.mu_r}")

    @property
    def anisotropy_ratio(self) -> float:
        return self.sigma_z / self.sigma_rho


@dataclass(frozen=True)
class FieldPoint:
    """Observation point in both the bundle frame and the fiber frame.

    rho/theta are polar coordinates about the bundle axis, rho_primed/
    theta_primed about the (offset) fiber axis; the two must satisfy the
    law-of-cosines relation for the given offset d.
    """

    rho: float
    theta: float
    rho_primed: float
    theta_primed: float
    z: float = 0.0

    def __post_init__(self):
        if self.rho < 0 or self.rho_primed < 0:
            raise ParamError("radii must be non-negative")

    @classmethod
    def from_bundle_frame(cls, rho: float, theta: float, params: PhysicalParams,
                          z: float = 0.0) -> "FieldPoint":
        """Build from bundle-frame coordinates; fiber offset along theta = 0."""
        d = params.d
        x = rho * math.cos(theta) - d
        y = rho * math.sin(theta)
        return cls(rho=rho, theta=theta, rho_primed=math.hypot(x, y),
                   theta_primed=math.atan2(y, x), z=z)

    def check_consistency(self, params: PhysicalParams, rtol: float = 1e-9):
        d = params.d
        lhs = self.rho_primed ** 2
        rhs = self.rho ** 2 + d ** 2 - 2 * self.rho * d * math.cos(self.theta)
        scale = max(lhs, rhs, d ** 2, 1e-300)
        if abs(lhs - rhs) > rtol * scale:
            raise ParamError("primed and unprimed coordinates inconsistent "
                             f"with offset d = {d}")


@dataclass(frozen=True)
class SimulationGrid:
    """Axial Fourier grid and cable discretization."""

    n_z: int = 4096
    length_z: float = 0.04
    n_compartments: int = 1200
    compartment_length: float = 1.0e-5
    dt: float = 5.0e-6
    duration: float = 0.03

    def __post_init__(self):
        if self.n_z < 2 or (self.n_z & (self.n_z - 1)) != 0:
            raise ParamError(f"n_z must be a power of two, got {self.n_z}")
        if not self.length_z > 0:
            raise ParamError("length_z must be > 0")
        if self.length_z / self.n_z > self.compartment_length * (1 + 1e-12):
            raise ParamError(
                f"axial sample spacing {self.length_z / self.n_z:.3e} m must "
                f"not exceed compartment_length {self.compartment_length:.3e} m")
        if self.n_compartments < 2:
            raise ParamError("need at least 2 compartments")
        if not self.compartment_length > 0:
            raise ParamError("compartment_length must be > 0")
        if not self.dt > 0:
            raise ParamError(f"dt must be > 0, got {self.dt}")
        if not self.duration > 0:
            raise ParamError(f"duration must be > 0, got {self.duration}")

    @property
    def dz(self) -> float:
        return self.length_z / self.n_z

    @property
    def fiber_length(self) -> float:
        return self.n_compartments * self.compartment_length


@dataclass(frozen=True)
class SolverSettings:
    """Field-solver and cable-model knobs (SI units).

    The sodium activation curve (na_m_*) and the inactivation slope
    (na_h_slope) are assumptions, not measured values; see README.
    """

    modes: int = 6                      # azimuthal truncation M
    eval_distance: float = 30.0e-6      # observation offset from sheath surface, m
    theta: float = 0.0                  # observation azimuth (informational)
    cm: float = 0.0058                  # membrane capacitance, F/m^2 (0.58 uF/cm^2)
    rho_axial: float = 2.0              # axial resistivity, ohm m
    na_m_midpoint: float = -0.040       # V
    na_m_slope: float = 100.0           # 1/V (0.1 per mV)
    na_h_slope: float = 80.0            # 1/V (0.08 per mV)
    g_syn_max: float = 1.0e-5           # S (10 uS), absolute at the endplate
    tau_syn: float = 0.58e-3            # s
    stimulus_onset: float = 1.0e-3      # s
    endplate_fraction: float = 0.5
    recording_fraction: float = 0.75
    relax_time: float = 0.2             # s, stimulus-free settling
    support_fraction_max: float = 0.8   # windowing precondition
    support_threshold: float = 0.01     # support cut, fraction of peak-to-peak
    condition_warn: float = 1.0e8

    def __post_init__(self):
        if self.modes < 0:
            raise ParamError("modes must be >= 0")
        if not self.eval_distance > 0:
            raise ParamError("eval_distance must be > 0")
        for name in ("cm", "rho_axial", "g_syn_max", "tau_syn", "relax_time"):
            if not getattr(self, name) > 0:
                raise ParamError(f"{name} must be > 0")
        if self.stimulus_onset < 0:
            raise ParamError("stimulus_onset must be >= 0")
        for name in ("endplate_fraction", "recording_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParamError(f"{name} must lie in [0, 1]")
        if not 0 < self.support_fraction_max <= 1:
            raise ParamError("support_fraction_max must lie in (0, 1]")


@dataclass(frozen=True)
class DspSettings:
    """Signal-analysis defaults (SI units)."""

    band_lo: float = 30.0       # Hz
    band_hi: float = 300.0      # Hz
    filter_order: int = 4
    stft_window: int = 256      # samples
    stft_hop: int = 128         # samples
    welch_segment: int = 1024   # samples
    welch_overlap: float = 0.5  # fraction

    def __post_init__(self):
        if not 0 < self.band_lo < self.band_hi:
            raise ParamError("need 0 < band_lo < band_hi")
        if self.filter_order < 1:
            raise ParamError("filter_order must be >= 1")
        if self.stft_window < 8 or self.stft_hop < 1:
            raise ParamError("bad STFT window/hop")
        if self.welch_segment < 16 or not 0 <= self.welch_overlap < 1:
            raise ParamError("bad Welch segment/overlap")


@dataclass(frozen=True)
class Config:
    params: PhysicalParams = field(default_factory=PhysicalParams)
    grid: SimulationGrid = field(default_factory=SimulationGrid)
    solver: SolverSettings = field(default_factory=SolverSettings)
    dsp: DspSettings = field(default_factory=DspSettings)


def default_params() -> PhysicalParams:
    """Canonical calculation parameters (fiber radius 40 um, bundle 150 um,
    sheath to 160 um, 80 um offset, u = 3 m/s)."""
    return PhysicalParams()


_PRESETS = {
    "default": {},
    # alternative convention reading the structure sizes as diameters;
    # d chosen mid-bundle since the default offset cannot fit these radii
    "roth-wikswo-prose": dict(a=2.5e-5, b=7.5e-5, c=8.5e-5, d=4.0e-5),
}


def preset_params(name: str) -> PhysicalParams:
    try:
        return PhysicalParams(**_PRESETS[name])
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {sorted(_PRESETS)}") from None


# ---------------------------------------------------------------------------
# config file handling

_UNIT_FACTORS = {
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6},
    "voltage": {"V": 1.0, "mV": 1e-3, "uV": 1e-6},
    "conductance": {"S": 1.0, "mS": 1e-3, "uS": 1e-6, "µS": 1e-6, "nS": 1e-9},
    "conductivity": {"S/m": 1.0, "mS/cm": 0.1},
    "velocity": {"m/s": 1.0, "mm/s": 1e-3},
    "capacitance_areal": {"F/m2": 1.0, "uF/cm2": 1e-2, "µF/cm2": 1e-2},
    "resistivity": {"ohm m": 1.0, "ohm*m": 1.0, "ohm cm": 1e-2, "ohm*cm": 1e-2},
    "inv_voltage": {"1/V": 1.0, "1/mV": 1e3},
    "frequency": {"Hz": 1.0, "kHz": 1e3},
    "angle": {"rad": 1.0, "deg": math.pi / 180.0},
    "dimensionless": {},
}

# section -> key -> (dimension, attribute name on the target dataclass)
_KEYSPEC = {
    "geometry": {
        "a": "length", "b": "length", "c": "length", "d": "length",
        "delta": "length", "u": "velocity", "mu_r": "dimensionless",
    },
    "conductivities": {
        "sigma_i": "conductivity", "sigma_s": "conductivity",
        "sigma_z": "conductivity", "sigma_rho": "conductivity",
        "sigma_e": "conductivity",
    },
    "grid": {
        "n_z": "int", "length_z": "length", "n_compartments": "int",
        "compartment_length": "length", "dt": "time", "duration": "time",
    },
    "solver": {
        "modes": "int", "eval_distance": "length", "theta": "angle",
        "cm": "capacitance_areal", "rho_axial": "resistivity",
        "na_m_midpoint": "voltage", "na_m_slope": "inv_voltage",
        "na_h_slope": "inv_voltage", "g_syn_max": "conductance",
        "tau_syn": "time", "stimulus_onset": "time",
        "endplate_fraction": "dimensionless",
        "recording_fraction": "dimensionless", "relax_time": "time",
        "support_fraction_max": "dimensionless",
        "support_threshold": "dimensionless", "condition_warn": "dimensionless",
    },
    "dsp": {
        "band_lo": "frequency", "band_hi": "frequency", "filter_order": "int",
        "stft_window": "int", "stft_hop": "int", "welch_segment": "int",
        "welch_overlap": "dimensionless",
    },
}


def parse_quantity(value, dimension: str, where: str = "") -> float:
    """Convert a config value (number, or '40 um' style string) to SI."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        text = value.strip()
        parts = text.split(None, 1)
        if len(parts) == 1:
            # allow "40um" with the unit glued on
            num = ""
            idx = 0
            for idx, ch in enumerate(text):
                if ch.isdigit() or ch in "+-.eE":
                    num += ch
                else:
                    break
            else:
                idx = len(text)
            parts = [num, text[idx:].strip()]
        num_s, unit = parts[0], (parts[1] if len(parts) > 1 else "")
        try:
            magnitude = float(num_s)
        except ValueError:
            raise ConfigError(f"{where}: cannot parse number in {value!r}") from None
        if not unit:
            return magnitude
        factors = _UNIT_FACTORS.get(dimension, {})
        if unit not in factors:
            raise ConfigError(
                f"{where}: unit {unit!r} not valid for {dimension} "
                f"(allowed: {sorted(factors) or 'none'})")
        return magnitude * factors[unit]
    raise ConfigError(f"{where}: unsupported value type {type(value).__name__}")


def _coerce_section(name: str, given: dict) -> dict:
    spec = _KEYSPEC[name]
    out = {}
    for key, value in given.items():
        if key not in spec:
            raise ConfigError(
                f"unknown key {key!r} in section {name!r} "
                f"(allowed: {sorted(spec)})")
        where = f"{name}.{key}"
        dim = spec[key]
        if dim == "int":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{where}: expected an integer, got {value!r}")
            out[key] = int(value)
        else:
            out[key] = parse_quantity(value, dim, where)
    return out


def config_from_dict(raw: dict) -> Config:
    """Build a validated Config from a parsed (JSON) dictionary."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    for section in raw:
        if section not in _KEYSPEC:
            raise ConfigError(
                f"unknown section {section!r} (allowed: {sorted(_KEYSPEC)})")
    geom = _coerce_section("geometry", raw.get("geometry", {}))
    cond = _coerce_section("conductivities", raw.get("conductivities", {}))
    grid = _coerce_section("grid", raw.get("grid", {}))
    solver = _coerce_section("solver", raw.get("solver", {}))
    dsp = _coerce_section("dsp", raw.get("dsp", {}))
    try:
        params = PhysicalParams(**geom, **cond)
        return Config(params=params,
                      grid=SimulationGrid(**grid),
                      solver=SolverSettings(**solver),
                      dsp=DspSettings(**dsp))
    except ParamError:
        raise
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> Config:
    """Load and validate a JSON config file; omitted keys take defaults."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: parse error at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from None
    return config_from_dict(raw)


def config_to_dict(cfg: Config) -> dict:
    p, g, s, d = cfg.params, cfg.grid, cfg.solver, cfg.dsp
    return {
        "geometry": {"a": p.a, "b": p.b, "c": p.c, "d": p.d, "delta": p.delta,
                     "u": p.u, "mu_r": p.mu_r},
        "conductivities": {"sigma_i": p.sigma_i, "sigma_s": p.sigma_s,
                           "sigma_z": p.sigma_z, "sigma_rho": p.sigma_rho,
                           "sigma_e": p.sigma_e},
        "grid": {k: getattr(g, k) for k in _KEYSPEC["grid"]},
        "solver": {k: getattr(s, k) for k in _KEYSPEC["solver"]},
        "dsp": {k: getattr(d, k) for k in _KEYSPEC["dsp"]},
    }


def serialize_config(cfg: Config) -> str:
    """Canonical JSON serialization (SI numbers); round-trips via load."""
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n"


def save_config(cfg: Config, path):
    Path(path).write_text(serialize_config(cfg))
