"""Multi-compartment cable model of a skeletal muscle fiber.

Ionic machinery: inward-rectifier K (Kir), leak, fast Na (m^3 h), two
delayed-rectifier K components separated pharmacologically (TEA- and
4AP-sensitive, both n^4), a pipette leak at the recording compartment, and
an exponentially decaying synaptic conductance at the endplate.

Internal unit system is the conventional one for membrane models:
mV, ms, mS/cm^2, uF/cm^2, uA/cm^2. Public entry points take SI and convert
at the boundary. Gating updates use the exact exponential relaxation
m <- m_inf + (m - m_inf) exp(-dt/tau); the voltage step is semi-implicit
with the axial coupling solved as a tridiagonal system, so the stiff
coupling (~10^4 uA/cm^2 per mV here) costs no stability constraint.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import DomainError, EstimationError, IntegrationError, ParamError
from .params import PhysicalParams, SimulationGrid, SolverSettings

CHANNELS = ("kir", "na_m", "na_h", "k_tea", "k_4ap")


@dataclass(frozen=True)
class GatingParams:
    """Channel constants in membrane units (mV, ms, mS/cm^2, uF/cm^2).

    The Na activation curve (na_m_mid/na_m_slope) and the Na inactivation
    slope are model assumptions (the activation curve is not fitted data);
    both are configurable through SolverSettings.
    """

    g_kir: float = 0.6          # mS/cm^2
    kir_mid: float = -91.6      # mV
    kir_slope: float = 0.074    # 1/mV
    kir_tau: float = 0.2        # ms
    e_k: float = -90.0
    g_leak: float = 0.2
    e_leak: float = -90.0
    g_na: float = 28.0
    e_na: float = 50.0
    na_m_mid: float = -40.0
    na_m_slope: float = 0.1
    na_m_tau_base: float = 0.12
    na_m_tau_rate: float = -0.01354
    na_m_tau_ref: float = 55.0
    na_h_mid: float = -50.0
    na_h_slope: float = 0.08
    na_h_tau_base: float = 0.48
    na_h_tau_rate: float = -0.01252
    na_h_tau_ref: float = 22.0
    g_tea: float = 20.0
    tea_mid: float = -30.0
    tea_slope: float = 0.06
    tea_tau_base: float = 1.6
    tea_tau_rate: float = -0.005
    tea_tau_ref: float = 20.0
    g_4ap: float = 200.0
    fap_mid: float = -36.0
    fap_slope: float = 0.08
    fap_tau_base: float = 1.6
    fap_tau_rate: float = -0.0193
    fap_tau_ref: float = -79.0
    g_pipette: float = 0.043
    e_pipette: float = 0.0
    cm: float = 0.58            # uF/cm^2
    rho_axial: float = 2.0      # ohm m (SI; converted where used)

    def __post_init__(self):
        for name in ("g_kir", "g_leak", "g_na", "g_tea", "g_4ap", "g_pipette"):
            if getattr(self, name) < 0:
                raise ParamError(f"{name} must be >= 0")
        if self.cm <= 0 or self.rho_axial <= 0:
            raise ParamError("cm and rho_axial must be > 0")

    @classmethod
    def from_settings(cls, settings: SolverSettings) -> "GatingParams":
        return cls(
            na_m_mid=settings.na_m_midpoint * 1e3,
            na_m_slope=settings.na_m_slope * 1e-3,
            na_h_slope=settings.na_h_slope * 1e-3,
            cm=settings.cm * 1e2,          # F/m^2 -> uF/cm^2
            rho_axial=settings.rho_axial,
        )


@dataclass
class MembraneState:
    """Per-compartment voltage (mV) and gating variables in [0, 1]."""

    v: np.ndarray
    m_kir: np.ndarray
    m_na: np.ndarray
    h_na: np.ndarray
    n_tea: np.ndarray
    n_4ap: np.ndarray

    def validate(self):
        if not np.all(np.isfinite(self.v)):
            raise ParamError("membrane potential must be finite")
        for name in ("m_kir", "m_na", "h_na", "n_tea", "n_4ap"):
            g = getattr(self, name)
            if np.any(g < 0) or np.any(g > 1):
                raise ParamError(f"gating variable {name} outside [0, 1]")

    @classmethod
    def at_steady_state(cls, v, gp: GatingParams) -> "MembraneState":
        v = np.asarray(v, dtype=float)
        return cls(v=v.copy(),
                   m_kir=gating_steady_state("kir", v, gp),
                   m_na=gating_steady_state("na_m", v, gp),
                   h_na=gating_steady_state("na_h", v, gp),
                   n_tea=gating_steady_state("k_tea", v, gp),
                   n_4ap=gating_steady_state("k_4ap", v, gp))


def gating_steady_state(channel: str, v, gp: GatingParams = GatingParams()):
    """Steady-state activation/inactivation curve, V in mV."""
    v = np.asarray(v, dtype=float)
    if channel == "kir":
        out = 1.0 / (1.0 + np.exp(-gp.kir_slope * (gp.kir_mid - v)))
    elif channel == "na_m":
        out = 1.0 / (1.0 + np.exp(-gp.na_m_slope * (v - gp.na_m_mid)))
    elif channel == "na_h":
        out = 1.0 / (1.0 + np.exp(-gp.na_h_slope * (gp.na_h_mid - v)))
    elif channel == "k_tea":
        out = 1.0 / (1.0 + np.exp(gp.tea_slope * (gp.tea_mid - v)))
    elif channel == "k_4ap":
        out = 1.0 / (1.0 + np.exp(gp.fap_slope * (gp.fap_mid - v)))
    else:
        raise DomainError(f"unknown channel {channel!r}; one of {CHANNELS}")
    return out if out.ndim else float(out)


def gating_time_constant(channel: str, v, gp: GatingParams = GatingParams()):
    """Voltage-dependent time constant in ms (Kir is constant)."""
    v = np.asarray(v, dtype=float)
    if channel == "kir":
        out = np.full_like(v, gp.kir_tau)
    elif channel == "na_m":
        out = gp.na_m_tau_base * np.exp(gp.na_m_tau_rate * (v + gp.na_m_tau_ref))
    elif channel == "na_h":
        out = gp.na_h_tau_base * np.exp(gp.na_h_tau_rate * (v + gp.na_h_tau_ref))
    elif channel == "k_tea":
        out = gp.tea_tau_base * np.exp(gp.tea_tau_rate * (v + gp.tea_tau_ref))
    elif channel == "k_4ap":
        out = gp.fap_tau_base * np.exp(gp.fap_tau_rate * (v + gp.fap_tau_ref))
    else:
        raise DomainError(f"unknown channel {channel!r}; one of {CHANNELS}")
    return out if out.ndim else float(out)


def ionic_current_density(state: MembraneState, gp: GatingParams = GatingParams(),
                          pipette_mask=None) -> dict:
    """Per-channel current densities in mA/cm^2 (outward positive).

    The pipette leak applies only where pipette_mask is true (the recording
    compartment); with mask None it is reported everywhere, which matches
    the single-compartment call pattern.
    """
    v = state.v
    out = {
        "na": 1e-3 * gp.g_na * state.m_na ** 3 * state.h_na * (v - gp.e_na),
        "k_tea": 1e-3 * gp.g_tea * state.n_tea ** 4 * (v - gp.e_k),
        "k_4ap": 1e-3 * gp.g_4ap * state.n_4ap ** 4 * (v - gp.e_k),
        "kir": 1e-3 * gp.g_kir * state.m_kir * (v - gp.e_k),
        "leak": 1e-3 * gp.g_leak * (v - gp.e_leak),
    }
    pip = 1e-3 * gp.g_pipette * (v - gp.e_pipette)
    if pipette_mask is not None:
        pip = np.where(pipette_mask, pip, 0.0)
    out["pipette"] = pip
    return out


def synaptic_conductance(t: float, settings: SolverSettings = SolverSettings()):
    """Endplate conductance g_syn(t) in S; t in seconds past stimulus onset."""
    t = np.asarray(t, dtype=float)
    out = np.where(t < 0, 0.0, settings.g_syn_max * np.exp(-np.maximum(t, 0) / settings.tau_syn))
    return out if out.ndim else float(out)


def synaptic_current(t: float, v_mv: float,
                     settings: SolverSettings = SolverSettings()):
    """Synaptic current in A (reversal at 0 mV); t in s past onset, V in mV."""
    return synaptic_conductance(t, settings) * (np.asarray(v_mv, dtype=float) * 1e-3)


def step_gating(state: MembraneState, v, dt_ms: float,
                gp: GatingParams = GatingParams()) -> MembraneState:
    """Exact exponential relaxation of every gate toward its V-dependent target."""
    if dt_ms <= 0:
        raise DomainError("dt must be > 0")
    v = np.asarray(v, dtype=float)
    new = {}
    for attr, channel in (("m_kir", "kir"), ("m_na", "na_m"), ("h_na", "na_h"),
                          ("n_tea", "k_tea"), ("n_4ap", "k_4ap")):
        inf = gating_steady_state(channel, v, gp)
        tau = gating_time_constant(channel, v, gp)
        cur = getattr(state, attr)
        new[attr] = inf + (cur - inf) * np.exp(-dt_ms / tau)
    return MembraneState(v=np.array(v, copy=True), **new)


def axial_resistance(rho_axial: float, length: float, area: float) -> float:
    """Compartment axial resistance R = rho l / A, SI units (ohm)."""
    if rho_axial <= 0 or length <= 0 or area <= 0:
        raise DomainError("axial_resistance needs positive rho, length, area")
    return rho_axial * length / area


def axial_current(v_mv: float, v_next_mv: float, resistance: float):
    """Axial current (A) between adjacent compartments, Ohm's law on mV."""
    if np.any(np.asarray(resistance) <= 0):
        raise DomainError("axial resistance must be > 0")
    return (np.asarray(v_next_mv, dtype=float) - v_mv) * 1e-3 / resistance


@dataclass(frozen=True)
class Stimulus:
    """Synaptic stimulus: absolute conductance (S) at one endplate compartment."""

    g_syn_max: float = 1.0e-5
    tau_syn: float = 0.58e-3
    onset: float = 1.0e-3
    endplate_index: int | None = None   # None -> fiber midpoint

    @classmethod
    def null(cls) -> "Stimulus":
        return cls(g_syn_max=0.0)


@dataclass
class APTrace:
    """Simulated fiber activity: V(t) per compartment plus axial currents.

    t in s, v in mV with shape (n_frames, n_compartments), axial current in
    A with shape (n_frames, n_compartments - 1); meta records grid, sites
    and a parameter hash.
    """

    t: np.ndarray
    v: np.ndarray
    axial: np.ndarray
    meta: dict

    def recording_site(self) -> int:
        return int(self.meta.get("recording_index", self.v.shape[1] // 2))

    def compartment_positions(self) -> np.ndarray:
        return np.arange(self.v.shape[1]) * self.meta["compartment_length"]


def _params_hash(*objs) -> str:
    text = "|".join(repr(o) for o in objs)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


class _FiberModel:
    """Precomputed arrays for one fiber integration."""

    def __init__(self, params: PhysicalParams, grid: SimulationGrid,
                 settings: SolverSettings, gp: GatingParams):
        self.gp = gp
        nc = grid.n_compartments
        self.nc = nc
        area_m2 = 2.0 * np.pi * params.a * grid.compartment_length
        self.area_cm2 = area_m2 * 1e4
        self.r_axial = axial_resistance(gp.rho_axial, grid.compartment_length,
                                        np.pi * params.a ** 2)
        # coupling in uA/cm^2 per mV of neighbor difference
        self.coupling = 1e3 / (self.r_axial * self.area_cm2)
        self.endplate = int(round(settings.endplate_fraction * (nc - 1)))
        self.recording = int(round(settings.recording_fraction * (nc - 1)))
        self.g_pip = np.zeros(nc)
        self.g_pip[self.recording] = gp.g_pipette

    def g_syn_density(self, g_syn_abs_S: float) -> float:
        # absolute S -> mS/cm^2 over one compartment's membrane
        return g_syn_abs_S * 1e3 / self.area_cm2


def _integrate(model: _FiberModel, state: MembraneState, stim: Stimulus,
               dt_s: float, duration_s: float, sample_stride: int,
               collect: bool):
    gp = model.gp
    dt = dt_s * 1e3            # ms
    n_steps = int(round(duration_s / dt_s))
    v = state.v.copy()
    gates = MembraneState(v, state.m_kir.copy(), state.m_na.copy(),
                          state.h_na.copy(), state.n_tea.copy(),
                          state.n_4ap.copy())
    nc = model.nc
    ab = np.zeros((3, nc))
    frames, times = [], []
    onset_ms = stim.onset * 1e3
    tau_syn_ms = stim.tau_syn * 1e3
    gsd = model.g_syn_density(stim.g_syn_max)
    iend = stim.endplate_index if stim.endplate_index is not None else model.endplate
    kir_decay = 1.0 - np.exp(-0.5 * dt / gp.kir_tau)

    def relax_gates(half_dt):
        gates.m_kir += (gating_steady_state("kir", v, gp) - gates.m_kir) * kir_decay
        for attr, channel in (("m_na", "na_m"), ("h_na", "na_h"),
                              ("n_tea", "k_tea"), ("n_4ap", "k_4ap")):
            inf = gating_steady_state(channel, v, gp)
            tau = gating_time_constant(channel, v, gp)
            cur = getattr(gates, attr)
            setattr(gates, attr, inf + (cur - inf) * np.exp(-half_dt / tau))

    for step in range(n_steps):
        t_ms = step * dt
        relax_gates(0.5 * dt)
        g_syn = np.zeros(nc)
        if stim.g_syn_max > 0.0 and t_ms >= onset_ms:
            g_syn[iend] = gsd * np.exp(-(t_ms - onset_ms) / tau_syn_ms)
        g_na = gp.g_na * gates.m_na ** 3 * gates.h_na
        g_k = gp.g_tea * gates.n_tea ** 4 + gp.g_4ap * gates.n_4ap ** 4
        g_kir = gp.g_kir * gates.m_kir
        g_total = g_na + g_k + g_kir + gp.g_leak + model.g_pip + g_syn
        rhs = (gp.cm / dt) * v + (g_kir + gp.g_leak) * gp.e_leak \
            + g_k * gp.e_k + g_na * gp.e_na \
            + model.g_pip * gp.e_pipette  # synapse reverses at 0 mV
        diag = gp.cm / dt + g_total
        diag[1:-1] += 2.0 * model.coupling
        diag[0] += model.coupling
        diag[-1] += model.coupling
        ab[0, 1:] = -model.coupling
        ab[2, :-1] = -model.coupling
        ab[1] = diag
        v = solve_banded((1, 1), ab, rhs)
        if not np.all(np.isfinite(v)) or np.abs(v).max() > 500.0:
            raise IntegrationError(
                f"voltage diverged at step {step} (t = {t_ms:.3f} ms): "
                f"max |V| = {np.abs(v).max():.1f} mV")
        relax_gates(0.5 * dt)
        if collect and step % sample_stride == 0:
            frames.append(v.copy())
            times.append((step + 1) * dt_s)
    gates.v = v
    if collect:
        return gates, np.array(times), np.array(frames)
    return gates, None, None


def relax_to_rest(params: PhysicalParams, grid: SimulationGrid,
                  settings: SolverSettings = SolverSettings(),
                  gp: GatingParams | None = None,
                  v_guess: float = -89.0, dt_s: float = 5e-5) -> MembraneState:
    """Stimulus-free settling to the resting state (coarse time step)."""
    gp = gp or GatingParams.from_settings(settings)
    model = _FiberModel(params, grid, settings, gp)
    state = MembraneState.at_steady_state(np.full(grid.n_compartments, v_guess), gp)
    final, _, _ = _integrate(model, state, Stimulus.null(), dt_s,
                             settings.relax_time, sample_stride=1,
                             collect=False)
    return final


def simulate_fiber(params: PhysicalParams, grid: SimulationGrid,
                   settings: SolverSettings = SolverSettings(),
                   stimulus: Stimulus | None = None,
                   initial: MembraneState | None = None,
                   sample_stride: int = 4) -> APTrace:
    """Integrate the cable equation and return the full voltage trace.

    With a null stimulus the fiber must sit at rest; with the default
    stimulus a propagating action potential starts at the endplate. Raises
    IntegrationError if the voltage leaves +-500 mV.
    """
    gp = GatingParams.from_settings(settings)
    if stimulus is None:
        stimulus = Stimulus(g_syn_max=settings.g_syn_max,
                            tau_syn=settings.tau_syn,
                            onset=settings.stimulus_onset)
    model = _FiberModel(params, grid, settings, gp)
    if initial is None:
        initial = relax_to_rest(params, grid, settings, gp)
    initial.validate()
    final, t, v = _integrate(model, initial, stimulus, grid.dt, grid.duration,
                             sample_stride, collect=True)
    axial = (v[:, 1:] - v[:, :-1]) * 1e-3 / model.r_axial
    meta = {
        "params_hash": _params_hash(params, grid, settings, stimulus),
        "endplate_index": stimulus.endplate_index if stimulus.endplate_index
        is not None else model.endplate,
        "recording_index": model.recording,
        "compartment_length": grid.compartment_length,
        "dt": grid.dt,
        "sample_stride": sample_stride,
        "g_syn_max": stimulus.g_syn_max,
        "onset": stimulus.onset,
        "axial_resistance_ohm": model.r_axial,
    }
    return APTrace(t=t, v=v, axial=axial, meta=meta)


def conduction_velocity(trace: APTrace, fit_fraction: float = 0.5) -> float:
    """Propagation speed (m/s) from a linear fit of peak time vs position.

    Uses the central `fit_fraction` of the fiber; when the endplate index is
    known the position axis is folded around it so both propagation branches
    contribute to one line. Raises EstimationError when no AP propagates.
    """
    v = trace.v
    n_frames, nc = v.shape
    if v.max() < -40.0:
        raise EstimationError("no action potential in trace (peak V < -40 mV)")
    idx = v.argmax(axis=0)
    # parabolic refinement of per-compartment peak times
    t_peak = trace.t[idx].copy()
    dt = trace.t[1] - trace.t[0] if n_frames > 1 else 0.0
    inner = (idx > 0) & (idx < n_frames - 1)
    comp_inner = np.where(inner)[0]
    if dt > 0 and comp_inner.size:
        i = idx[comp_inner]
        y0 = v[i - 1, comp_inner]
        y1 = v[i, comp_inner]
        y2 = v[i + 1, comp_inner]
        denom = y0 - 2 * y1 + y2
        shift = np.where(np.abs(denom) > 1e-12, 0.5 * (y0 - y2) / np.where(
            np.abs(denom) > 1e-12, denom, 1.0), 0.0)
        t_peak[comp_inner] += np.clip(shift, -1, 1) * dt
    lo = int(nc * (0.5 - fit_fraction / 2))
    hi = int(nc * (0.5 + fit_fraction / 2))
    pos = trace.compartment_positions()[lo:hi]
    tp = t_peak[lo:hi]
    if "endplate_index" in trace.meta:
        z_end = trace.meta["endplate_index"] * trace.meta["compartment_length"]
        pos = np.abs(pos - z_end)
    if np.ptp(tp) <= 0:
        raise EstimationError("stationary trace: peak times do not spread")
    design = np.vstack([tp, np.ones_like(tp)]).T
    slope, _ = np.linalg.lstsq(design, pos, rcond=None)[0]
    corr = np.corrcoef(tp, pos)[0, 1]
    if not np.isfinite(slope) or slope <= 0 or abs(corr) < 0.5:
        raise EstimationError(
            f"no coherent propagation (slope {slope:.3g} m/s, r = {corr:.2f})")
    return float(slope)


def export_ap_csv(trace: APTrace, path):
    """Write the voltage trace as CSV: t_s,comp_0_mV,comp_1_mV,..."""
    nc = trace.v.shape[1]
    header = "t_s," + ",".join(f"comp_{i}_mV" for i in range(nc))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for ti, row in zip(trace.t, trace.v):
            fh.write("%.17g," % ti + ",".join("%.17g" % x for x in row) + "\n")
