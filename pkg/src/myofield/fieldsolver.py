"""Four-region cylindrical boundary-value solver for the azimuthal field.

The transmembrane potential drives a potential problem in spatial-frequency
space: fiber interior (sigma_i), anisotropic bundle (sigma_rho/sigma_z,
handled by the radial rescaling rho* = sqrt(sigma_z/sigma_rho) rho), thin
sheath (sigma_s), and external saline (sigma_e). Cylindrical harmonics are
matched at the three interfaces; the off-center fiber couples the
fiber-centered and bundle-centered harmonic families through modified-Bessel
addition theorems, truncated at azimuthal mode M.

The reported field is the theta-averaged azimuthal component, which by
Ampere's law is mu0/(2 pi rho) times the axial current enclosed by the
observation circle, so only the m = 0 coefficients appear in the field
formulas; higher modes participate in the boundary solve only.

Internally every unknown is scaled by its basis function evaluated at its
home boundary, which keeps all matrix entries within a bounded exponential
envelope (exp(kappa (t + a - b)) <= 1) over the entire k grid.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, replace

import numpy as np

from .bessel import ive_orders, kve_orders
from .cable import APTrace
from .errors import DomainError, ParamError, SolverError, WindowingError
from .params import PhysicalParams, SimulationGrid, SolverSettings

logger = logging.getLogger(__name__)

_HERMITIAN_TOL = 1e-10


def anisotropy_transform(rho, sigma_z: float, sigma_rho: float):
    """Radial coordinate rescaling rho* = sqrt(sigma_z/sigma_rho) * rho."""
    if sigma_z <= 0 or sigma_rho <= 0:
        raise DomainError("conductivities must be > 0")
    return np.sqrt(sigma_z / sigma_rho) * np.asarray(rho, dtype=float) \
        if np.ndim(rho) else float(np.sqrt(sigma_z / sigma_rho) * rho)


# ---------------------------------------------------------------------------
# spectra

@dataclass
class PotentialSpectrum:
    """Transmembrane potential in spatial-frequency space.

    values[j] approximates the continuous transform integral of phi_m(z)
    exp(+i k z) dz at k[j] (V m); the k grid is the signed FFT grid.
    """

    k: np.ndarray
    values: np.ndarray
    n_z: int
    dz: float
    meta: dict

    @property
    def length_z(self) -> float:
        return self.n_z * self.dz

    def check_hermitian(self, tol: float = _HERMITIAN_TOL):
        v = self.values
        scale = np.abs(v).max() or 1.0
        err = np.abs(v - np.conj(v[_mirror_index(self.n_z)])).max() / scale
        if err > tol:
            raise DomainError(
                f"spectrum violates Hermitian symmetry (residual {err:.2e})")


def _mirror_index(n: int) -> np.ndarray:
    return (-np.arange(n)) % n


def wavenumber_grid(grid: SimulationGrid) -> np.ndarray:
    return 2.0 * np.pi * np.fft.fftfreq(grid.n_z, grid.dz)


def forward_transform(samples: np.ndarray, dz: float):
    """Continuous-convention forward transform, exp(+ikz) kernel."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    spectrum = n * dz * np.fft.ifft(samples)
    k = 2.0 * np.pi * np.fft.fftfreq(n, dz)
    return k, spectrum


def inverse_transform(spectrum: np.ndarray, dz: float) -> np.ndarray:
    """Inverse of forward_transform; returns the complex sample array."""
    n = spectrum.size
    return np.fft.fft(spectrum) / (n * dz)


def membrane_potential_spectrum(source, params: PhysicalParams,
                                grid: SimulationGrid,
                                settings: SolverSettings = SolverSettings(),
                                site: int | None = None) -> PotentialSpectrum:
    """Spectrum of the transmembrane potential profile along the fiber.

    source may be an axial profile already sampled on the grid (volts,
    length n_z) or an APTrace, in which case the recorded time course at
    `site` (default: the recording compartment) is mapped to space by the
    traveling-wave substitution z = u t, cropped to its support and checked
    against the axial window (support > support_fraction_max of length_z
    raises WindowingError).
    """
    if isinstance(source, APTrace):
        profile, meta = _traveling_wave_profile(source, params, grid, settings, site)
    else:
        profile = np.asarray(source, dtype=float)
        if profile.shape != (grid.n_z,):
            raise ParamError(
                f"profile length {profile.shape} does not match n_z = {grid.n_z}")
        meta = {"source": "profile"}
    k, values = forward_transform(profile, grid.dz)
    meta.update(n_z=grid.n_z, dz=grid.dz)
    return PotentialSpectrum(k=k, values=values, n_z=grid.n_z, dz=grid.dz,
                             meta=meta)


def _traveling_wave_profile(trace: APTrace, params, grid, settings, site):
    site = trace.recording_site() if site is None else int(site)
    v_mv = trace.v[:, site]
    t = trace.t
    baseline = v_mv[0]
    dev = np.abs(v_mv - baseline)
    p2p = v_mv.max() - v_mv.min()
    if p2p <= 0:
        profile = np.full(grid.n_z, 0.0)
        return profile, {"source": "trace", "site": site, "baseline_mV": baseline}
    keep = dev > settings.support_threshold * p2p
    if not keep.any():
        return np.zeros(grid.n_z), {"source": "trace", "site": site,
                                    "baseline_mV": baseline}
    i0, i1 = np.where(keep)[0][[0, -1]]
    i0 = max(i0 - 1, 0)
    i1 = min(i1 + 1, t.size - 1)
    support_m = params.u * (t[i1] - t[i0])
    if support_m > settings.support_fraction_max * grid.length_z:
        raise WindowingError(
            f"waveform support {support_m * 1e3:.1f} mm exceeds "
            f"{settings.support_fraction_max:.0%} of the axial window "
            f"{grid.length_z * 1e3:.1f} mm; enlarge length_z or shorten the AP")
    # z = u t, wave frozen at the instant the support midpoint passes L/2
    t_mid = 0.5 * (t[i0] + t[i1])
    z_grid = np.arange(grid.n_z) * grid.dz
    t_of_z = t_mid + (0.5 * grid.length_z - z_grid) / params.u
    profile_mv = np.interp(t_of_z, t[i0:i1 + 1], v_mv[i0:i1 + 1],
                           left=baseline, right=baseline)
    profile = (profile_mv - baseline) * 1e-3
    return profile, {"source": "trace", "site": site, "baseline_mV": baseline,
                     "support_m": support_m, "mapping": "z = u*t"}


def gaussian_template_profile(grid: SimulationGrid, amplitude: float = 0.1,
                              width: float = 1.5e-3) -> np.ndarray:
    """Synthetic depolarization profile (volts): Gaussian of given 1-sigma width."""
    z = np.arange(grid.n_z) * grid.dz
    return amplitude * np.exp(-0.5 * ((z - 0.5 * grid.length_z) / width) ** 2)


# ---------------------------------------------------------------------------
# boundary system

def _scaled_bessel_tables(params: PhysicalParams, m_cutoff: int, k_abs):
    """All scaled Bessel data used by assembly and field evaluation."""
    k_abs = np.atleast_1d(np.asarray(k_abs, dtype=float))
    if np.any(k_abs <= 0):
        raise DomainError("boundary system requires k != 0")
    M = m_cutoff
    gam = np.sqrt(params.sigma_z / params.sigma_rho)
    beta = k_abs
    kap = gam * beta
    t = params.d
    tab = {
        "beta": beta, "kap": kap, "gam": gam, "M": M,
        "si_ba": ive_orders(M + 1, beta * params.a),
        "si_kb": ive_orders(M + 1, kap * params.b),
        "si_ka": ive_orders(M + 1, kap * params.a),
        "sk_ka": kve_orders(M + 1, kap * params.a),
        "sk_kb": kve_orders(M + 1, kap * params.b),
        "si_bb": ive_orders(M + 1, beta * params.b),
        "si_bc": ive_orders(M + 1, beta * params.c),
        "sk_bb": kve_orders(M + 1, beta * params.b),
        "sk_bc": kve_orders(M + 1, beta * params.c),
        # exponent envelopes (all <= 1 by the geometry invariant a + t <= b)
        "q_ab": np.exp(kap * (t + params.a - params.b)),
        "q_bc": np.exp(-beta * (params.c - params.b)),
    }
    ivet = ive_orders(max(2 * M, 1), kap * t)
    nn, mm = np.meshgrid(np.arange(M + 1), np.arange(M + 1), indexing="ij")
    w = ivet[np.abs(mm - nn)] + ivet[mm + nn]
    w[:, 0, ...] = ivet[np.arange(M + 1)]
    tab["w_t"] = w           # (n, m, nk): scaled by exp(-kap t)
    tab["ivet"] = ivet
    if t > 0:
        tab["kvet"] = kve_orders(max(M, 1), kap * t)
    return tab


def _dsi(si, m):
    return si[1] if m == 0 else 0.5 * (si[m - 1] + si[m + 1])


def _dsk(sk, m):
    return -sk[1] if m == 0 else -0.5 * (sk[m - 1] + sk[m + 1])


def _assemble(params: PhysicalParams, m_cutoff: int, tab) -> tuple:
    """Stacked boundary systems over the k grid, scaled unknowns.

    Unknown layout per k: [A~_m, B~_m, C~_m, D~_m, E~_m, F~_m], m = 0..M,
    where each family is scaled by its basis function at its home boundary
    (A by I_m(beta a), B by I_m(kappa b), C by K_m(kappa a), D by
    I_m(beta c), E by K_m(beta b), F by K_m(beta c)).
    """
    M = m_cutoff
    n1 = M + 1
    nk = tab["beta"].size
    si_ba, si_kb, si_ka = tab["si_ba"], tab["si_kb"], tab["si_ka"]
    sk_ka, sk_kb = tab["sk_ka"], tab["sk_kb"]
    si_bb, si_bc = tab["si_bb"], tab["si_bc"]
    sk_bb, sk_bc = tab["sk_bb"], tab["sk_bc"]
    w, q_ab, q_bc = tab["w_t"], tab["q_ab"], tab["q_bc"]
    gam = tab["gam"]
    s_i, s_rho, s_s, s_e = (params.sigma_i, params.sigma_rho,
                            params.sigma_s, params.sigma_e)
    A, B, C, D, E, F = (j * n1 for j in range(6))
    mat = np.zeros((nk, 6 * n1, 6 * n1))
    rhs = np.zeros((nk, 6 * n1))
    rhs[:, 0] = 1.0   # unit phi_m(k); coefficients scale linearly
    for m in range(n1):
        dsi_ka_m = _dsi(si_ka, m)
        dsi_ba_m = _dsi(si_ba, m)
        dsk_ka_m = _dsk(sk_ka, m)
        dsi_kb_m = _dsi(si_kb, m)
        dsk_kb_m = _dsk(sk_kb, m)
        dsi_bb_m = _dsi(si_bb, m)
        dsk_bb_m = _dsk(sk_bb, m)
        dsi_bc_m = _dsi(si_bc, m)
        dsk_bc_m = _dsk(sk_bc, m)
        # potential jump at the fiber surface (fiber frame, mode m)
        r = 0 * n1 + m
        mat[:, r, A + m] = 1.0
        for n in range(n1):
            mat[:, r, B + n] = -w[n, m] * si_ka[m] / si_kb[n] * q_ab
        mat[:, r, C + m] = -1.0
        # radial current continuity at the fiber surface (row / beta)
        r = 1 * n1 + m
        mat[:, r, A + m] = s_i * dsi_ba_m / si_ba[m]
        for n in range(n1):
            mat[:, r, B + n] = -s_rho * gam * w[n, m] * dsi_ka_m / si_kb[n] * q_ab
        mat[:, r, C + m] = -s_rho * gam * dsk_ka_m / sk_ka[m]
        # potential continuity at rho = b (bundle frame, mode m)
        r = 2 * n1 + m
        mat[:, r, B + m] = 1.0
        for n in range(n1):
            mat[:, r, C + n] = w[n, m] * sk_kb[m] / sk_ka[n] * q_ab
        mat[:, r, D + m] = -si_bb[m] / si_bc[m] * q_bc
        mat[:, r, E + m] = -1.0
        # radial current continuity at rho = b (row / beta)
        r = 3 * n1 + m
        mat[:, r, B + m] = s_rho * gam * dsi_kb_m / si_kb[m]
        for n in range(n1):
            mat[:, r, C + n] = s_rho * gam * w[n, m] * dsk_kb_m / sk_ka[n] * q_ab
        mat[:, r, D + m] = -s_s * dsi_bb_m / si_bc[m] * q_bc
        mat[:, r, E + m] = -s_s * dsk_bb_m / sk_bb[m]
        # potential continuity at rho = c
        r = 4 * n1 + m
        mat[:, r, D + m] = 1.0
        mat[:, r, E + m] = sk_bc[m] / sk_bb[m] * q_bc
        mat[:, r, F + m] = -1.0
        # radial current continuity at rho = c (row / beta)
        r = 5 * n1 + m
        mat[:, r, D + m] = s_s * dsi_bc_m / si_bc[m]
        mat[:, r, E + m] = s_s * dsk_bc_m / sk_bb[m] * q_bc
        mat[:, r, F + m] = -s_e * dsk_bc_m / sk_bc[m]
    return mat, rhs


def assemble_boundary_system(k: float, params: PhysicalParams,
                             m_cutoff: int = 6):
    """Boundary-condition system for one spatial frequency (k != 0).

    Returns (matrix, rhs) over the scaled unknowns for a unit transmembrane
    spectrum; the six condition blocks (potential jump, three continuity
    pairs) each contribute m_cutoff + 1 rows.
    """
    if k == 0:
        raise DomainError("k = 0 carries no azimuthal field; handled separately")
    if m_cutoff < 0:
        raise DomainError("m_cutoff must be >= 0")
    tab = _scaled_bessel_tables(params, m_cutoff, abs(k))
    mat, rhs = _assemble(params, m_cutoff, tab)
    return mat[0], rhs[0]


def _solve_unit(params: PhysicalParams, m_cutoff: int, k_abs,
                settings: SolverSettings | None = None):
    """Solve the scaled systems for a unit spectrum at each |k| bin."""
    tab = _scaled_bessel_tables(params, m_cutoff, k_abs)
    mat, rhs = _assemble(params, m_cutoff, tab)
    row_scale = np.abs(mat).max(axis=2)
    bad = ~np.isfinite(row_scale) | (row_scale == 0)
    if bad.any():
        j, r = np.argwhere(bad)[0]
        raise SolverError(
            f"non-finite or empty boundary row {r} at k = {tab['beta'][j]:.4g}")
    mat_eq = mat / row_scale[:, :, None]
    rhs_eq = rhs / row_scale
    try:
        x = np.linalg.solve(mat_eq, rhs_eq[..., None])[..., 0]
    except np.linalg.LinAlgError:
        conds = [np.linalg.cond(m) for m in mat_eq[:: max(1, len(mat_eq) // 8)]]
        raise SolverError(
            "singular boundary system; sampled condition numbers "
            f"{np.array(conds):.3g}") from None
    if settings is not None and settings.condition_warn:
        sample = mat_eq[:: max(1, mat_eq.shape[0] // 16)]
        conds = np.linalg.cond(sample)
        worst = float(np.max(conds))
        if worst > settings.condition_warn:
            logger.warning("boundary system condition number %.3g exceeds %.3g",
                           worst, settings.condition_warn)
    return x, tab, (mat_eq, rhs_eq)


def substitute_back_residual(mat, rhs, x) -> float:
    """Componentwise backward error max_i |Ax-b|_i / (|A||x| + |b|)_i."""
    mat = np.asarray(mat)
    num = np.abs(mat @ x[..., None] - rhs[..., None])[..., 0]
    den = (np.abs(mat) @ np.abs(x)[..., None])[..., 0] + np.abs(rhs) + 1e-300
    return float((num / den).max())


# ---------------------------------------------------------------------------
# coefficients and fields

_FAMILIES = ("a", "b", "c", "d", "e", "f")


@dataclass
class BoundaryCoefficients:
    """Per-k, per-mode expansion coefficients of the four region potentials.

    Stored in the solver's scaled basis (numerically safe over the whole k
    grid); coefficient() unscales to the textbook convention in which the
    region potentials read sum_m eps_m X_m Bessel_m cos(m theta).
    """

    k: np.ndarray
    m_cutoff: int
    scaled: np.ndarray        # (nk, 6 (M+1)) complex
    params: PhysicalParams
    meta: dict

    def family(self, name: str) -> np.ndarray:
        j = _FAMILIES.index(name.lower())
        n1 = self.m_cutoff + 1
        return self.scaled[:, j * n1:(j + 1) * n1]

    def coefficient(self, name: str, m: int) -> np.ndarray:
        """Unscaled eps_m-folded coefficient over the k grid (eps_0 = 1,
        eps_m = 2 for m >= 1 is already divided out of the stored values)."""
        if not 0 <= m <= self.m_cutoff:
            raise DomainError(f"mode {m} outside [0, {self.m_cutoff}]")
        vals = self.family(name)[:, m].copy()
        k_abs = np.abs(self.k)
        pos = k_abs > 0
        p = self.params
        gam = np.sqrt(p.sigma_z / p.sigma_rho)
        beta = k_abs[pos]
        kap = gam * beta
        scale_arg = {
            "a": ("i", beta * p.a), "b": ("i", kap * p.b), "c": ("k", kap * p.a),
            "d": ("i", beta * p.c), "e": ("k", beta * p.b), "f": ("k", beta * p.c),
        }[name.lower()]
        kind, arg = scale_arg
        if kind == "i":
            base = ive_orders(m, arg)[m] * np.exp(arg)
        else:
            base = kve_orders(m, arg)[m] * np.exp(-arg)
        eps = 1.0 if m == 0 else 2.0
        vals[pos] = vals[pos] / (eps * base)
        return vals


def solve_coefficients(spectrum: PotentialSpectrum, params: PhysicalParams,
                       m_cutoff: int = 6,
                       settings: SolverSettings | None = None
                       ) -> BoundaryCoefficients:
    """Boundary coefficients for every nonzero-k bin of the spectrum.

    The unit-source systems are real and depend only on |k|, so each
    distinct positive bin is solved once and rescaled by phi_m(k); the
    k = 0 bin gets zero coefficients (a z-uniform potential drives no
    azimuthal field).
    """
    spectrum.check_hermitian()
    k = spectrum.k
    pos = k > 0
    k_abs_used = np.unique(np.abs(k[k != 0]))
    x_unit, _, (mat_eq, rhs_eq) = _solve_unit(params, m_cutoff, k_abs_used,
                                              settings)
    res = substitute_back_residual(mat_eq, rhs_eq, x_unit)
    scaled = np.zeros(k.shape + (x_unit.shape[1],), dtype=complex)
    nz = k != 0.0
    idx = np.searchsorted(k_abs_used, np.abs(k[nz]))
    scaled[nz] = x_unit[idx] * spectrum.values[nz, None]
    return BoundaryCoefficients(
        k=k.copy(), m_cutoff=m_cutoff, scaled=scaled, params=params,
        meta={"residual": res, "n_z": spectrum.n_z, "dz": spectrum.dz})


def _field_factors(params: PhysicalParams, m_cutoff: int, rho: float,
                   x_unit: np.ndarray, tab) -> dict:
    """Real geometry factors G such that B_X(k) = i sign(k) G_X(|k|) phi(k)."""
    M = m_cutoff
    n1 = M + 1
    p = params
    if rho < p.c * (1 - 1e-12):
        raise DomainError(f"evaluation radius {rho} must be >= c = {p.c}")
    beta, kap, gam = tab["beta"], tab["kap"], tab["gam"]
    ivet = tab["ivet"]
    si_ba, si_kb, si_ka = tab["si_ba"], tab["si_kb"], tab["si_ka"]
    sk_ka, sk_kb = tab["sk_ka"], tab["sk_kb"]
    si_bb, si_bc = tab["si_bb"], tab["si_bc"]
    sk_bb, sk_bc = tab["sk_bb"], tab["sk_bc"]
    q_ab, q_bc = tab["q_ab"], tab["q_bc"]
    t = p.d
    xa = x_unit[:, 0 * n1:1 * n1].T
    xb = x_unit[:, 1 * n1:2 * n1].T
    xc = x_unit[:, 2 * n1:3 * n1].T
    xd = x_unit[:, 3 * n1:4 * n1].T
    xe = x_unit[:, 4 * n1:5 * n1].T
    xf = x_unit[:, 5 * n1:6 * n1].T

    mu0r = p.mu0 * p.mu_r / rho
    # fiber: a A_0 I_1(beta a)
    g_i = mu0r * p.sigma_i * p.a * xa[0] * si_ba[1] / si_ba[0]

    pref_b = mu0r * p.sigma_z * np.sqrt(p.sigma_rho / p.sigma_z)
    # unprimed m=0 coefficients at rho = b and primed ones at rho' = a
    b0_i1kb = xb[0] * si_kb[1] / si_kb[0]
    cext_over_k1 = sum(xc[n] * ivet[n] / sk_ka[n] for n in range(n1))  # * q_ab scale
    cext_k1kb = cext_over_k1 * sk_kb[1] * q_ab
    bint_over = sum(xb[n] * ivet[n] / si_kb[n] for n in range(n1))
    bint_i1ka = bint_over * si_ka[1] * q_ab
    c0_k1ka = xc[0] * sk_ka[1] / sk_ka[0]
    g_b = pref_b * (p.b * (b0_i1kb - cext_k1kb) - p.a * (bint_i1ka - c0_k1ka))

    # three-way split: disk rho < t, annulus t..b, minus the fiber hole
    with np.errstate(over="ignore", invalid="ignore"):
        if t > 0:
            kvet = tab["kvet"]
            exp_ka = np.exp(kap * p.a)
            exp_tb = np.exp(kap * (t - p.b))
            b0_t = xb[0] / si_kb[0] * ivet[1] * exp_tb * t
            cint = sum(((-1) ** n) * xc[n] * kvet[n] / sk_ka[n] for n in range(n1))
            g_b1 = pref_b * (b0_t + t * cint * ivet[1] * exp_ka)
            g_b2 = pref_b * (xb[0] * (p.b * si_kb[1] / si_kb[0] - t * ivet[1]
                                      / si_kb[0] * exp_tb)
                             + cext_over_k1 * (t * kvet[1] * exp_ka
                                               - p.b * sk_kb[1] * q_ab))
        else:
            # t -> 0 limits: t I_1(kappa t) -> 0, t K_1(kappa t) -> 1/kappa
            g_b1 = np.zeros_like(beta)
            exp_ka = np.exp(kap * p.a)
            g_b2 = pref_b * (xb[0] * p.b * si_kb[1] / si_kb[0]
                             + xc[0] * (exp_ka / (kap * sk_ka[0])
                                        - p.b * sk_kb[1] / sk_ka[0] * q_ab))
        g_b3 = -pref_b * (bint_i1ka * p.a
                          + xc[0] * (exp_ka / (kap * sk_ka[0])
                                     - p.a * sk_ka[1] / sk_ka[0]))
        g_bres = g_b - (g_b1 + g_b2 + g_b3)

    d0 = xd[0] / si_bc[0]
    e0 = xe[0] / sk_bb[0]
    g_s = mu0r * p.sigma_s * (
        d0 * (p.c * si_bc[1] - p.b * si_bb[1] * q_bc)
        + e0 * (p.b * sk_bb[1] - p.c * sk_bc[1] * q_bc))

    sk_brho = kve_orders(1, beta * rho)
    q_crho = np.exp(-beta * (rho - p.c))
    g_e = mu0r * p.sigma_e * (xf[0] / sk_bc[0]) * (
        p.c * sk_bc[1] - rho * sk_brho[1] * q_crho)

    return {"i": g_i, "b": g_b, "s": g_s, "e": g_e,
            "b1": g_b1, "b2": g_b2, "b3": g_b3, "bres": g_bres}


def _component_at(name: str, k, params: PhysicalParams,
                  coeffs: BoundaryCoefficients, rho: float):
    """Evaluate one field component at bins of the coefficients' k grid.

    The field formulas are linear in the coefficients, so the stored
    (spectrum-scaled, complex) solution feeds the same geometry-factor
    arithmetic as the unit solve.
    """
    k_arr = np.atleast_1d(np.asarray(k, dtype=float))
    out = np.zeros(k_arr.shape, dtype=complex)
    idx = np.empty(k_arr.size, dtype=int)
    for j, kj in enumerate(k_arr):
        match = np.nonzero(np.isclose(coeffs.k, kj, rtol=1e-12, atol=0.0))[0]
        if match.size == 0:
            raise DomainError(f"k = {kj:g} not on the coefficient grid")
        idx[j] = match[0]
    live = k_arr != 0.0
    if live.any():
        sel = idx[live]
        k_abs = np.abs(k_arr[live])
        order = np.argsort(k_abs)
        tab = _scaled_bessel_tables(params, coeffs.m_cutoff, k_abs[order])
        g = _field_factors(params, coeffs.m_cutoff, rho,
                           coeffs.scaled[sel][order], tab)[name]
        vals = np.empty(k_abs.size, dtype=complex)
        vals[order] = g
        out[live] = 1j * np.sign(k_arr[live]) * vals
    return out if np.ndim(k) else complex(out[0])


def field_fiber(k, params: PhysicalParams, coeffs: BoundaryCoefficients,
                rho: float):
    """Intracellular-current field contribution B_i(rho, k) in T m."""
    return _component_at("i", k, params, coeffs, rho)


def field_bundle(k, params: PhysicalParams, coeffs: BoundaryCoefficients,
                 rho: float):
    """Bundle-current contribution B_b(rho, k) = B_b1 + B_b2 + B_b3 (+ cross)."""
    return _component_at("b", k, params, coeffs, rho)


def field_bundle_terms(k, params: PhysicalParams, coeffs: BoundaryCoefficients,
                       rho: float) -> dict:
    """The three-way bundle split plus the explicit cross term."""
    return {name: _component_at(name, k, params, coeffs, rho)
            for name in ("b1", "b2", "b3", "bres")}


def field_sheath(k, params: PhysicalParams, coeffs: BoundaryCoefficients,
                 rho: float):
    """Sheath-current contribution B_s(rho, k) in T m."""
    return _component_at("s", k, params, coeffs, rho)


def field_saline(k, params: PhysicalParams, coeffs: BoundaryCoefficients,
                 rho: float):
    """External-saline contribution B_e(rho, k); vanishes at rho = c."""
    return _component_at("e", k, params, coeffs, rho)


@dataclass
class SpectralField:
    """Azimuthal field components in k space at a fixed radius rho (T m).

    b_total is by construction the exact per-bin sum of the four stored
    components; the bundle term also carries the textbook three-way split
    (disk inside the fiber offset, annulus, fiber-hole correction) plus the
    explicit cross-term so the split sums back to b_bundle.
    """

    k: np.ndarray
    rho: float
    b_fiber: np.ndarray
    b_bundle: np.ndarray
    b_sheath: np.ndarray
    b_saline: np.ndarray
    bundle_split: dict
    n_z: int
    dz: float
    meta: dict

    @property
    def b_total(self) -> np.ndarray:
        return self.b_fiber + self.b_bundle + self.b_sheath + self.b_saline

    def components(self) -> dict:
        return {"total": self.b_total, "fiber": self.b_fiber,
                "bundle": self.b_bundle, "sheath": self.b_sheath,
                "saline": self.b_saline}

    def check_hermitian(self, tol: float = _HERMITIAN_TOL):
        mirror = _mirror_index(self.k.size)
        for name, arr in self.components().items():
            scale = np.abs(arr).max() or 1.0
            err = np.abs(arr - np.conj(arr[mirror])).max() / scale
            if err > tol:
                raise DomainError(
                    f"component {name} violates Hermitian symmetry ({err:.2e})")


def _component_fields(params, m_cutoff, spectrum, rho, settings):
    spectrum.check_hermitian()
    k = spectrum.k
    n = k.size
    k_abs_used = np.unique(np.abs(k[k != 0.0]))
    x_unit, tab, (mat_eq, rhs_eq) = _solve_unit(params, m_cutoff, k_abs_used,
                                                settings)
    residual = substitute_back_residual(mat_eq, rhs_eq, x_unit)
    g = _field_factors(params, m_cutoff, rho, x_unit, tab)
    # k = 0 drives no azimuthal field; the unpaired Nyquist bin of an
    # odd-in-k operator cannot stay Hermitian and is zeroed as well
    live = k != 0.0
    if n % 2 == 0:
        live[n // 2] = False
    idx = np.searchsorted(k_abs_used, np.abs(k[live]))
    fac = 1j * np.sign(k[live]) * spectrum.values[live]
    comp = {}
    for name in g:
        arr = np.zeros(n, dtype=complex)
        arr[live] = fac * g[name][idx]
        comp[name] = arr
    return comp, residual


def total_field(spectrum: PotentialSpectrum, params: PhysicalParams,
                rho: float | None = None, m_cutoff: int = 6,
                settings: SolverSettings = SolverSettings()) -> SpectralField:
    """Solve the boundary problem and assemble all field components at rho.

    rho defaults to c + settings.eval_distance. Components satisfy
    b_total = b_fiber + b_bundle + b_sheath + b_saline per bin exactly.
    """
    if rho is None:
        rho = params.c + settings.eval_distance
    comp, residual = _component_fields(params, m_cutoff, spectrum, rho, settings)
    return SpectralField(
        k=spectrum.k.copy(), rho=float(rho),
        b_fiber=comp["i"], b_bundle=comp["b"], b_sheath=comp["s"],
        b_saline=comp["e"],
        bundle_split={"b1": comp["b1"], "b2": comp["b2"], "b3": comp["b3"],
                      "cross_term": comp["bres"]},
        n_z=spectrum.n_z, dz=spectrum.dz,
        meta={"m_cutoff": m_cutoff, "residual": residual,
              "params_hash": hashlib.sha256(repr(params).encode()).hexdigest()[:16]})


@dataclass
class FieldTrace:
    """Real-space field: B(z) at fixed rho, or B(t) at a fixed point."""

    axis: np.ndarray
    kind: str                 # "space" or "time"
    b_total: np.ndarray
    components: dict
    rho: float
    meta: dict

    def peak(self) -> float:
        return float(np.abs(self.b_total).max())


def spatial_field(spectral: SpectralField) -> FieldTrace:
    """Inverse transform to B(z) at the evaluation radius.

    Raises DomainError if any component violates Hermitian symmetry; the
    imaginary residue after inversion must stay below 1e-10 of the peak.
    """
    spectral.check_hermitian()
    comps = {}
    imag_worst = 0.0
    for name, arr in spectral.components().items():
        sig = inverse_transform(arr, spectral.dz)
        peak = np.abs(sig.real).max() or 1.0
        imag_worst = max(imag_worst, np.abs(sig.imag).max() / peak)
        comps[name] = sig.real
    if imag_worst > _HERMITIAN_TOL:
        raise DomainError(f"imaginary residue {imag_worst:.2e} after inversion")
    z = np.arange(spectral.n_z) * spectral.dz
    meta = dict(spectral.meta, imag_residue=imag_worst)
    return FieldTrace(axis=z, kind="space", b_total=comps.pop("total"),
                      components=comps, rho=spectral.rho, meta=meta)


def time_series_at_point(spectral: SpectralField, u: float) -> FieldTrace:
    """B(t) at a fixed point via the traveling-wave reparameterization t = z/u."""
    if u <= 0:
        raise DomainError("conduction velocity must be > 0")
    trace = spatial_field(spectral)
    return FieldTrace(axis=trace.axis / u, kind="time", b_total=trace.b_total,
                      components=trace.components, rho=trace.rho,
                      meta=dict(trace.meta, u=u))


# ---------------------------------------------------------------------------
# sweeps

_SWEEP_AXES = ("distance", "ratio", "offset")


@dataclass
class SweepResult:
    axis: str
    values: np.ndarray
    peak_total: np.ndarray
    peak_components: dict     # name -> array over values
    meta: dict


def sweep(spectrum: PotentialSpectrum, params: PhysicalParams, axis: str,
          values, m_cutoff: int = 6,
          settings: SolverSettings = SolverSettings()) -> SweepResult:
    """Peak |B| versus evaluation distance, anisotropy ratio, or fiber offset.

    distance values are offsets from the sheath surface (m); ratio values
    are sigma_z/sigma_rho with sigma_z held fixed; offset values replace d.
    A failure at any point aborts the sweep naming the offending value.
    """
    if axis not in _SWEEP_AXES:
        raise DomainError(f"unknown sweep axis {axis!r}; one of {_SWEEP_AXES}")
    values = np.asarray(list(values), dtype=float)
    if values.size == 0:
        raise DomainError("sweep needs at least one value")
    peaks = []
    comp_peaks = {name: [] for name in ("fiber", "bundle", "sheath", "saline")}
    for v in values:
        try:
            p, rho = params, params.c + settings.eval_distance
            if axis == "distance":
                if v <= 0:
                    raise DomainError("distance must be > 0")
                rho = params.c + v
            elif axis == "ratio":
                if v <= 0:
                    raise DomainError("ratio must be > 0")
                p = replace(params, sigma_rho=params.sigma_z / v)
            else:
                p = replace(params, d=v)
            field = total_field(spectrum, p, rho, m_cutoff, settings)
            trace = spatial_field(field)
        except Exception as exc:
            raise SolverError(f"sweep aborted at {axis} = {v:.6g}: {exc}") from exc
        peaks.append(trace.peak())
        for name in comp_peaks:
            comp_peaks[name].append(float(np.abs(trace.components[name]).max()))
    return SweepResult(axis=axis, values=values, peak_total=np.array(peaks),
                       peak_components={k: np.array(v) for k, v in comp_peaks.items()},
                       meta={"m_cutoff": m_cutoff,
                             "eval_distance": settings.eval_distance})


# ---------------------------------------------------------------------------
# CSV output

def export_spectral_csv(spectral: SpectralField, path):
    cols = [("B_i", spectral.b_fiber), ("B_b", spectral.b_bundle),
            ("B_s", spectral.b_sheath), ("B_e", spectral.b_saline),
            ("B_total", spectral.b_total)]
    header = "k_rad_per_m," + ",".join(f"{n}_re,{n}_im" for n, _ in cols)
    order = np.argsort(spectral.k)
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for j in order:
            row = ["%.17g" % spectral.k[j]]
            for _, arr in cols:
                row += ["%.17g" % arr[j].real, "%.17g" % arr[j].imag]
            fh.write(",".join(row) + "\n")


def export_trace_csv(trace: FieldTrace, path):
    axis_name = "z_m" if trace.kind == "space" else "t_s"
    header = (f"{axis_name},B_total_T,B_i_T,B_b_T,B_s_T,B_e_T")
    comp = trace.components
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for j, x in enumerate(trace.axis):
            fh.write(",".join("%.17g" % v for v in (
                x, trace.b_total[j], comp["fiber"][j], comp["bundle"][j],
                comp["sheath"][j], comp["saline"][j])) + "\n")


def export_sweep_csv(result: SweepResult, path):
    header = (f"{result.axis},peak_B_total_T,peak_B_i_T,peak_B_b_T,"
              "peak_B_s_T,peak_B_e_T")
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for j, v in enumerate(result.values):
            fh.write(",".join("%.17g" % x for x in (
                v, result.peak_total[j], result.peak_components["fiber"][j],
                result.peak_components["bundle"][j],
                result.peak_components["sheath"][j],
                result.peak_components["saline"][j])) + "\n")
