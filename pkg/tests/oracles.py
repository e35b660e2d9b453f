"""Independent slow references used only by the test suite.

Nothing here touches the production code paths: Bessel values come from a
high-term-count power series and brute quadrature, Biot-Savart from a dense
fixed Simpson rule, the homogeneous-limit field from the concentric
two-region closed form, and filter gains from the analog Butterworth
prototype magnitude.
"""

import math

import numpy as np

MU0 = 4e-7 * math.pi


def bessel_i_series(n: int, x: float, terms: int = 60) -> float:
    """Power series sum_k (x/2)^{n+2k} / (k! (n+k)!)."""
    half = x / 2.0
    term = half ** n / math.factorial(n)
    total = term
    for k in range(1, terms):
        term *= half * half / (k * (n + k))
        total += term
    return total


def bessel_k_quadrature(n: int, x: float, n_points: int = 20001) -> float:
    """K_n(x) = integral_0^inf e^{-x cosh t} cosh(n t) dt by Simpson."""
    # integrand dead once x cosh t - n t > ~745
    t_max = math.acosh(max(760.0 / x, 2.0)) + (6.0 + n) / max(x, 0.25)
    t_max = min(t_max, math.acosh(max(1600.0 / x, 2.0)))
    t = np.linspace(0.0, t_max, n_points)
    # cosh(n t) written as split exponentials to survive large n t
    core = -x * np.cosh(t)
    with np.errstate(under="ignore"):
        f = 0.5 * (np.exp(core + n * t) + np.exp(core - n * t))
    h = t[1] - t[0]
    w = np.ones(n_points)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(h / 3.0 * (w @ f))


def wronskian_residual(i_n, i_np1, k_n, k_np1, x):
    """x (I_n K_{n+1} + I_{n+1} K_n) - 1, zero in exact arithmetic."""
    return x * (i_n * k_np1 + i_np1 * k_n) - 1.0


def single_fiber_field(k, rho: float, a: float, sigma_i: float,
                       sigma_ext: float, ive, kve):
    """Concentric fiber in an unbounded homogeneous medium, theta-averaged.

    Two-coefficient closed form: the interior harmonic amplitude follows
    from the membrane jump and current continuity at rho' = a; the field is
    mu0/(2 pi rho) times the enclosed axial current (fiber + return flow
    out to rho). ive/kve are scaled Bessel callables (n, x); k may be an
    array (k = 0 entries must be excluded by the caller).
    """
    k = np.asarray(k, dtype=float)
    beta = np.abs(k)
    i0a = ive(0, beta * a) * np.exp(beta * a)
    i1a = ive(1, beta * a) * np.exp(beta * a)
    k0a = kve(0, beta * a) * np.exp(-beta * a)
    k1a = kve(1, beta * a) * np.exp(-beta * a)
    k1r = kve(1, beta * rho) * np.exp(-beta * rho)
    a0 = 1.0 / (i0a + (sigma_i / sigma_ext) * i1a * k0a / k1a)
    f0 = -(sigma_i / sigma_ext) * a0 * i1a / k1a
    field = 1j * MU0 * k / (rho * beta) * (
        sigma_i * a * a0 * i1a + sigma_ext * f0 * (a * k1a - rho * k1r))
    return field


def biot_savart_simpson(start, end, current, point, n_points: int = 40001):
    """Dense fixed Simpson quadrature of the Biot-Savart line integrand."""
    s = np.asarray(start, dtype=float)
    e = np.asarray(end, dtype=float)
    p = np.asarray(point, dtype=float)
    ts = np.linspace(0.0, 1.0, n_points)
    pts = s[None, :] + ts[:, None] * (e - s)[None, :]
    rvec = p[None, :] - pts
    dist = np.linalg.norm(rvec, axis=1)
    integrand = np.cross(np.broadcast_to(e - s, rvec.shape), rvec) \
        / dist[:, None] ** 3
    h = ts[1] - ts[0]
    w = np.ones(n_points)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return MU0 * current / (4.0 * np.pi) * h / 3.0 * (w @ integrand)


def gaussian_transform(k, amplitude, width, center):
    """Continuous transform of A exp(-(z-z0)^2/(2 w^2)) with exp(+ikz) kernel."""
    k = np.asarray(k, dtype=float)
    return amplitude * width * math.sqrt(2.0 * math.pi) * \
        np.exp(-0.5 * (k * width) ** 2) * np.exp(1j * k * center)


def analog_butter_bandpass_gain(f, f_lo, f_hi, order, zero_phase=True):
    """Magnitude response of the analog Butterworth bandpass prototype.

    |H|^2 = 1 / (1 + ((w^2 - w0^2)/(dw w))^{2N}); the forward-backward
    (zero-phase) application squares the magnitude.
    """
    w = 2.0 * math.pi * np.asarray(f, dtype=float)
    w_lo = 2.0 * math.pi * f_lo
    w_hi = 2.0 * math.pi * f_hi
    w0_sq = w_lo * w_hi
    dw = w_hi - w_lo
    ratio = (w ** 2 - w0_sq) / (dw * w)
    mag_sq = 1.0 / (1.0 + ratio ** (2 * order))
    return mag_sq if zero_phase else np.sqrt(mag_sq)
