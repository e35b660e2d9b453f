"""Modified Bessel functions of integer order, I_n and K_n.

Built for the cylindrical boundary-value solver, which needs stable values
over roughly x in [1e-8, 700] for orders up to ~20, plus exponentially
scaled variants for the solver's internal arithmetic at large |k|.

Algorithms
----------
I_n : downward ratio recurrence r_n = I_{n+1}/I_n seeded deep in the decay
      regime, normalized with the exact identity e^x = I_0 + 2*sum_k I_k.
      This is Miller's backward scheme in ratio form: no overflow, uniform
      accuracy from tiny to large x.
K_0 : classical log series for x <= 2; Steed's continued fraction (CF2)
      for x > 2. K_1 follows from the Wronskian I_0*K_1 + I_1*K_0 = 1/x,
      higher orders by the (stable) upward recurrence.

All functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, OverflowRangeError

ORDER_MAX = 16          # public-contract order cap
_EULER_GAMMA = 0.5772156649015328606
_UNSCALED_I_MAX = 700.0  # above this, use the scaled variant


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _check_order(n: int, nmax: int = ORDER_MAX) -> int:
    if not isinstance(n, (int, np.integer)):
        raise DomainError(f"order must be an integer, got {n!r}")
    if n < 0 or n > nmax:
        raise DomainError(f"order {n} outside supported range [0, {nmax}]")
    return int(n)


def ive_orders(nmax: int, x) -> np.ndarray:
    """Scaled e^{-x} I_n(x) for all orders n = 0..nmax, stacked on axis 0.

    x must be >= 0 (arrays allowed). Vectorized workhorse for the solver.
    """
    xa, scalar = _as_array(x)
    if np.any(xa < 0):
        raise DomainError("I_n requires x >= 0")
    flat = np.atleast_1d(xa).ravel()
    out = np.zeros((nmax + 1, flat.size))
    pos = flat > 0
    xp = flat[pos]
    if xp.size:
        # start order: deep enough into the n > x decay regime for the seed
        # error r_N = 0 to wash out by n = nmax
        nstart = nmax + 40 + int(np.ceil(1.15 * xp.max()))
        ratios = np.zeros((nstart, xp.size))
        r = np.zeros_like(xp)
        for n in range(nstart - 1, -1, -1):
            r = 1.0 / (2.0 * (n + 1) / xp + r)
            ratios[n] = r
        # normalization: e^{-x} (I_0 + 2 sum I_k) = 1
        s = np.ones_like(xp)
        prod = np.ones_like(xp)
        for k in range(nstart):
            prod = prod * ratios[k]
            s += 2.0 * prod
            if not np.any(prod > 1e-40 * s):
                break
        vals = np.empty((nmax + 1, xp.size))
        vals[0] = 1.0 / s
        for n in range(1, nmax + 1):
            vals[n] = vals[n - 1] * ratios[n - 1]
        out[:, pos] = vals
    out[0, ~pos] = 1.0  # I_0(0) = 1, I_n(0) = 0
    out = out.reshape((nmax + 1,) + xa.shape)
    return out


def _i01_series(x: np.ndarray):
    """Unscaled I_0, I_1 by power series; intended for x <= 2."""
    x2 = 0.25 * x * x
    i0 = np.ones_like(x)
    i1 = 0.5 * x.copy()
    term0 = np.ones_like(x)
    term1 = 0.5 * x.copy()
    for j in range(1, 24):
        term0 = term0 * x2 / (j * j)
        term1 = term1 * x2 / (j * (j + 1))
        i0 += term0
        i1 += term1
    return i0, i1


def _kve01_small(x: np.ndarray):
    """Scaled K_0, K_1 via the log series, for 0 < x <= 2."""
    i0, i1 = _i01_series(x)
    x2 = 0.25 * x * x
    acc = np.zeros_like(x)
    term = np.ones_like(x)
    hsum = 0.0
    for j in range(1, 24):
        term = term * x2 / (j * j)
        hsum += 1.0 / j
        acc += term * hsum
    k0 = -(np.log(0.5 * x) + _EULER_GAMMA) * i0 + acc
    k1 = (1.0 / x - i1 * k0) / i0   # Wronskian
    ex = np.exp(x)
    return k0 * ex, k1 * ex


def _kve01_cf2(x: np.ndarray):
    """Scaled K_0, K_1 via Steed's continued fraction, for x > 2."""
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    delh = d.copy()
    h = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, 64):
        a -= 2.0 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        if not np.any(np.abs(dels) > 1e-18 * np.abs(s)):
            break
    h = a1 * h
    kve0 = np.sqrt(np.pi / (2.0 * x)) / s
    kve1 = kve0 * (x + 0.5 - h) / x
    return kve0, kve1


def kve_orders(nmax: int, x) -> np.ndarray:
    """Scaled e^{x} K_n(x) for all orders n = 0..nmax, stacked on axis 0.

    x must be > 0 (arrays allowed).
    """
    xa, scalar = _as_array(x)
    if np.any(xa <= 0):
        raise DomainError("K_n requires x > 0 (K diverges at 0)")
    flat = np.atleast_1d(xa).ravel()
    kve0 = np.empty(flat.size)
    kve1 = np.empty(flat.size)
    small = flat <= 2.0
    if np.any(small):
        kve0[small], kve1[small] = _kve01_small(flat[small])
    if np.any(~small):
        kve0[~small], kve1[~small] = _kve01_cf2(flat[~small])
    out = np.empty((nmax + 1, flat.size))
    out[0] = kve0
    if nmax >= 1:
        out[1] = kve1
    for n in range(1, nmax):
        out[n + 1] = out[n - 1] + (2.0 * n / flat) * out[n]
    return out.reshape((nmax + 1,) + xa.shape)


def bessel_i(n: int, x):
    """Modified Bessel function of the first kind, I_n(x), x in [0, 700].

    Raises OverflowRangeError beyond 700 (use bessel_i_scaled there) and
    DomainError for x < 0 or unsupported order.
    """
    n = _check_order(n)
    xa, scalar = _as_array(x)
    if np.any(xa < 0):
        raise DomainError("I_n requires x >= 0")
    if np.any(xa > _UNSCALED_I_MAX):
        raise OverflowRangeError(
            f"I_{n}(x) overflows for x > {_UNSCALED_I_MAX:.0f}; "
            "use bessel_i_scaled")
    val = ive_orders(n, xa)[n] * np.exp(xa)
    return float(val) if scalar else val


def bessel_i_scaled(n: int, x):
    """Exponentially scaled e^{-x} I_n(x), valid for any x >= 0."""
    n = _check_order(n)
    xa, scalar = _as_array(x)
    val = ive_orders(n, xa)[n]
    return float(val) if scalar else val


def bessel_k(n: int, x):
    """Modified Bessel function of the second kind, K_n(x), x > 0.

    Raises DomainError at x <= 0 (logarithmic singularity at the origin).
    """
    n = _check_order(n)
    xa, scalar = _as_array(x)
    val = kve_orders(n, xa)[n] * np.exp(-xa)
    return float(val) if scalar else val


def bessel_k_scaled(n: int, x):
    """Exponentially scaled e^{x} K_n(x), x > 0."""
    n = _check_order(n)
    xa, scalar = _as_array(x)
    val = kve_orders(n, xa)[n]
    return float(val) if scalar else val


def bessel_i_prime(n: int, x):
    """Derivative I_n'(x) = (I_{n-1}(x) + I_{n+1}(x))/2, with I_0' = I_1."""
    n = _check_order(n)
    xa, scalar = _as_array(x)
    iv = ive_orders(n + 1, xa)
    if n == 0:
        val = iv[1]
    else:
        val = 0.5 * (iv[n - 1] + iv[n + 1])
    val = val * np.exp(xa)
    return float(val) if scalar else val


def bessel_k_prime(n: int, x):
    """Derivative K_n'(x) = -(K_{n-1}(x) + K_{n+1}(x))/2, with K_0' = -K_1."""
    n = _check_order(n)
    xa, scalar = _as_array(x)
    kv = kve_orders(n + 1, xa)
    if n == 0:
        val = -kv[1]
    else:
        val = -0.5 * (kv[n - 1] + kv[n + 1])
    val = val * np.exp(-xa)
    return float(val) if scalar else val
