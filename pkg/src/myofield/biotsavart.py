"""Biot-Savart estimators for line-conductor approximations of fibers.

A muscle can be reduced to a set of straight current-carrying segments; the
closed-form finite-segment field, a Gauss-Legendre quadrature of the
Biot-Savart integrand (which doubles as the oracle for the closed form),
a transmembrane-ring cancellation demo, and the discrete dipole-moment and
curl (vortex-source) utilities live here. SI units throughout.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, ParamError, SingularityError
from .params import MU0

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class LineConductor:
    """Straight segment from start to end carrying current amps (A)."""

    start: tuple
    end: tuple
    current: float

    def __post_init__(self):
        s = np.asarray(self.start, dtype=float)
        e = np.asarray(self.end, dtype=float)
        if s.shape != (3,) or e.shape != (3,):
            raise ParamError("conductor endpoints must be 3-vectors")
        if not np.all(np.isfinite(s)) or not np.all(np.isfinite(e)):
            raise ParamError("conductor endpoints must be finite")
        if np.linalg.norm(e - s) == 0.0:
            raise ParamError("conductor must have nonzero length")
        object.__setattr__(self, "start", tuple(s))
        object.__setattr__(self, "end", tuple(e))

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.subtract(self.end, self.start)))

    def direction(self) -> np.ndarray:
        d = np.subtract(self.end, self.start)
        return d / np.linalg.norm(d)


@dataclass(frozen=True)
class CurrentSample:
    """Point sample of an impressed current density J (A/m^2) over a cell volume."""

    position: tuple
    current_density: tuple
    volume: float

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float)
        j = np.asarray(self.current_density, dtype=float)
        if p.shape != (3,) or j.shape != (3,):
            raise ParamError("position and current density must be 3-vectors")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(j))
                and np.isfinite(self.volume)):
            raise ParamError("current sample must be finite")


def finite_line_field(conductor: LineConductor, point, mu_r: float = 1.0) -> float:
    """Signed azimuthal field (T) of a finite straight segment.

    Positive sign means the field circulates right-handedly about the
    current direction. For a point in the plane of the segment's start this
    reduces to mu0 mu_r I l / (4 pi r sqrt(l^2 + r^2)); the general position
    uses the standard two-endpoint form. Raises SingularityError on the
    carrier line (r = 0).
    """
    p = np.asarray(point, dtype=float)
    s = np.asarray(conductor.start, dtype=float)
    u = conductor.direction()
    rel = p - s
    z1 = float(rel @ u)                  # axial coordinate of the foot
    perp = rel - z1 * u
    r = float(np.linalg.norm(perp))
    if r == 0.0:
        raise SingularityError("field point lies on the conductor axis")
    z2 = z1 - conductor.length
    # B = mu0 I/(4 pi r) (sin(theta_top) - sin(theta_bottom))
    sin_top = -z2 / np.hypot(z2, r)
    sin_bot = -z1 / np.hypot(z1, r)
    return MU0 * mu_r * conductor.current / (4.0 * np.pi * r) * (sin_top - sin_bot)


def _segment_quadrature(conductor: LineConductor, p: np.ndarray,
                        mu_r: float, rel_tol: float) -> np.ndarray:
    """Adaptive composite 16-point Gauss-Legendre on one segment."""
    s = np.asarray(conductor.start, dtype=float)
    e = np.asarray(conductor.end, dtype=float)

    def integrate(n_panels: int) -> np.ndarray:
        edges = np.linspace(0.0, 1.0, n_panels + 1)
        acc = np.zeros(3)
        for a0, a1 in zip(edges[:-1], edges[1:]):
            mid, half = 0.5 * (a0 + a1), 0.5 * (a1 - a0)
            ts = mid + half * _GL_NODES
            pts = s[None, :] + ts[:, None] * (e - s)[None, :]
            rvec = p[None, :] - pts
            dist = np.linalg.norm(rvec, axis=1)
            integrand = np.cross((e - s)[None, :], rvec) / dist[:, None] ** 3
            acc = acc + half * (_GL_WEIGHTS @ integrand)
        return acc

    val = integrate(1)
    for n_panels in (2, 4, 8, 16, 32, 64):
        new = integrate(n_panels)
        if np.linalg.norm(new - val) <= rel_tol * max(np.linalg.norm(new), 1e-300):
            val = new
            break
        val = new
    return MU0 * mu_r * conductor.current / (4.0 * np.pi) * val


def biot_savart_quadrature(sources, point, mu_r: float = 1.0,
                           rel_tol: float = 1e-9) -> np.ndarray:
    """Field vector (T) at point by quadrature of the Biot-Savart integrand.

    sources is a LineConductor, an iterable of them, or an iterable of
    CurrentSample volume elements (summed as J x r / r^3 dv). Warns when the
    point comes within 1/100 of an element length of a conductor.
    """
    p = np.asarray(point, dtype=float)
    if isinstance(sources, (LineConductor, CurrentSample)):
        sources = [sources]
    total = np.zeros(3)
    for src in sources:
        if isinstance(src, LineConductor):
            s = np.asarray(src.start)
            e = np.asarray(src.end)
            seg = e - s
            tt = np.clip(((p - s) @ seg) / (seg @ seg), 0.0, 1.0)
            dist = np.linalg.norm(p - (s + tt * seg))
            if dist == 0.0:
                raise SingularityError("field point lies on a conductor")
            if dist < src.length / 100.0:
                warnings.warn(
                    "field point within 1/100 of an element length of a "
                    "conductor; quadrature accuracy degrades", stacklevel=2)
            total = total + _segment_quadrature(src, p, mu_r, rel_tol)
        elif isinstance(src, CurrentSample):
            rvec = p - np.asarray(src.position)
            dist = np.linalg.norm(rvec)
            if dist == 0.0:
                raise SingularityError("field point lies on a current sample")
            total = total + MU0 * mu_r / (4.0 * np.pi) * src.volume * \
                np.cross(np.asarray(src.current_density), rvec) / dist ** 3
        else:
            raise DomainError(f"unsupported source type {type(src).__name__}")
    return total


def transmembrane_ring_field(n_elements: int, cable_radius: float,
                             current_per_element: float, point,
                             element_length: float | None = None) -> np.ndarray:
    """Net field of N radially outward membrane-current elements on a ring.

    Models the transmembrane current leaving a cable of the given radius:
    N short radial segments, uniformly spaced in azimuth, each carrying the
    same outward current. At distances >> radius the contributions cancel,
    which is why transmembrane currents are magnetically silent.
    """
    if n_elements < 1:
        raise DomainError("need at least one element")
    if cable_radius <= 0:
        raise DomainError("cable radius must be > 0")
    p = np.asarray(point, dtype=float)
    if n_elements >= 8 and np.linalg.norm(p) < 10.0 * cable_radius:
        raise DomainError("field point must be at least 10 cable radii away")
    ell = cable_radius if element_length is None else element_length
    conductors = []
    for j in range(n_elements):
        phi = 2.0 * np.pi * j / n_elements
        rhat = np.array([np.cos(phi), np.sin(phi), 0.0])
        conductors.append(LineConductor(
            start=tuple(cable_radius * rhat),
            end=tuple((cable_radius + ell) * rhat),
            current=current_per_element))
    return biot_savart_quadrature(conductors, p)


def magnetic_dipole_moment(samples) -> np.ndarray:
    """Discrete magnetic dipole moment m = 1/2 sum r x J dv (A m^2)."""
    m = np.zeros(3)
    for s in samples:
        m = m + 0.5 * s.volume * np.cross(np.asarray(s.position),
                                          np.asarray(s.current_density))
    return m


def vortex_source(j_grid, spacing) -> np.ndarray:
    """Discrete curl of a current-density field on a uniform 3-D lattice.

    j_grid has shape (3, nx, ny, nz); spacing is a scalar or (hx, hy, hz).
    Central differences inside, one-sided at the boundary (numpy.gradient).
    The curl of the impressed current density is the effective source of
    the magnetically visible signal.
    """
    j = np.asarray(j_grid, dtype=float)
    if j.ndim != 4 or j.shape[0] != 3:
        raise DomainError("expected shape (3, nx, ny, nz)")
    if min(j.shape[1:]) < 3:
        raise DomainError("need at least 3 lattice points per axis")
    h = np.broadcast_to(np.asarray(spacing, dtype=float), (3,))
    if np.any(h <= 0):
        raise DomainError("lattice spacing must be > 0")
    djz_dy = np.gradient(j[2], h[1], axis=1)
    djy_dz = np.gradient(j[1], h[2], axis=2)
    djx_dz = np.gradient(j[0], h[2], axis=2)
    djz_dx = np.gradient(j[2], h[0], axis=0)
    djy_dx = np.gradient(j[1], h[0], axis=0)
    djx_dy = np.gradient(j[0], h[1], axis=1)
    return np.stack([djz_dy - djy_dz, djx_dz - djz_dx, djy_dx - djx_dy])


def load_conductors_csv(path) -> list:
    """Read a conductor set from CSV with header x0,y0,z0,x1,y1,z1,I_A."""
    path = Path(path)
    conductors = []
    with open(path) as fh:
        header = fh.readline().strip()
        expected = "x0,y0,z0,x1,y1,z1,I_A"
        if header.replace(" ", "") != expected:
            raise ParamError(
                f"{path}:1: expected header {expected!r}, got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 7:
                raise ParamError(f"{path}:{lineno}: expected 7 fields, "
                                 f"got {len(parts)}")
            try:
                vals = [float(x) for x in parts]
            except ValueError as exc:
                raise ParamError(f"{path}:{lineno}: {exc}") from None
            try:
                conductors.append(LineConductor(
                    start=tuple(vals[0:3]), end=tuple(vals[3:6]),
                    current=vals[6]))
            except ParamError as exc:
                raise ParamError(f"{path}:{lineno}: {exc}") from None
    if not conductors:
        raise ParamError(f"{path}: no conductors found")
    return conductors
