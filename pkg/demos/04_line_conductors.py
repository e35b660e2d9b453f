"""Line-conductor estimators: closed form, quadrature, and cancellation.

When a whole muscle is reduced to straight current-carrying segments, the
field follows from the finite-segment closed form (checked against direct
quadrature of the line integrand), while the transmembrane-ring demo shows
why membrane currents are magnetically silent. Also: the discrete dipole
moment of a current loop and the vortex source (curl) of a current field.

Run:  python demos/04_line_conductors.py
"""

import numpy as np

from myofield import (CurrentSample, LineConductor, biot_savart_quadrature,
                      finite_line_field, magnetic_dipole_moment,
                      transmembrane_ring_field, vortex_source)
from myofield.params import MU0

# a 12 mm segment standing in for one active fiber, 0.2 uA axial current
seg = LineConductor((0, 0, 0), (0, 0, 12e-3), 0.2e-6)
point = (190e-6, 0.0, 6e-3)          # beside the middle, like the sensor
closed = finite_line_field(seg, point)
quad = biot_savart_quadrature(seg, point)
print(f"finite segment: closed form {closed*1e12:.2f} pT, "
      f"quadrature {np.linalg.norm(quad)*1e12:.2f} pT")
print(f"infinite-line value mu0 I/(2 pi r) = "
      f"{MU0*seg.current/(2*np.pi*1.9e-4)*1e12:.2f} pT")

# cancellation of radial membrane currents around the cable
radius = 50e-6
ang = np.pi / 64
far = (10 * radius * np.cos(ang), 10 * radius * np.sin(ang), 0.0)
single = np.linalg.norm(transmembrane_ring_field(1, radius, 1e-9, far))
for n in (8, 16, 32, 64):
    net = np.linalg.norm(transmembrane_ring_field(n, radius, 1e-9, far))
    print(f"ring of {n:2d} radial elements: |B_net| / |B_single| = "
          f"{net/single:.2e}")

# dipole moment of a discretized current loop: m = I A n
loop_r, current = 5e-3, 1e-6
samples = []
for j in range(360):
    phi = 2 * np.pi * j / 360
    samples.append(CurrentSample(
        position=(loop_r * np.cos(phi), loop_r * np.sin(phi), 0.0),
        current_density=tuple(current / 1e-8 * np.array(
            [-np.sin(phi), np.cos(phi), 0.0])),
        volume=1e-8 * 2 * np.pi * loop_r / 360))
m = magnetic_dipole_moment(samples)
print(f"loop dipole moment: {m[2]:.4e} A m^2 "
      f"(I*A = {current*np.pi*loop_r**2:.4e})")

# vortex source: the curl of a rotational current density
h, n = 1e-3, 9
ax = (np.arange(n) - n // 2) * h
x, y, z = np.meshgrid(ax, ax, ax, indexing="ij")
j_field = np.stack([-y, x, np.zeros_like(x)])   # rigid rotation
curl = vortex_source(j_field, h)
print(f"curl of rigid-rotation current: z-component = {curl[2].mean():.6f} "
      "(analytic 2)")
