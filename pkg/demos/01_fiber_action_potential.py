"""Simulate the propagating action potential on a soleus-like muscle fiber.

Walks through the electrophysiology half of the pipeline: settle the fiber
to rest, drive the endplate with the 10 uS synaptic conductance, look at
the five stages of the response, and measure the conduction velocity.

Run:  python demos/01_fiber_action_potential.py [--plot]
"""

import sys

import numpy as np

from myofield import (Config, Stimulus, conduction_velocity, export_ap_csv,
                      relax_to_rest, simulate_fiber)

cfg = Config()
print(f"fiber: {cfg.grid.n_compartments} compartments x "
      f"{cfg.grid.compartment_length*1e6:.0f} um, radius "
      f"{cfg.params.a*1e6:.0f} um")

# 200 ms stimulus-free settling gives the resting state
rest = relax_to_rest(cfg.params, cfg.grid, cfg.solver)
print(f"resting potential: {rest.v.mean():.2f} mV")

# default stimulus: g_syn,max = 10 uS at the fiber midpoint, tau = 0.58 ms
trace = simulate_fiber(cfg.params, cfg.grid, cfg.solver, initial=rest)
site = trace.recording_site()
v = trace.v[:, site]
baseline = v[0]
i_peak = v.argmax()
print(f"recording compartment {site}:")
print(f"  peak overshoot   {v.max():+7.2f} mV at t = {trace.t[i_peak]*1e3:.2f} ms")
print(f"  undershoot       {v[i_peak:].min():+7.2f} mV "
      f"({baseline - v[i_peak:].min():.3f} mV below baseline)")
print(f"  end-of-trace     {v[-1]:+7.2f} mV (baseline {baseline:+.2f} mV)")

vel = conduction_velocity(trace)
print(f"conduction velocity: {vel:.2f} m/s "
      f"(imposed traveling-wave speed u = {cfg.params.u:.2f} m/s)")

# a sub-threshold stimulus leaves the fiber quiet
quiet = simulate_fiber(cfg.params, cfg.grid, cfg.solver,
                       stimulus=Stimulus(g_syn_max=0.1e-6), initial=rest,
                       sample_stride=16)
print(f"0.1 uS stimulus: peak V = {quiet.v.max():.2f} mV (no AP)")

export_ap_csv(trace, "ap_trace.csv")
print("wrote ap_trace.csv")

# peak axial current scale that drives the magnetic field
i_axial_peak = np.abs(trace.axial).max()
print(f"peak axial intracellular current: {i_axial_peak*1e6:.3f} uA")

if "--plot" in sys.argv:
    import matplotlib.pyplot as plt
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    ax1.plot(trace.t * 1e3, v)
    ax1.set_ylabel("V at recording site (mV)")
    picks = np.linspace(0, cfg.grid.n_compartments - 1, 9, dtype=int)
    for c in picks:
        ax2.plot(trace.t * 1e3, trace.v[:, c], lw=0.7)
    ax2.set_xlabel("t (ms)")
    ax2.set_ylabel("V along the fiber (mV)")
    fig.tight_layout()
    fig.savefig("ap_trace.png", dpi=120)
    print("wrote ap_trace.png")
