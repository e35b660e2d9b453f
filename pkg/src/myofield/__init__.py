"""Forward simulation of skeletal-muscle magnetic fields (magnetomyography).

The pipeline: a multi-compartment cable model produces the propagating
action potential; its transmembrane profile drives a four-region
(fiber / anisotropic bundle / sheath / saline) boundary-value solve in
spatial-frequency space; Biot-Savart estimators cover the line-conductor
view; a small DSP toolbox mirrors the measurement-side analysis.
"""

__version__ = "0.1.0"

from .params import (Config, DspSettings, FieldPoint, PhysicalParams,
                     SimulationGrid, SolverSettings, default_params,
                     load_config, preset_params, save_config,
                     serialize_config)
from .bessel import (bessel_i, bessel_i_prime, bessel_i_scaled, bessel_k,
                     bessel_k_prime, bessel_k_scaled)
from .cable import (APTrace, GatingParams, MembraneState, Stimulus,
                    axial_current, axial_resistance, conduction_velocity,
                    export_ap_csv, gating_steady_state, gating_time_constant,
                    ionic_current_density, relax_to_rest, simulate_fiber,
                    step_gating, synaptic_conductance, synaptic_current)
from .fieldsolver import (BoundaryCoefficients, FieldTrace, PotentialSpectrum,
                          SpectralField, SweepResult, anisotropy_transform,
                          assemble_boundary_system, field_bundle,
                          field_bundle_terms, field_fiber, field_saline,
                          field_sheath, gaussian_template_profile,
                          membrane_potential_spectrum, solve_coefficients,
                          spatial_field, substitute_back_residual, sweep,
                          time_series_at_point, total_field)
from .biotsavart import (CurrentSample, LineConductor, biot_savart_quadrature,
                         finite_line_field, load_conductors_csv,
                         magnetic_dipole_moment, transmembrane_ring_field,
                         vortex_source)
from .dsp import (SignalTrace, Spectrogram, amplitude_spectral_density,
                  band_rms, bandpass, load_trace_csv, save_trace_csv,
                  snr_estimate, spectrogram)

__all__ = [name for name in dir() if not name.startswith("_")]
