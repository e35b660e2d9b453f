"""Command-line front end: run the pipeline stages and emit plot-ready CSV.

Exit codes: 0 success, 2 usage, 3 validation, 4 numerical failure. Every
run writes a manifest JSON recording the resolved-config hash, the argv,
and every output file, so a run can be reproduced from its manifest.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import biotsavart, cable, dsp, fieldsolver
from .errors import (ConfigError, DomainError, EstimationError,
                     IntegrationError, MyofieldError, OverflowRangeError,
                     ParamError, SingularityError, SolverError,
                     UndefinedSnrError, WindowingError)
from .params import (Config, SimulationGrid, SolverSettings,
                     load_config, parse_quantity, serialize_config)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4

_VALIDATION_ERRORS = (ParamError, ConfigError, DomainError, WindowingError)
_NUMERICAL_ERRORS = (SolverError, IntegrationError, EstimationError,
                     SingularityError, UndefinedSnrError, OverflowRangeError,
                     np.linalg.LinAlgError)


def _load(args) -> Config:
    if args.config:
        return load_config(args.config)
    return Config()


def _write_manifest(args, cfg: Config, outputs, out_dir: Path, name: str):
    manifest = {
        "tool": "myofield",
        "version": __version__,
        "subcommand": args.command,
        "argv": list(args.effective_argv),
        "config_path": str(args.config) if args.config else None,
        "config_hash": hashlib.sha256(
            serialize_config(cfg).encode()).hexdigest(),
        "outputs": [str(p) for p in outputs],
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    path = out_dir / name
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _grid_with_overrides(grid: SimulationGrid, args) -> SimulationGrid:
    changes = {}
    if getattr(args, "duration", None) is not None:
        changes["duration"] = parse_quantity(args.duration, "time", "--duration")
    if getattr(args, "dt", None) is not None:
        changes["dt"] = parse_quantity(args.dt, "time", "--dt")
    return replace(grid, **changes) if changes else grid


def _settings_with_overrides(settings: SolverSettings, args) -> SolverSettings:
    changes = {}
    if getattr(args, "g_syn_max", None) is not None:
        changes["g_syn_max"] = parse_quantity(args.g_syn_max, "conductance",
                                              "--g-syn-max")
    if getattr(args, "modes", None) is not None:
        changes["modes"] = args.modes
    return replace(settings, **changes) if changes else settings


def _simulate(cfg: Config, grid, settings) -> cable.APTrace:
    return cable.simulate_fiber(cfg.params, grid, settings)


def _ap_summary(trace: cable.APTrace, u: float) -> str:
    site = trace.recording_site()
    v = trace.v[:, site]
    rest = v[0]
    peak = v.max()
    if peak < -40.0:
        return f"no AP (peak V = {peak:.2f} mV, rest = {rest:.2f} mV)"
    undershoot = rest - v[v.argmax():].min()
    try:
        vel = cable.conduction_velocity(trace)
        vel_s = f"{vel:.2f} m/s (imposed u = {u:.2f} m/s)"
    except EstimationError as exc:
        vel_s = f"unavailable ({exc})"
    return (f"rest = {rest:.2f} mV, peak = {peak:.2f} mV, undershoot = "
            f"{undershoot:.3f} mV, velocity = {vel_s}")


def _cmd_simulate_ap(args) -> int:
    cfg = _load(args)
    grid = _grid_with_overrides(cfg.grid, args)
    settings = _settings_with_overrides(cfg.solver, args)
    out = _out_dir(args)
    trace = _simulate(cfg, grid, settings)
    ap_path = out / "ap_trace.csv"
    cable.export_ap_csv(trace, ap_path)
    print(_ap_summary(trace, cfg.params.u))
    _write_manifest(args, cfg, [ap_path], out, "simulate-ap.manifest.json")
    return EXIT_OK


def _resolve_spectrum(cfg: Config, grid, settings, source: str):
    if source == "simulated":
        trace = _simulate(cfg, grid, settings)
        return fieldsolver.membrane_potential_spectrum(
            trace, cfg.params, grid, settings)
    profile = fieldsolver.gaussian_template_profile(grid)
    return fieldsolver.membrane_potential_spectrum(
        profile, cfg.params, grid, settings)


def _cmd_compute_field(args) -> int:
    cfg = _load(args)
    grid = _grid_with_overrides(cfg.grid, args)
    settings = _settings_with_overrides(cfg.solver, args)
    out = _out_dir(args)
    rho = None
    if args.rho is not None:
        rho = parse_quantity(args.rho, "length", "--rho")
    spectrum = _resolve_spectrum(cfg, grid, settings, args.ap_source)
    field = fieldsolver.total_field(spectrum, cfg.params, rho,
                                    settings.modes, settings)
    trace = fieldsolver.spatial_field(field)
    outputs = []
    spath = out / "field_spectral.csv"
    fieldsolver.export_spectral_csv(field, spath)
    outputs.append(spath)
    tpath = out / "field_trace.csv"
    fieldsolver.export_trace_csv(trace, tpath)
    outputs.append(tpath)
    if args.components:
        comps = {"B_i": field.b_fiber, "B_b": field.b_bundle,
                 "B_s": field.b_sheath, "B_e": field.b_saline,
                 "B_total": field.b_total}
        order = np.argsort(field.k)
        for name, arr in comps.items():
            cpath = out / f"field_component_{name}.csv"
            with open(cpath, "w") as fh:
                fh.write(f"k_rad_per_m,{name}_re,{name}_im\n")
                for j in order:
                    fh.write("%.17g,%.17g,%.17g\n"
                             % (field.k[j], arr[j].real, arr[j].imag))
            outputs.append(cpath)
    print(f"peak |B_total| = {trace.peak():.4e} T at rho = "
          f"{field.rho * 1e6:.1f} um (solve residual "
          f"{field.meta['residual']:.2e})")
    _write_manifest(args, cfg, outputs, out, "compute-field.manifest.json")
    return EXIT_OK


class _UsageError(Exception):
    pass


def _parse_sweep_values(axis: str, text: str):
    items = [s for s in (x.strip() for x in text.split(",")) if s]
    if not items:
        raise _UsageError("--values must contain at least one value")
    dim = "dimensionless" if axis == "ratio" else "length"
    return [parse_quantity(s, dim, "--values") for s in items]


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    grid = _grid_with_overrides(cfg.grid, args)
    settings = _settings_with_overrides(cfg.solver, args)
    out = _out_dir(args)
    values = _parse_sweep_values(args.axis, args.values)
    spectrum = _resolve_spectrum(cfg, grid, settings, args.ap_source)
    result = fieldsolver.sweep(spectrum, cfg.params, args.axis, values,
                               settings.modes, settings)
    path = out / f"sweep_{args.axis}.csv"
    fieldsolver.export_sweep_csv(result, path)
    for v, pk in zip(result.values, result.peak_total):
        print(f"{args.axis} = {v:.6g}: peak |B_total| = {pk:.4e} T")
    _write_manifest(args, cfg, [path], out, "sweep.manifest.json")
    return EXIT_OK


def _cmd_biot_savart(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    conductors = biotsavart.load_conductors_csv(args.conductors)
    coords = [s.strip() for s in args.point.split(",")]
    if len(coords) != 3:
        raise ParamError("--point needs three comma-separated coordinates")
    point = [parse_quantity(s, "length", "--point") for s in coords]
    field = biotsavart.biot_savart_quadrature(conductors, point)
    print("B = (%.6e, %.6e, %.6e) T, |B| = %.6e T"
          % (field[0], field[1], field[2], np.linalg.norm(field)))
    path = out / "bs_field.csv"
    with open(path, "w") as fh:
        fh.write("x_m,y_m,z_m,Bx_T,By_T,Bz_T\n")
        fh.write(",".join("%.17g" % v for v in (*point, *field)) + "\n")
    _write_manifest(args, cfg, [path], out, "biot-savart.manifest.json")
    return EXIT_OK


def _cmd_filter(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    trace = dsp.load_trace_csv(args.trace)
    lo = parse_quantity(args.lo, "frequency", "--lo") if args.lo is not None \
        else cfg.dsp.band_lo
    hi = parse_quantity(args.hi, "frequency", "--hi") if args.hi is not None \
        else cfg.dsp.band_hi
    filtered = dsp.bandpass(trace, lo, hi, args.order or cfg.dsp.filter_order)
    path = out / "filtered.csv"
    dsp.save_trace_csv(filtered, path)
    print(f"bandpass {lo:g}-{hi:g} Hz: RMS {np.sqrt(np.mean(trace.samples**2)):.4e}"
          f" -> {np.sqrt(np.mean(filtered.samples**2)):.4e}")
    _write_manifest(args, cfg, [path], out, "filter.manifest.json")
    return EXIT_OK


def _cmd_spectrogram(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    trace = dsp.load_trace_csv(args.trace)
    spec = dsp.spectrogram(trace, args.window or cfg.dsp.stft_window,
                           args.hop or cfg.dsp.stft_hop)
    path = out / "spectrogram.csv"
    dsp.save_spectrogram_csv(spec, path)
    print(f"spectrogram: {spec.magnitude.shape[1]} frames x "
          f"{spec.magnitude.shape[0]} bins")
    _write_manifest(args, cfg, [path], out, "spectrogram.manifest.json")
    return EXIT_OK


def _cmd_asd(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    trace = dsp.load_trace_csv(args.trace)
    f, asd = dsp.amplitude_spectral_density(
        trace, args.segment or cfg.dsp.welch_segment,
        cfg.dsp.welch_overlap)
    path = out / "asd.csv"
    dsp.save_asd_csv(f, asd, path)
    print(f"ASD: {f.size} bins up to {f[-1]:g} Hz")
    _write_manifest(args, cfg, [path], out, "asd.manifest.json")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="myofield",
        description="Forward simulator for skeletal-muscle magnetic fields")
    parser.add_argument("--config", help="JSON config file (see README)")
    parser.add_argument("--out-dir", default="myofield_out",
                        help="directory for CSV outputs and manifests")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-ap", help="run the cable model, export V(t)")
    p.add_argument("--g-syn-max", help="synaptic conductance, e.g. '10uS'")
    p.add_argument("--duration", help="simulated time, e.g. '30ms'")
    p.add_argument("--dt", help="time step, e.g. '5us'")
    p.set_defaults(func=_cmd_simulate_ap)

    p = sub.add_parser("compute-field", help="solve the four-region field")
    p.add_argument("--ap-source", choices=("simulated", "analytic-template"),
                   default="simulated")
    p.add_argument("--rho", help="evaluation radius, e.g. '190um'")
    p.add_argument("--components", action="store_true",
                   help="also write per-component spectral CSVs")
    p.add_argument("--modes", type=int, help="azimuthal mode cutoff M")
    p.add_argument("--g-syn-max")
    p.add_argument("--duration")
    p.add_argument("--dt")
    p.set_defaults(func=_cmd_compute_field)

    p = sub.add_parser("sweep", help="peak |B| vs distance/ratio/offset")
    p.add_argument("--axis", required=True,
                   choices=("distance", "ratio", "offset"))
    p.add_argument("--values", required=True,
                   help="comma list, e.g. '30um,60um,120um' or '1,2,5,10'")
    p.add_argument("--ap-source", choices=("simulated", "analytic-template"),
                   default="simulated")
    p.add_argument("--modes", type=int)
    p.add_argument("--g-syn-max")
    p.add_argument("--duration")
    p.add_argument("--dt")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("biot-savart", help="field of a conductor set")
    p.add_argument("conductors", help="CSV with header x0,y0,z0,x1,y1,z1,I_A")
    p.add_argument("--point", required=True, help="x,y,z (e.g. '0,1mm,0')")
    p.set_defaults(func=_cmd_biot_savart)

    p = sub.add_parser("filter", help="zero-phase Butterworth bandpass")
    p.add_argument("trace", help="CSV with header t_s,value")
    p.add_argument("--lo")
    p.add_argument("--hi")
    p.add_argument("--order", type=int)
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("spectrogram", help="STFT magnitude map")
    p.add_argument("trace")
    p.add_argument("--window", type=int)
    p.add_argument("--hop", type=int)
    p.set_defaults(func=_cmd_spectrogram)

    p = sub.add_parser("asd", help="Welch amplitude spectral density")
    p.add_argument("trace")
    p.add_argument("--segment", type=int)
    p.set_defaults(func=_cmd_asd)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.effective_argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except MyofieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
