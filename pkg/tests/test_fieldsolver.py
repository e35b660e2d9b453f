import numpy as np
import pytest
from dataclasses import replace

from myofield import fieldsolver as fs
from myofield.bessel import bessel_i_scaled, bessel_k_scaled
from myofield.errors import DomainError, ParamError, SolverError, WindowingError
from myofield.params import PhysicalParams, SimulationGrid, SolverSettings

from oracles import gaussian_transform, single_fiber_field

mp = pytest.importorskip("mpmath")
mp.mp.dps = 40

P = PhysicalParams()
GRID = SimulationGrid()
SET = SolverSettings()


# -- anisotropy transform -----------------------------------------------------

def test_anisotropy_transform():
    assert fs.anisotropy_transform(1.0, 3.3, 3.3) == pytest.approx(1.0)
    assert fs.anisotropy_transform(1.0, 4.0, 1.0) == pytest.approx(2.0)
    assert fs.anisotropy_transform(10e-6, 2.5, 1.0) == pytest.approx(
        10e-6 * np.sqrt(2.5), rel=1e-15)
    with pytest.raises(DomainError):
        fs.anisotropy_transform(1.0, -1.0, 1.0)


# -- spectra -------------------------------------------------------------------

def test_zero_profile_gives_zero_spectrum():
    spec = fs.membrane_potential_spectrum(np.zeros(GRID.n_z), P, GRID, SET)
    assert np.all(spec.values == 0)


def test_cosine_profile_two_bins():
    z = np.arange(GRID.n_z) * GRID.dz
    k0 = 2 * np.pi * 8 / GRID.length_z       # exactly on-grid
    spec = fs.membrane_potential_spectrum(np.cos(k0 * z), P, GRID, SET)
    mag = np.abs(spec.values)
    big = mag > 1e-9 * mag.max()
    assert big.sum() == 2
    expected = 0.5 * GRID.length_z
    assert mag[big] == pytest.approx([expected, expected], rel=1e-9)


def test_gaussian_profile_matches_analytic_transform():
    width, amp = 1.2e-3, 0.08
    z0 = 0.5 * GRID.length_z
    z = np.arange(GRID.n_z) * GRID.dz
    prof = amp * np.exp(-0.5 * ((z - z0) / width) ** 2)
    spec = fs.membrane_potential_spectrum(prof, P, GRID, SET)
    ref = gaussian_transform(spec.k, amp, width, z0)
    keep = np.abs(ref) > 1e-6 * np.abs(ref).max()
    rel = np.abs(spec.values[keep] - ref[keep]) / np.abs(ref[keep])
    assert rel.max() < 1e-6


def test_profile_length_checked():
    with pytest.raises(ParamError):
        fs.membrane_potential_spectrum(np.zeros(17), P, GRID, SET)


def test_traveling_wave_mapping(ap_spectrum):
    ap_spectrum.check_hermitian()
    assert ap_spectrum.meta["mapping"] == "z = u*t"
    assert ap_spectrum.meta["support_m"] < 0.8 * GRID.length_z
    # physically sized source: tens of mV over mm scales -> |phi(k)| in V m
    assert 1e-8 < np.abs(ap_spectrum.values).max() < 1e-2


def test_windowing_error_when_window_too_short(cfg, ap_trace):
    small = replace(cfg.grid, n_z=4096, length_z=0.01)
    with pytest.raises(WindowingError):
        fs.membrane_potential_spectrum(ap_trace, cfg.params, small, cfg.solver)


def test_round_trip_transform():
    rng = np.random.default_rng(3)
    x = rng.normal(size=512)
    k, spec = fs.forward_transform(x, 1e-5)
    back = fs.inverse_transform(spec, 1e-5)
    assert np.abs(back.real - x).max() < 1e-10 * np.abs(x).max()
    assert np.abs(back.imag).max() < 1e-12


# -- boundary system -----------------------------------------------------------

def test_system_size_m0():
    mat, rhs = fs.assemble_boundary_system(1e3, PhysicalParams(d=0.0),
                                           m_cutoff=0)
    assert mat.shape == (6, 6) and rhs.shape == (6,)


def test_k_zero_rejected():
    with pytest.raises(DomainError):
        fs.assemble_boundary_system(0.0, P)


def test_concentric_modes_decouple():
    p0 = PhysicalParams(d=0.0)
    mat, rhs = fs.assemble_boundary_system(2e3, p0, m_cutoff=4)
    x = np.linalg.solve(mat, rhs)
    n1 = 5
    for fam in range(6):
        block = x[fam * n1:(fam + 1) * n1]
        assert np.abs(block[1:]).max() < 1e-25 * max(np.abs(block[0]), 1e-30)
    # m > 0 rows have zero right-hand side
    assert np.all(rhs[1:n1] == 0)


def test_substitute_back_residual_random_params():
    rng = np.random.default_rng(11)
    for _ in range(10):
        a = rng.uniform(1e-5, 6e-5)
        b = rng.uniform(a + 2e-5, 3e-4)
        d = rng.uniform(0.0, b - a)
        c = b + rng.uniform(5e-6, 5e-5)
        p = PhysicalParams(a=a, b=b, c=c, d=d,
                           sigma_i=rng.uniform(0.2, 2.0),
                           sigma_s=rng.uniform(0.5, 5.0),
                           sigma_z=rng.uniform(0.5, 8.0),
                           sigma_rho=rng.uniform(0.2, 5.0),
                           sigma_e=rng.uniform(0.5, 5.0))
        mat, rhs = fs.assemble_boundary_system(1e3, p, m_cutoff=6)
        x = np.linalg.solve(mat, rhs)
        assert fs.substitute_back_residual(mat, rhs, x) < 1e-10


# -- coefficients ---------------------------------------------------------------

def test_zero_spectrum_zero_coefficients(template_spectrum):
    zero = fs.PotentialSpectrum(k=template_spectrum.k,
                                values=np.zeros_like(template_spectrum.values),
                                n_z=template_spectrum.n_z,
                                dz=template_spectrum.dz, meta={})
    coeffs = fs.solve_coefficients(zero, P, 4)
    assert np.all(coeffs.scaled == 0)


def test_coefficients_scale_linearly(template_spectrum):
    c1 = fs.solve_coefficients(template_spectrum, P, 4)
    doubled = fs.PotentialSpectrum(k=template_spectrum.k,
                                   values=2.0 * template_spectrum.values,
                                   n_z=template_spectrum.n_z,
                                   dz=template_spectrum.dz, meta={})
    c2 = fs.solve_coefficients(doubled, P, 4)
    assert np.allclose(c2.scaled, 2.0 * c1.scaled, rtol=1e-12, atol=0)


def test_mode_truncation_convergence(template_spectrum):
    peaks = {}
    for m in (6, 10):
        field = fs.total_field(template_spectrum, P, m_cutoff=m, settings=SET)
        peaks[m] = fs.spatial_field(field).peak()
    assert abs(peaks[6] - peaks[10]) / peaks[10] < 0.01


# -- field components -----------------------------------------------------------

def _mp_iv(n, x):
    return mp.besseli(n, mp.mpf(x))


def _mp_kv(n, x):
    return mp.besselk(n, mp.mpf(x))


def test_field_fiber_extended_precision_oracle(template_spectrum):
    coeffs = fs.solve_coefficients(template_spectrum, P, 6)
    rho = 2.1e-4
    rng = np.random.default_rng(5)
    ks = rng.choice(np.abs(coeffs.k[coeffs.k > 0]), size=5, replace=False)
    for k in ks:
        got = fs.field_fiber(float(k), P, coeffs, rho)
        j = np.nonzero(np.isclose(coeffs.k, k))[0][0]
        a0 = complex(coeffs.coefficient("a", 0)[j])
        beta = abs(k)
        ref = 1j * P.mu0 * P.sigma_i * k * P.a / (rho * beta) * a0 \
            * complex(_mp_iv(1, beta * P.a))
        assert got == pytest.approx(ref, rel=1e-10)


def test_field_bundle_term_by_term_oracle(template_spectrum):
    coeffs = fs.solve_coefficients(template_spectrum, P, 6)
    rho = 2.1e-4
    gam = np.sqrt(P.sigma_z / P.sigma_rho)
    rng = np.random.default_rng(6)
    ks = rng.choice(np.abs(coeffs.k[coeffs.k > 0]), size=5, replace=False)
    for k in ks:
        j = np.nonzero(np.isclose(coeffs.k, k))[0][0]
        kap = gam * abs(k)
        t = P.d
        b_n = [complex(coeffs.coefficient("b", n)[j]) for n in range(7)]
        c_n = [complex(coeffs.coefficient("c", n)[j]) for n in range(7)]
        eps = [1.0] + [2.0] * 6
        pref = 1j * P.mu0 * P.sigma_z * np.sqrt(P.sigma_rho / P.sigma_z) \
            * k / (rho * abs(k))
        # rigorous two-boundary flux form in extended precision
        c_ext = sum(eps[n] * c_n[n] * complex(_mp_iv(n, kap * t))
                    for n in range(7))
        b_int = sum(eps[n] * b_n[n] * complex(_mp_iv(n, kap * t))
                    for n in range(7))
        ref = pref * (
            P.b * (b_n[0] * complex(_mp_iv(1, kap * P.b))
                   - c_ext * complex(_mp_kv(1, kap * P.b)))
            - P.a * (b_int * complex(_mp_iv(1, kap * P.a))
                     - c_n[0] * complex(_mp_kv(1, kap * P.a))))
        got = fs.field_bundle(float(k), P, coeffs, rho)
        assert got == pytest.approx(ref, rel=1e-9)
        # three-way split plus cross term reassembles the bundle field
        terms = fs.field_bundle_terms(float(k), P, coeffs, rho)
        total = sum(terms.values())
        assert total == pytest.approx(got, rel=1e-9)


def test_field_bundle_isotropic_reduces_scale_factors(template_spectrum):
    iso = replace(P, sigma_rho=P.sigma_z)
    coeffs = fs.solve_coefficients(template_spectrum, iso, 4)
    k = float(np.abs(coeffs.k[5]))
    got = fs.field_bundle(k, iso, coeffs, 2.1e-4)
    assert np.isfinite(got.real) and np.isfinite(got.imag)
    assert fs.anisotropy_transform(1.0, iso.sigma_z, iso.sigma_rho) == 1.0


def test_zero_coefficients_zero_fields(template_spectrum):
    coeffs = fs.solve_coefficients(template_spectrum, P, 4)
    coeffs.scaled[:] = 0.0
    k = float(np.abs(coeffs.k[3]))
    assert fs.field_fiber(k, P, coeffs, 2e-4) == 0
    assert fs.field_bundle(k, P, coeffs, 2e-4) == 0
    assert fs.field_sheath(k, P, coeffs, 2e-4) == 0
    assert fs.field_saline(k, P, coeffs, 2e-4) == 0


def test_field_hermitian_parity(template_spectrum):
    coeffs = fs.solve_coefficients(template_spectrum, P, 6)
    k = float(np.abs(coeffs.k[17]))
    plus = fs.field_fiber(k, P, coeffs, 2e-4)
    minus = fs.field_fiber(-k, P, coeffs, 2e-4)
    assert minus == pytest.approx(np.conj(plus), rel=1e-12)


def test_saline_vanishes_at_inner_boundary(template_spectrum):
    coeffs = fs.solve_coefficients(template_spectrum, P, 6)
    k = float(np.abs(coeffs.k[9]))
    assert abs(fs.field_saline(k, P, coeffs, P.c)) \
        < 1e-12 * abs(fs.field_saline(k, P, coeffs, P.c + 50e-6))


def test_sheath_and_saline_much_smaller_than_bundle(template_spectrum):
    field = fs.total_field(template_spectrum, P, settings=SET)
    j = np.abs(field.b_total).argmax()     # spectrum peak of the field
    assert (np.abs(field.b_sheath[j]) + np.abs(field.b_saline[j])
            < np.abs(field.b_bundle[j]))
    # and for the assembled spatial components as well
    trace = fs.spatial_field(field)
    assert (np.abs(trace.components["sheath"]).max()
            + np.abs(trace.components["saline"]).max()
            < np.abs(trace.components["bundle"]).max())


# -- total field and traces ------------------------------------------------------

def test_components_sum_exactly(template_spectrum):
    field = fs.total_field(template_spectrum, P, settings=SET)
    lhs = field.b_total
    rhs = field.b_fiber + field.b_bundle + field.b_sheath + field.b_saline
    assert np.array_equal(lhs, rhs)


def test_zero_spectrum_zero_field(template_spectrum):
    zero = fs.PotentialSpectrum(k=template_spectrum.k,
                                values=np.zeros_like(template_spectrum.values),
                                n_z=template_spectrum.n_z,
                                dz=template_spectrum.dz, meta={})
    field = fs.total_field(zero, P, settings=SET)
    assert np.all(field.b_total == 0)


def test_total_field_linearity(template_spectrum):
    f1 = fs.total_field(template_spectrum, P, settings=SET)
    scale = np.abs(f1.b_total).max()
    alpha = 3.7
    scaled = fs.PotentialSpectrum(k=template_spectrum.k,
                                  values=alpha * template_spectrum.values,
                                  n_z=template_spectrum.n_z,
                                  dz=template_spectrum.dz, meta={})
    f2 = fs.total_field(scaled, P, settings=SET)
    assert np.abs(f2.b_total - alpha * f1.b_total).max() \
        <= 1e-12 * alpha * scale
    # additivity: field(a) + field(scaled a) = field((1 + alpha) a)
    summed = fs.PotentialSpectrum(
        k=template_spectrum.k,
        values=(1.0 + alpha) * template_spectrum.values,
        n_z=template_spectrum.n_z, dz=template_spectrum.dz, meta={})
    f3 = fs.total_field(summed, P, settings=SET)
    assert np.abs(f3.b_total - (f1.b_total + f2.b_total)).max() \
        <= 1e-12 * (1 + alpha) * scale


def test_default_peak_in_expected_window(template_spectrum):
    field = fs.total_field(template_spectrum, P, settings=SET)
    peak = fs.spatial_field(field).peak()
    assert 1e-12 < peak < 1e-8


def test_spatial_field_imag_residue_and_shape(template_spectrum):
    field = fs.total_field(template_spectrum, P, settings=SET)
    trace = fs.spatial_field(field)
    assert trace.meta["imag_residue"] < 1e-10
    # biphasic: lobes of both signs, comparable in size
    assert trace.b_total.min() < 0 < trace.b_total.max()
    assert min(-trace.b_total.min(), trace.b_total.max()) \
        > 0.2 * trace.peak()


def test_non_hermitian_input_rejected(template_spectrum):
    field = fs.total_field(template_spectrum, P, settings=SET)
    field.b_fiber[3] *= 1.5     # break the symmetry
    with pytest.raises(DomainError):
        fs.spatial_field(field)


def test_time_series_reparameterization(template_spectrum):
    field = fs.total_field(template_spectrum, P, settings=SET)
    space = fs.spatial_field(field)
    timed = fs.time_series_at_point(field, u=P.u)
    assert np.allclose(timed.axis, space.axis / P.u)
    assert np.array_equal(timed.b_total, space.b_total)
    with pytest.raises(DomainError):
        fs.time_series_at_point(field, u=0.0)


def test_homogeneous_limit_matches_single_fiber_oracle(template_spectrum):
    sig = P.sigma_i
    hom = replace(P, sigma_s=sig, sigma_z=sig, sigma_rho=sig, sigma_e=sig)
    rho = 2 * P.c
    field = fs.total_field(template_spectrum, hom, rho, 6, SET)
    got = fs.spatial_field(field)
    ref_k = np.zeros_like(field.b_total)
    n = template_spectrum.n_z
    live = template_spectrum.k != 0.0
    live[n // 2] = False
    ref_k[live] = single_fiber_field(
        template_spectrum.k[live], rho, P.a, sig, sig,
        bessel_i_scaled, bessel_k_scaled) * template_spectrum.values[live]
    ref = fs.inverse_transform(ref_k, template_spectrum.dz).real
    ref_peak = np.abs(ref).max()
    assert abs(got.peak() - ref_peak) / ref_peak < 0.01


def test_small_k_limit_vanishes():
    x, tab, _ = fs._solve_unit(P, 4, np.array([1e-4, 1e-3, 5e3]), None)
    g = fs._field_factors(P, 4, P.c + 30e-6, x, tab)
    total = np.abs(g["i"] + g["b"] + g["s"] + g["e"])
    assert total[0] < total[1] < 1e-6 * total[2]


def test_grid_convergence_on_doubling(cfg):
    peaks = {}
    for n_z in (4096, 8192):
        grid = replace(cfg.grid, n_z=n_z)
        prof = fs.gaussian_template_profile(grid, amplitude=0.1, width=1.0e-3)
        spec = fs.membrane_potential_spectrum(prof, P, grid, SET)
        field = fs.total_field(spec, P, settings=SET)
        peaks[n_z] = fs.spatial_field(field).peak()
    assert abs(peaks[4096] - peaks[8192]) / peaks[8192] < 0.005


# -- sweeps -----------------------------------------------------------------------

def test_single_value_sweep_matches_direct(template_spectrum):
    res = fs.sweep(template_spectrum, P, "distance", [30e-6], settings=SET)
    field = fs.total_field(template_spectrum, P, P.c + 30e-6, settings=SET)
    direct = fs.spatial_field(field).peak()
    assert res.peak_total[0] == pytest.approx(direct, rel=1e-12)


def test_distance_sweep_monotone(template_spectrum):
    res = fs.sweep(template_spectrum, P, "distance",
                   [30e-6, 60e-6, 120e-6], settings=SET)
    assert np.all(np.diff(res.peak_total) < 0)


def test_sweep_errors(template_spectrum):
    with pytest.raises(DomainError):
        fs.sweep(template_spectrum, P, "distance", [], settings=SET)
    with pytest.raises(DomainError):
        fs.sweep(template_spectrum, P, "bogus", [1.0], settings=SET)
    with pytest.raises(SolverError) as err:
        fs.sweep(template_spectrum, P, "offset", [0.0, 2e-4], settings=SET)
    assert "0.0002" in str(err.value)


def test_sweep_csv(tmp_path, template_spectrum):
    res = fs.sweep(template_spectrum, P, "ratio", [1.0, 5.0], settings=SET)
    path = tmp_path / "sweep.csv"
    fs.export_sweep_csv(res, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("ratio,peak_B_total_T")
    assert len(lines) == 3
