import numpy as np
import pytest

from myofield.dsp import (SignalTrace, amplitude_spectral_density, band_rms,
                          bandpass, load_trace_csv, save_trace_csv,
                          snr_estimate, spectrogram)
from myofield.errors import DomainError, ParamError, UndefinedSnrError

from oracles import analog_butter_bandpass_gain

FS = 2000.0


def _tone(freq, amp=1.0, seconds=4.0, fs=FS):
    t = np.arange(int(seconds * fs)) / fs
    return SignalTrace(amp * np.sin(2 * np.pi * freq * t), fs)


# -- bandpass -------------------------------------------------------------------

def test_passband_tone_preserved_within_one_percent():
    out = bandpass(_tone(100.0), 30.0, 300.0, 4)
    mid = slice(2000, -2000)        # ignore filter edge transients
    got = np.abs(out.samples[mid]).max()
    expected = analog_butter_bandpass_gain(100.0, 30.0, 300.0, 4)
    assert got == pytest.approx(expected, rel=0.01)
    assert got == pytest.approx(1.0, rel=0.01)


def test_stopband_tone_attenuated_40db():
    out = bandpass(_tone(1.0, seconds=8.0), 30.0, 300.0, 4)
    mid = slice(4000, -4000)
    got = np.sqrt(2.0) * np.sqrt(np.mean(out.samples[mid] ** 2))
    assert got <= 10 ** (-40.0 / 20.0)
    # oracle says the analog prototype already buries it far below -40 dB
    assert analog_butter_bandpass_gain(1.0, 30.0, 300.0, 4) < 1e-2


def test_zero_signal_passes_through_zero():
    tr = SignalTrace(np.zeros(4096), FS)
    assert np.all(bandpass(tr).samples == 0.0)


def test_band_validation():
    with pytest.raises(DomainError):
        bandpass(_tone(100.0), 300.0, 30.0)
    with pytest.raises(DomainError):
        bandpass(_tone(100.0), 30.0, 1200.0)    # above Nyquist
    with pytest.raises(DomainError):
        bandpass(_tone(100.0), 0.0, 300.0)


def test_zero_phase_preserves_symmetric_pulse_center():
    n = 8192
    t = np.arange(n) / FS
    center = n // 2
    pulse = np.exp(-0.5 * ((t - t[center]) / 0.02) ** 2)
    out = bandpass(SignalTrace(pulse, FS), 30.0, 300.0, 4)
    # the filtered pulse is oscillatory; its envelope must stay centered
    energy = out.samples ** 2
    centroid = float((np.arange(n) * energy).sum() / energy.sum())
    assert abs(centroid - center) <= 1.0


def test_energy_never_amplified():
    rng = np.random.default_rng(0)
    x = SignalTrace(rng.normal(size=16384), FS)
    out = bandpass(x, 30.0, 300.0, 4)
    assert np.sum(out.samples ** 2) <= np.sum(x.samples ** 2)


# -- spectrogram -------------------------------------------------------------------

def test_constant_signal_dc_only():
    # Hann windowing smears a constant into bins 0-1; everything above is
    # residual leakage orders of magnitude down
    tr = SignalTrace(np.full(4096, 2.5), FS)
    spec = spectrogram(tr, window=256, hop=128)
    m = spec.magnitude
    assert np.all(m[0] > 0)
    assert np.all(m.argmax(axis=0) == 0)
    energy = m[0] ** 2 + 2 * (m[1:] ** 2).sum(axis=0)
    dc_pair = m[0] ** 2 + 2 * m[1] ** 2
    assert np.all(dc_pair / energy > 0.9999)
    assert m[2:].max() <= 2e-3 * m[0].min()


def test_tone_ridge_at_nearest_bin():
    tr = _tone(100.0)
    spec = spectrogram(tr, window=256, hop=128)
    target = np.argmin(np.abs(spec.f - 100.0))
    ridge = spec.magnitude.argmax(axis=0)
    inner = ridge[2:-2]
    assert np.all(np.abs(inner - target) <= 1)


def test_chirp_monotone_ridge():
    fs = FS
    t = np.arange(int(8 * fs)) / fs
    f0, f1 = 30.0, 300.0
    phase = 2 * np.pi * (f0 * t + (f1 - f0) * t ** 2 / (2 * t[-1]))
    tr = SignalTrace(np.sin(phase), fs)
    spec = spectrogram(tr, window=512, hop=256)
    ridge_hz = spec.f[spec.magnitude.argmax(axis=0)]
    inner = ridge_hz[1:-1]
    diffs = np.diff(inner)
    assert np.all(diffs >= -(spec.f[1] - spec.f[0]))   # rising up to bin width
    assert inner[-1] > inner[0] + 200.0


def test_spectrogram_parseval_consistency():
    rng = np.random.default_rng(1)
    window, hop = 256, 128
    n = 2 ** 14
    tr = SignalTrace(rng.normal(size=n), FS)
    spec = spectrogram(tr, window=window, hop=hop)
    win = np.hanning(window)
    # per-frame Parseval for rfft: ||x w||^2 = (|X_0|^2 + 2 sum + |X_nyq|^2)/W
    m = spec.magnitude ** 2
    frame_energy = (m[0] + 2 * m[1:-1].sum(axis=0) + m[-1]) / window
    stft_energy = frame_energy.sum()
    # overlapping Hann frames tile the series with gain sum(w^2)/hop
    n_frames = spec.magnitude.shape[1]
    covered = tr.samples[:(n_frames - 1) * hop + window]
    expected = np.sum(covered ** 2) * np.sum(win ** 2) / hop
    assert stft_energy == pytest.approx(expected, rel=0.01)


def test_window_longer_than_trace_rejected():
    with pytest.raises(DomainError):
        spectrogram(SignalTrace(np.zeros(128), FS), window=256)


# -- ASD -----------------------------------------------------------------------------

def test_white_noise_asd_level():
    rng = np.random.default_rng(2)
    sigma = 3.0e-12
    tr = SignalTrace(rng.normal(scale=sigma, size=2 ** 16), FS)
    f, asd = amplitude_spectral_density(tr)
    inner = (f > 50) & (f < 900)
    expected = sigma / np.sqrt(FS / 2.0)
    assert np.mean(asd[inner]) == pytest.approx(expected, rel=0.10)


def test_tone_peak_location():
    f, asd = amplitude_spectral_density(_tone(100.0, seconds=8.0))
    assert abs(f[asd.argmax()] - 100.0) <= f[1] - f[0]


def test_zero_signal_zero_asd():
    tr = SignalTrace(np.zeros(4096), FS)
    f, asd = amplitude_spectral_density(tr)
    assert np.all(asd == 0.0)


def test_asd_needs_samples():
    with pytest.raises(DomainError):
        amplitude_spectral_density(SignalTrace(np.zeros(100), FS))


# -- SNR ------------------------------------------------------------------------------

def test_snr_identical_traces():
    tr = _tone(100.0, amp=5e-12)
    assert snr_estimate(tr, tr) == pytest.approx(1.0)


def test_snr_scaling():
    rng = np.random.default_rng(3)
    noise = SignalTrace(rng.normal(scale=1e-12, size=2 ** 14), FS)
    sig = SignalTrace(10.0 * noise.samples, FS)
    assert snr_estimate(sig, noise) == pytest.approx(10.0, rel=1e-9)


def test_snr_synthetic_200pT_over_20pT():
    rng = np.random.default_rng(4)
    n = 2 ** 16
    t = np.arange(n) / FS
    raw = rng.normal(size=n)
    noise = SignalTrace(raw, FS)
    scale = 20e-12 / band_rms(noise, 30.0, 300.0)
    noise = SignalTrace(scale * raw, FS)          # 20 pT in-band RMS floor
    tone_rms = 200e-12
    sig = SignalTrace(tone_rms * np.sqrt(2.0) * np.sin(2 * np.pi * 120.0 * t),
                      FS)
    snr = snr_estimate(sig, noise, band=(30.0, 300.0))
    assert snr == pytest.approx(10.0, rel=0.05)


def test_snr_errors():
    tr = _tone(100.0)
    other = SignalTrace(tr.samples, 2 * FS)
    with pytest.raises(DomainError):
        snr_estimate(tr, other)
    zero = SignalTrace(np.zeros(8192), FS)
    with pytest.raises(UndefinedSnrError):
        snr_estimate(tr, zero)


# -- CSV ---------------------------------------------------------------------------

def test_trace_csv_round_trip(tmp_path):
    tr = _tone(50.0, amp=2e-12, seconds=0.5)
    path = tmp_path / "trace.csv"
    save_trace_csv(tr, path)
    back = load_trace_csv(path)
    assert back.sample_rate == pytest.approx(tr.sample_rate)
    assert np.allclose(back.samples, tr.samples, rtol=0, atol=0)


def test_trace_csv_diagnostics(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t_s,value\n0.0,1.0\nnot,numbers\n")
    with pytest.raises(ParamError) as err:
        load_trace_csv(p)
    assert ":3:" in str(err.value)
    p2 = tmp_path / "hdr.csv"
    p2.write_text("time,volts\n0,1\n")
    with pytest.raises(ParamError):
        load_trace_csv(p2)


def test_trace_validation():
    with pytest.raises(ParamError):
        SignalTrace(np.zeros(1), FS)
    with pytest.raises(ParamError):
        SignalTrace(np.zeros(10), 0.0)
