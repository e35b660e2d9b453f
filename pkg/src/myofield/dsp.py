"""Signal-analysis pipeline: bandpass, STFT spectrogram, ASD, SNR.

Mirrors the processing applied to measured magnetomyograms: a zero-phase
Butterworth bandpass (30-300 Hz defaults), a Hann-window short-time Fourier
magnitude map, a Welch-averaged one-sided amplitude spectral density in
units per sqrt(Hz), and an in-band RMS signal-to-noise ratio.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal as _signal

from .errors import DomainError, ParamError, UndefinedSnrError
from .params import DspSettings


@dataclass
class SignalTrace:
    """Uniformly sampled scalar time series (tesla or volts)."""

    samples: np.ndarray
    sample_rate: float
    label: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1 or self.samples.size < 2:
            raise ParamError("need a 1-D series with at least 2 samples")
        if not self.sample_rate > 0:
            raise ParamError("sample rate must be > 0")

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


def bandpass(trace: SignalTrace, f_lo: float = 30.0, f_hi: float = 300.0,
             order: int = 4) -> SignalTrace:
    """Zero-phase (forward-backward) Butterworth bandpass.

    Requires 0 < f_lo < f_hi < Nyquist. The forward-backward pass doubles
    the attenuation and cancels the phase, so symmetric pulses keep their
    center of symmetry.
    """
    nyq = trace.sample_rate / 2.0
    if not 0.0 < f_lo < f_hi < nyq:
        raise DomainError(
            f"need 0 < f_lo < f_hi < Nyquist = {nyq:g} Hz, got "
            f"[{f_lo:g}, {f_hi:g}]")
    if order < 1:
        raise DomainError("filter order must be >= 1")
    sos = _signal.butter(order, [f_lo, f_hi], btype="bandpass",
                         fs=trace.sample_rate, output="sos")
    filtered = _signal.sosfiltfilt(sos, trace.samples)
    return SignalTrace(filtered, trace.sample_rate,
                       label=f"{trace.label}|bp{f_lo:g}-{f_hi:g}")


@dataclass
class Spectrogram:
    """STFT magnitude map: times (s), frequencies (Hz), |X| matrix."""

    t: np.ndarray
    f: np.ndarray
    magnitude: np.ndarray     # (n_freq, n_frames)
    window: int
    hop: int


def spectrogram(trace: SignalTrace, window: int = 256,
                hop: int = 128) -> Spectrogram:
    """Hann-window short-time Fourier magnitude of the trace.

    Frames start at multiples of hop; each is window samples long. The
    magnitude keeps the plain rfft scaling so Parseval bookkeeping against
    the time-domain energy only needs the window/hop correction factor.
    """
    x = trace.samples
    if window > x.size:
        raise DomainError(f"window {window} exceeds trace length {x.size}")
    if hop < 1:
        raise DomainError("hop must be >= 1")
    win = np.hanning(window)
    n_frames = 1 + (x.size - window) // hop
    idx = np.arange(window)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = x[idx] * win[None, :]
    mag = np.abs(np.fft.rfft(frames, axis=1)).T
    t = (hop * np.arange(n_frames) + window / 2.0) / trace.sample_rate
    f = np.fft.rfftfreq(window, 1.0 / trace.sample_rate)
    return Spectrogram(t=t, f=f, magnitude=mag, window=window, hop=hop)


def amplitude_spectral_density(trace: SignalTrace, segment: int = 1024,
                               overlap: float = 0.5):
    """Welch-averaged one-sided amplitude spectral density.

    Returns (frequencies Hz, ASD in input-units per sqrt(Hz)). The PSD is
    density-scaled, so white noise of variance sigma^2 gives a flat ASD of
    sigma/sqrt(f_Nyquist) and Parseval holds: integral of ASD^2 df equals
    the signal variance.
    """
    x = trace.samples
    if x.size < 256:
        raise DomainError("ASD needs at least 256 samples")
    nper = int(min(segment, x.size))
    f, psd = _signal.welch(x, fs=trace.sample_rate, window="hann",
                           nperseg=nper, noverlap=int(nper * overlap),
                           detrend=False, scaling="density")
    return f, np.sqrt(psd)


def band_rms(trace: SignalTrace, f_lo: float, f_hi: float,
             order: int = 4) -> float:
    """RMS of the trace restricted to [f_lo, f_hi] by zero-phase bandpass."""
    filtered = bandpass(trace, f_lo, f_hi, order)
    return float(np.sqrt(np.mean(filtered.samples ** 2)))


def snr_estimate(sig: SignalTrace, noise: SignalTrace,
                 band: tuple = (30.0, 300.0)) -> float:
    """In-band RMS ratio of signal trace to noise trace (dimensionless)."""
    if sig.sample_rate != noise.sample_rate:
        raise DomainError("signal and noise traces must share a sample rate")
    f_lo, f_hi = band
    rms_n = band_rms(noise, f_lo, f_hi)
    if rms_n == 0.0:
        raise UndefinedSnrError("noise trace has zero in-band RMS")
    return band_rms(sig, f_lo, f_hi) / rms_n


def from_settings(trace: SignalTrace, settings: DspSettings) -> SignalTrace:
    """Apply the configured default bandpass."""
    return bandpass(trace, settings.band_lo, settings.band_hi,
                    settings.filter_order)


# ---------------------------------------------------------------------------
# CSV I/O

def load_trace_csv(path) -> SignalTrace:
    """Read `t_s,value` CSV; the time column must be uniform."""
    path = Path(path)
    t, v = [], []
    with open(path) as fh:
        header = fh.readline().strip().replace(" ", "")
        if header != "t_s,value":
            raise ParamError(f"{path}:1: expected header 't_s,value', "
                             f"got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ParamError(f"{path}:{lineno}: expected 2 fields")
            try:
                t.append(float(parts[0]))
                v.append(float(parts[1]))
            except ValueError as exc:
                raise ParamError(f"{path}:{lineno}: {exc}") from None
    t = np.asarray(t)
    if t.size < 2:
        raise ParamError(f"{path}: need at least 2 samples")
    dt = np.diff(t)
    if np.abs(dt - dt[0]).max() > 1e-6 * abs(dt[0]):
        raise ParamError(f"{path}: time axis is not uniform")
    return SignalTrace(np.asarray(v), 1.0 / dt[0], label=path.stem)


def save_trace_csv(trace: SignalTrace, path):
    with open(path, "w") as fh:
        fh.write("t_s,value\n")
        for ti, vi in zip(trace.t, trace.samples):
            fh.write("%.17g,%.17g\n" % (ti, vi))


def save_spectrogram_csv(spec: Spectrogram, path):
    """Long-form CSV: t_s,f_hz,magnitude."""
    with open(path, "w") as fh:
        fh.write("t_s,f_hz,magnitude\n")
        for j, tj in enumerate(spec.t):
            for i, fi in enumerate(spec.f):
                fh.write("%.17g,%.17g,%.17g\n" % (tj, fi, spec.magnitude[i, j]))


def save_asd_csv(f: np.ndarray, asd: np.ndarray, path):
    with open(path, "w") as fh:
        fh.write("f_hz,asd\n")
        for fi, ai in zip(f, asd):
            fh.write("%.17g,%.17g\n" % (fi, ai))
