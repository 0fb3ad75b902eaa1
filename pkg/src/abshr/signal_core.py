"""Sample-level primitives: resampling, IIR lowpass design/application,
normalization, and WAV ingestion."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import signal
from scipy.io import wavfile


@dataclass(frozen=True)
class AudioSegment:
    """A uniformly sampled amplitude sequence with its rate and recording epoch."""

    samples: np.ndarray
    sample_rate_hz: float
    start_time_s: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain NaN or Inf")
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", samples)

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    def time_axis(self) -> np.ndarray:
        return self.start_time_s + np.arange(len(self.samples)) / self.sample_rate_hz


@dataclass(frozen=True)
class NormalizationStats:
    """Per-window mean and population standard deviation."""

    mean: float
    std_dev: float

    def __post_init__(self):
        if self.std_dev < 0:
            raise ValueError(f"std_dev must be nonnegative, got {self.std_dev}")


@dataclass(frozen=True)
class IirFilter:
    """Lowpass IIR filter as a cascade of second-order sections.

    For odd design orders one section is effectively first order (its
    trailing numerator/denominator coefficients are zero).
    """

    sections: np.ndarray  # (n_sections, 6) sos rows [b0 b1 b2 a0 a1 a2]
    order: int
    cutoff_hz: float
    sample_rate_hz: float

    def __post_init__(self):
        sos = np.asarray(self.sections, dtype=np.float64)
        if sos.ndim != 2 or sos.shape[1] != 6:
            raise ValueError(f"sections must have shape (n, 6), got {sos.shape}")
        object.__setattr__(self, "sections", sos)

    def is_stable(self) -> bool:
        """True when every section's poles are strictly inside the unit circle."""
        return self._pole_radius() < 1.0

    def _pole_radius(self) -> float:
        radius = 0.0
        for row in self.sections:
            poles = np.roots(row[3:])
            if len(poles):
                radius = max(radius, float(np.max(np.abs(poles))))
        return radius

    def settling_samples(self, tol: float = 1e-12) -> int:
        """Samples until the slowest pole's transient decays below tol."""
        radius = self._pole_radius()
        if radius <= 0.0:
            return 0
        if radius >= 1.0:
            raise ValueError("filter is unstable; its transient never settles")
        return int(np.ceil(np.log(tol) / np.log(radius)))

    def dc_gain(self) -> float:
        gain = 1.0
        for row in self.sections:
            gain *= row[:3].sum() / row[3:].sum()
        return gain

    def magnitude(self, freqs_hz) -> np.ndarray:
        """Single-pass magnitude response |H(f)| at the given frequencies."""
        w = 2.0 * np.pi * np.atleast_1d(np.asarray(freqs_hz, dtype=float)) / self.sample_rate_hz
        _, h = signal.sosfreqz(self.sections, worN=w)
        return np.abs(h)


def design_butterworth_lowpass(order: int, cutoff_hz: float, sample_rate_hz: float) -> IirFilter:
    """Design a digital Butterworth lowpass (bilinear transform, sos realization).

    The magnitude response is maximally flat with |H| = 1 at DC and
    1/sqrt(2) at the cutoff.
    """
    if int(order) != order or order < 1:
        raise ValueError(f"order must be a positive integer, got {order}")
    if sample_rate_hz <= 0:
        raise ValueError(f"sample_rate_hz must be positive, got {sample_rate_hz}")
    if not 0 < cutoff_hz < sample_rate_hz / 2:
        raise ValueError(
            f"cutoff {cutoff_hz} Hz must lie strictly between 0 and the "
            f"Nyquist frequency {sample_rate_hz / 2} Hz"
        )
    sos = signal.butter(int(order), cutoff_hz, btype="low", fs=sample_rate_hz, output="sos")
    filt = IirFilter(sections=sos, order=int(order), cutoff_hz=cutoff_hz, sample_rate_hz=sample_rate_hz)
    if not filt.is_stable():
        raise ValueError("designed filter is unstable; cutoff too close to Nyquist?")
    return filt


def filter_zero_phase(filt: IirFilter, segment: AudioSegment) -> AudioSegment:
    """Apply the cascade forward and backward (zero group delay).

    Peak timestamps downstream must not be skewed, so the filter runs in
    both directions; effective attenuation is |H|^2. The edge padding must
    outlive the slowest pole or the startup transient leaks inward and
    breaks the symmetry of the operator.
    """
    min_len = 3 * filt.order
    if segment.n_samples <= min_len:
        raise ValueError(
            f"segment has {segment.n_samples} samples; zero-phase filtering "
            f"requires more than 3 x filter order = {min_len}"
        )
    padlen = min(segment.n_samples - 1, max(min_len, filt.settling_samples()))
    filtered = signal.sosfiltfilt(filt.sections, segment.samples, padlen=padlen)
    return AudioSegment(filtered, segment.sample_rate_hz, segment.start_time_s)


def _antialias_fir(fs_up: float, cutoff_hz: float) -> np.ndarray:
    """Kaiser-window FIR lowpass: -6 dB at cutoff, >= 80 dB past a 20% transition."""
    width = 0.2 * cutoff_hz
    numtaps, beta = signal.kaiserord(80.0, width / (fs_up / 2.0))
    numtaps |= 1  # odd length -> integer group delay, symmetric
    return signal.firwin(numtaps, cutoff_hz, window=("kaiser", beta), fs=fs_up)


def resample(segment: AudioSegment, target_hz: float, antialias_cutoff_hz: float | None = None) -> AudioSegment:
    """Polyphase rational downsampling with an anti-aliasing lowpass.

    The anti-alias cutoff defaults to the target Nyquist; pass a lower
    value to band-limit harder. Edges are handled by symmetric signal
    extension. Upsampling is not supported.
    """
    if target_hz <= 0:
        raise ValueError(f"target_hz must be positive, got {target_hz}")
    if target_hz > segment.sample_rate_hz:
        raise ValueError(
            f"upsampling from {segment.sample_rate_hz} Hz to {target_hz} Hz is not supported"
        )
    if target_hz == segment.sample_rate_hz:
        return segment

    ratio = Fraction(target_hz / segment.sample_rate_hz).limit_denominator(1000)
    up, down = ratio.numerator, ratio.denominator

    nyq_out = target_hz / 2.0
    cutoff = nyq_out if antialias_cutoff_hz is None else min(antialias_cutoff_hz, nyq_out)
    fir = _antialias_fir(segment.sample_rate_hz * up, cutoff)

    x = segment.samples
    n = len(x)
    # symmetric extension sized to a multiple of `down` so the padded output
    # trims to an exact sample count
    half_len_in = int(np.ceil((len(fir) - 1) / (2 * up)))
    pad = int(np.ceil(half_len_in / down)) * down
    pad = min(pad, (n - 1) // down * down) if n > 1 else 0
    if pad > 0:
        left = x[pad:0:-1]
        right = x[-2:-pad - 2:-1]
        xp = np.concatenate([left, x, right])
    else:
        xp = x
    y = signal.resample_poly(xp, up, down, window=fir)
    out_pad = pad * up // down
    n_out = int(np.ceil(n * up / down))
    y = y[out_pad:out_pad + n_out]
    return AudioSegment(y, target_hz, segment.start_time_s)


def compute_stats(segment: AudioSegment) -> NormalizationStats:
    """Mean and population standard deviation of the samples."""
    if segment.n_samples == 0:
        raise ValueError("cannot compute statistics of an empty segment")
    return NormalizationStats(mean=float(np.mean(segment.samples)), std_dev=float(np.std(segment.samples)))


def zscore(segment: AudioSegment, stats: NormalizationStats) -> AudioSegment:
    """Standardize samples to (x - mean) / std."""
    if stats.std_dev == 0:
        raise ValueError("std_dev is zero (constant or silent input); window must be rejected")
    out = (segment.samples - stats.mean) / stats.std_dev
    return AudioSegment(out, segment.sample_rate_hz, segment.start_time_s)


MIN_WAV_RATE_HZ = 4000.0


def read_wav(path) -> AudioSegment:
    """Load a mono WAV file as an AudioSegment.

    Accepts 16-bit PCM (rescaled by 1/32768) and 32-bit IEEE float;
    multi-channel files and rates below 4 kHz are rejected.
    """
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"audio file not found: {path}")
    if path.stat().st_size == 0:
        raise ValueError(f"audio file is empty: {path}")
    try:
        rate, data = wavfile.read(path)
    except Exception as exc:
        raise ValueError(f"cannot parse {path} as WAV: {exc}") from exc
    if data.ndim != 1:
        raise ValueError(
            f"{path} has {data.shape[1]} channels; only mono input is supported"
        )
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise ValueError(
            f"{path} holds {data.dtype} samples; only 16-bit PCM and 32-bit float are supported"
        )
    if rate < MIN_WAV_RATE_HZ:
        raise ValueError(
            f"{path} is sampled at {rate} Hz; rates below {MIN_WAV_RATE_HZ:g} Hz are not supported"
        )
    return AudioSegment(samples, float(rate))


def write_wav(path, segment: AudioSegment, fmt: str = "float32") -> None:
    """Write a mono WAV file, either 32-bit float or 16-bit PCM."""
    rate = int(round(segment.sample_rate_hz))
    if abs(rate - segment.sample_rate_hz) > 1e-9:
        raise ValueError(
            f"WAV headers hold integer rates; got {segment.sample_rate_hz} Hz"
        )
    if fmt == "float32":
        wavfile.write(path, rate, segment.samples.astype(np.float32))
    elif fmt == "pcm16":
        clipped = np.clip(segment.samples, -1.0, 32767.0 / 32768.0)
        wavfile.write(path, rate, np.round(clipped * 32768.0).astype(np.int16))
    else:
        raise ValueError(f"unknown WAV format {fmt!r}; use 'float32' or 'pcm16'")
