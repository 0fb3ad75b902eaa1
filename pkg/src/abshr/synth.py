"""Synthetic abdominal-audio generator with exact beat-level ground truth."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal
from scipy.integrate import cumulative_trapezoid

from .pipeline import HrKind, HrSample, HrSeries, Missingness
from .signal_core import AudioSegment

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

HR_RANGE_BPM = (40.0, 120.0)
S2_DELAY_S = 0.3
BURST_SIGMA_S = 0.025  # Gaussian envelope: full width at half maximum ~59 ms
GI_NOISE_CUTOFF_HZ = 500.0
RESPIRATION_DEPTH = 0.1
SPIKE_GAIN = 20.0  # clicks this many background sigmas tall
SPIKE_LEN = 5  # samples per click


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic recording.

    hr_profile is a piecewise-linear BPM-vs-time curve given as (time_s,
    bpm) knots (a bare number means a constant profile); it is held flat
    beyond the outermost knots.
    """

    duration_s: float
    hr_profile: tuple
    sample_rate_hz: float = 4000.0
    s1_amplitude: float = 1.0
    s2_amplitude: float = 0.5
    s1_center_hz: float = 50.0
    gi_noise_snr_db: float | None = None
    respiration_rate_bpm: float | None = None
    motion_spike_rate_per_min: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ValueError(f"duration_s must be positive, got {self.duration_s}")
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        profile = self.hr_profile
        if isinstance(profile, (int, float)):
            profile = ((0.0, float(profile)),)
        knots = tuple((float(t), float(bpm)) for t, bpm in profile)
        if not knots:
            raise ValueError("hr_profile needs at least one (time_s, bpm) knot")
        times = [t for t, _ in knots]
        if any(t1 >= t2 for t1, t2 in zip(times, times[1:])):
            raise ValueError("hr_profile knot times must be strictly increasing")
        lo, hi = HR_RANGE_BPM
        for t, bpm in knots:
            if not lo <= bpm <= hi:
                raise ValueError(
                    f"hr_profile value {bpm} BPM at {t} s is outside [{lo:g}, {hi:g}]"
                )
        object.__setattr__(self, "hr_profile", knots)
        if not self.s1_amplitude > 0:
            raise ValueError(f"s1_amplitude must be positive, got {self.s1_amplitude}")
        if self.s2_amplitude < 0:
            raise ValueError(f"s2_amplitude must be nonnegative, got {self.s2_amplitude}")
        if not 0 < self.s1_center_hz < self.sample_rate_hz / 2:
            raise ValueError(
                f"s1_center_hz {self.s1_center_hz} must lie in (0, Nyquist "
                f"{self.sample_rate_hz / 2:g})"
            )
        if self.motion_spike_rate_per_min < 0:
            raise ValueError(
                f"motion_spike_rate_per_min must be nonnegative, got "
                f"{self.motion_spike_rate_per_min}"
            )
        if int(self.rng_seed) != self.rng_seed:
            raise ValueError(f"rng_seed must be an integer, got {self.rng_seed}")

    def hr_at(self, t) -> np.ndarray:
        knot_t = np.array([k[0] for k in self.hr_profile])
        knot_bpm = np.array([k[1] for k in self.hr_profile])
        return np.interp(np.asarray(t, dtype=np.float64), knot_t, knot_bpm)


@dataclass(frozen=True)
class SynthOutput:
    """Generated audio plus the ground truth that produced it."""

    audio: AudioSegment
    true_beat_times_s: np.ndarray
    true_hr: HrSeries
    spike_times_s: np.ndarray


def _beat_times(spec: SynthSpec, t: np.ndarray) -> np.ndarray:
    """Integrate the instantaneous beat rate; a beat fires at every integer
    phase crossing, starting with phase 0 at t = 0."""
    phase = cumulative_trapezoid(spec.hr_at(t) / 60.0, t, initial=0.0)
    n_beats = int(np.floor(phase[-1])) + 1
    ks = np.arange(n_beats, dtype=np.float64)
    idx = np.searchsorted(phase, ks, side="left")
    beats = np.empty(n_beats)
    exact = phase[idx] == ks
    beats[exact] = t[idx[exact]]
    inexact = ~exact
    i = idx[inexact]
    frac = (ks[inexact] - phase[i - 1]) / (phase[i] - phase[i - 1])
    beats[inexact] = t[i - 1] + frac * (t[i] - t[i - 1])
    return beats


def _add_bursts(x: np.ndarray, centers_s: np.ndarray, amplitude: float,
                center_hz: float, fs: float) -> None:
    half = int(round(4.0 * BURST_SIGMA_S * fs))
    tau = np.arange(-half, half + 1) / fs
    proto = np.exp(-tau ** 2 / (2.0 * BURST_SIGMA_S ** 2)) * np.cos(2.0 * np.pi * center_hz * tau)
    n = len(x)
    for tc in centers_s:
        c = int(round(tc * fs))
        lo, hi = c - half, c + half + 1
        src_lo = max(0, -lo)
        src_hi = len(proto) - max(0, hi - n)
        if src_lo >= src_hi:
            continue
        x[max(0, lo):min(n, hi)] += amplitude * proto[src_lo:src_hi]


def _gi_noise(rng: np.random.Generator, n: int, fs: float) -> np.ndarray:
    """Band-limited noise whose variance swells in bursts covering roughly a
    third of the record (quiet floor at half the mean power, bursts at 2x)."""
    white = rng.standard_normal(n)
    sos = signal.butter(5, GI_NOISE_CUTOFF_HZ, btype="low", fs=fs, output="sos")
    colored = signal.sosfiltfilt(sos, white)
    bursty = np.zeros(n)
    cursor = 0.0
    duration = n / fs
    while cursor < duration:
        gap = rng.exponential(5.5)
        burst = rng.uniform(1.5, 4.0)
        b0 = int((cursor + gap) * fs)
        b1 = int((cursor + gap + burst) * fs)
        if b0 >= n:
            break
        bursty[b0:min(b1, n)] = 1.0
        cursor += gap + burst
    return colored * np.sqrt(0.5 + 1.5 * bursty)


def synthesize(spec: SynthSpec) -> SynthOutput:
    """Render the recording: S1 (and optional S2) tone bursts on the beat
    grid, amplitude-modulated by respiration, plus gastrointestinal noise
    scaled to the requested SNR and motion clicks big enough to trip any
    reasonable artifact gate. Same spec, same bytes."""
    fs = spec.sample_rate_hz
    n = int(round(spec.duration_s * fs))
    t = np.arange(n) / fs
    beats = _beat_times(spec, t)

    heart = np.zeros(n)
    _add_bursts(heart, beats, spec.s1_amplitude, spec.s1_center_hz, fs)
    if spec.s2_amplitude > 0:
        _add_bursts(heart, beats + S2_DELAY_S,
                    spec.s1_amplitude * spec.s2_amplitude, spec.s1_center_hz, fs)
    if spec.respiration_rate_bpm is not None:
        breath_hz = spec.respiration_rate_bpm / 60.0
        heart *= 1.0 + RESPIRATION_DEPTH * np.sin(2.0 * np.pi * breath_hz * t)

    rng = np.random.default_rng(spec.rng_seed)
    x = heart.copy()
    if spec.gi_noise_snr_db is not None:
        noise = _gi_noise(rng, n, fs)
        p_heart = float(np.mean(heart ** 2))
        p_noise = float(np.mean(noise ** 2))
        target = p_heart / (10.0 ** (spec.gi_noise_snr_db / 10.0))
        x = heart + noise * np.sqrt(target / p_noise)

    n_spikes = int(round(spec.motion_spike_rate_per_min * spec.duration_s / 60.0))
    spike_times = np.empty(0)
    if n_spikes > 0:
        margin = min(0.5, spec.duration_s / 4.0)
        raw_times = np.sort(rng.uniform(margin, spec.duration_s - margin, n_spikes))
        sigma_bg = float(np.std(x))
        click = SPIKE_GAIN * sigma_bg * np.array([1.0, -1.0, 1.0, -1.0, 1.0])[:SPIKE_LEN]
        starts = []
        for ts in raw_times:
            c = min(int(round(ts * fs)), n - SPIKE_LEN)
            x[c:c + SPIKE_LEN] += click
            starts.append(c / fs)
        spike_times = np.array(starts)

    mid = (beats[:-1] + beats[1:]) / 2.0
    bpm = 60.0 / np.diff(beats)
    true_hr = HrSeries(
        tuple(HrSample(float(m), float(b), HrKind.instantaneous) for m, b in zip(mid, bpm)),
        Missingness(0, 0, 0, 0),
    )
    return SynthOutput(
        audio=AudioSegment(x, fs, 0.0),
        true_beat_times_s=beats,
        true_hr=true_hr,
        spike_times_s=spike_times,
    )


_SPEC_KEYS = {
    "duration_s", "hr_profile", "sample_rate_hz", "s1_amplitude", "s2_amplitude",
    "s1_center_hz", "gi_noise_snr_db", "respiration_rate_bpm",
    "motion_spike_rate_per_min", "rng_seed",
}


def load_synth_spec(path) -> SynthSpec:
    """Read a SynthSpec from JSON or TOML (by suffix); keys mirror the field
    names. hr_profile may be a number or a list of [time_s, bpm] pairs."""
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"synth spec file not found: {path}")
    if path.suffix.lower() == ".toml":
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    else:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"synth spec root must be a table/object, got {type(data).__name__}")
    unknown = sorted(set(data) - _SPEC_KEYS)
    if unknown:
        raise ValueError(f"unknown synth spec keys {unknown}; valid keys: {sorted(_SPEC_KEYS)}")
    if "duration_s" not in data or "hr_profile" not in data:
        raise ValueError("synth spec requires at least duration_s and hr_profile")
    profile = data["hr_profile"]
    if isinstance(profile, list):
        try:
            profile = tuple((float(p[0]), float(p[1])) for p in profile)
        except (TypeError, ValueError, IndexError):
            raise ValueError(
                "hr_profile must be a number or a list of [time_s, bpm] pairs"
            ) from None
    elif not isinstance(profile, (int, float)):
        raise ValueError("hr_profile must be a number or a list of [time_s, bpm] pairs")
    kwargs = dict(data)
    kwargs["hr_profile"] = profile
    return SynthSpec(**kwargs)


def spec_as_dict(spec: SynthSpec) -> dict:
    return {
        "duration_s": spec.duration_s,
        "hr_profile": [[t, bpm] for t, bpm in spec.hr_profile],
        "sample_rate_hz": spec.sample_rate_hz,
        "s1_amplitude": spec.s1_amplitude,
        "s2_amplitude": spec.s2_amplitude,
        "s1_center_hz": spec.s1_center_hz,
        "gi_noise_snr_db": spec.gi_noise_snr_db,
        "respiration_rate_bpm": spec.respiration_rate_bpm,
        "motion_spike_rate_per_min": spec.motion_spike_rate_per_min,
        "rng_seed": spec.rng_seed,
    }
