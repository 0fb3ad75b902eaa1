"""End-to-end heart-rate estimation: windowing, artifact gating, denoising
orchestration, peak detection, instantaneous/average HR, post-processing."""
from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .signal_core import (
    AudioSegment,
    NormalizationStats,
    compute_stats,
    design_butterworth_lowpass,
    filter_zero_phase,
    resample,
    zscore,
)
from .wavelet import ThresholdPolicy, WaveletBasis, denoise_window

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib


_WAVELETS = {"coif4": WaveletBasis.coif4}


def wavelet_basis(name: str) -> WaveletBasis:
    if name not in _WAVELETS:
        raise ValueError(f"unknown wavelet {name!r}; available: {sorted(_WAVELETS)}")
    return _WAVELETS[name]()


@dataclass(frozen=True)
class PipelineConfig:
    """Processing constants. Defaults reproduce the reference analysis chain."""

    window_len_s: float = 10.0
    overlap_s: float = 2.0
    artifact_sigma: float = 10.0
    butter_order: int = 5
    butter_cutoff_hz: float = 200.0
    antialias_cutoff_hz: float = 2000.0
    target_rate_hz: float = 4000.0
    wavelet: str = "coif4"
    levels: int = 5
    min_peak_distance_s: float = 0.65
    min_peak_height: float = 1.2
    min_hr_bpm: float = 45.0
    outlier_sigma: float = 2.0
    std_window_len: int = 5
    smooth_window_len: int = 5

    def __post_init__(self):
        if not 0 <= self.overlap_s < self.window_len_s:
            raise ValueError(
                f"overlap {self.overlap_s} s must lie in [0, window length {self.window_len_s} s)"
            )
        for name in ("window_len_s", "artifact_sigma", "butter_cutoff_hz",
                     "antialias_cutoff_hz", "target_rate_hz", "min_peak_distance_s",
                     "min_peak_height", "min_hr_bpm", "outlier_sigma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("butter_order", "levels", "std_window_len", "smooth_window_len"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value}")
        wavelet_basis(self.wavelet)  # fail fast on unknown names

    @property
    def hop_s(self) -> float:
        return self.window_len_s - self.overlap_s

    @property
    def max_hr_bpm(self) -> float:
        return 60.0 / self.min_peak_distance_s


class WindowStatus(str, Enum):
    accepted = "accepted"
    rejected_motion_artifact = "rejected_motion_artifact"
    rejected_constant = "rejected_constant"


class HrKind(str, Enum):
    instantaneous = "instantaneous"
    window_average = "window_average"


@dataclass(frozen=True)
class AnalysisWindow:
    """One fixed-length slice of the recording, normalized and gate-checked.

    For accepted and artifact-rejected windows the segment holds z-scored
    samples; constant windows (undefined z-score) keep the raw slice.
    """

    index: int
    segment: AudioSegment
    status: WindowStatus
    stats: NormalizationStats


@dataclass(frozen=True)
class BeatSeries:
    """Detected beat instants for one window, in absolute recording time."""

    beat_times_s: np.ndarray
    window_index: int

    def __post_init__(self):
        times = np.asarray(self.beat_times_s, dtype=np.float64)
        if times.ndim != 1:
            raise ValueError(f"beat times must be 1-D, got shape {times.shape}")
        if len(times) > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("beat times must be strictly increasing")
        object.__setattr__(self, "beat_times_s", times)

    def __len__(self) -> int:
        return len(self.beat_times_s)


@dataclass(frozen=True)
class HrSample:
    time_s: float
    bpm: float
    kind: HrKind

    def __post_init__(self):
        if not self.bpm > 0:
            raise ValueError(f"bpm must be positive, got {self.bpm}")
        object.__setattr__(self, "kind", HrKind(self.kind))


@dataclass(frozen=True)
class Missingness:
    """Counts for the two exclusion mechanisms: whole windows dropped by the
    artifact gate, and beat intervals dropped by the HR floor."""

    windows_total: int
    windows_rejected: int
    intervals_total: int
    intervals_rejected: int

    def __post_init__(self):
        if not 0 <= self.windows_rejected <= self.windows_total:
            raise ValueError(
                f"window counts inconsistent: {self.windows_rejected} rejected "
                f"of {self.windows_total}"
            )
        if not 0 <= self.intervals_rejected <= self.intervals_total:
            raise ValueError(
                f"interval counts inconsistent: {self.intervals_rejected} rejected "
                f"of {self.intervals_total}"
            )

    @property
    def window_fraction(self) -> float:
        return self.windows_rejected / self.windows_total if self.windows_total else 0.0

    @property
    def interval_fraction(self) -> float:
        return self.intervals_rejected / self.intervals_total if self.intervals_total else 0.0

    @property
    def fraction_missing(self) -> float:
        """Compose both mechanisms: window loss plus interval loss on what survives."""
        w = self.window_fraction
        return w + (1.0 - w) * self.interval_fraction


@dataclass(frozen=True)
class HrSeries:
    samples: tuple
    missingness: Missingness

    def __post_init__(self):
        samples = tuple(self.samples)
        times = [s.time_s for s in samples]
        if any(t1 >= t2 for t1, t2 in zip(times, times[1:])):
            raise ValueError("sample times must be strictly increasing")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    def times(self) -> np.ndarray:
        return np.array([s.time_s for s in self.samples], dtype=np.float64)

    def bpms(self) -> np.ndarray:
        return np.array([s.bpm for s in self.samples], dtype=np.float64)


@dataclass(frozen=True)
class WindowRecord:
    """Per-window audit row; missingness must be recountable from these."""

    index: int
    start_time_s: float
    status: WindowStatus
    n_beats: int
    intervals_total: int
    intervals_rejected: int
    ahr_bpm: float | None


@dataclass(frozen=True)
class PipelineResult:
    ihr: HrSeries
    ahr: HrSeries
    windows: tuple

    @property
    def missingness(self) -> Missingness:
        return self.ihr.missingness


def recount_missingness(records) -> Missingness:
    """Rebuild the missingness record from per-window audit rows."""
    records = list(records)
    return Missingness(
        windows_total=len(records),
        windows_rejected=sum(1 for r in records if r.status is not WindowStatus.accepted),
        intervals_total=sum(r.intervals_total for r in records),
        intervals_rejected=sum(r.intervals_rejected for r in records),
    )


def sum_missingness(parts) -> Missingness:
    """Combine missingness counts across recordings."""
    parts = list(parts)
    return Missingness(
        windows_total=sum(p.windows_total for p in parts),
        windows_rejected=sum(p.windows_rejected for p in parts),
        intervals_total=sum(p.intervals_total for p in parts),
        intervals_rejected=sum(p.intervals_rejected for p in parts),
    )


def segment_windows(segment: AudioSegment, config: PipelineConfig) -> list:
    """Slice the recording into fixed windows on the hop grid, z-score each
    with its own stats, and flag windows that fail the artifact gate.

    The trailing partial window is discarded. A segment shorter than one
    window yields an empty list.
    """
    fs = segment.sample_rate_hz
    win = int(round(config.window_len_s * fs))
    hop = int(round(config.hop_s * fs))
    x = segment.samples
    windows = []
    if len(x) < win:
        return windows
    n_windows = (len(x) - win) // hop + 1
    for k in range(n_windows):
        s0 = k * hop
        raw = AudioSegment(x[s0:s0 + win], fs, segment.start_time_s + s0 / fs)
        stats = compute_stats(raw)
        if stats.std_dev == 0:
            windows.append(AnalysisWindow(k, raw, WindowStatus.rejected_constant, stats))
            continue
        normed = zscore(raw, stats)
        if np.max(np.abs(normed.samples)) > config.artifact_sigma:
            status = WindowStatus.rejected_motion_artifact
        else:
            status = WindowStatus.accepted
        windows.append(AnalysisWindow(k, normed, status, stats))
    return windows


def _peak_candidates(x: np.ndarray) -> tuple:
    """Local maxima including plateau middles and boundary samples.

    A run of equal values is a candidate when every existing neighbor run
    is lower; the record edges count as satisfied. Returns (positions,
    heights) with positions at plateau middles, ascending.
    """
    n = len(x)
    change = np.flatnonzero(np.diff(x) != 0) + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change - 1, [n - 1]])
    vals = x[starts]
    left_ok = np.empty(len(starts), dtype=bool)
    left_ok[0] = True
    left_ok[1:] = vals[:-1] < vals[1:]
    right_ok = np.empty(len(starts), dtype=bool)
    right_ok[-1] = True
    right_ok[:-1] = vals[1:] < vals[:-1]
    keep = left_ok & right_ok
    return (starts[keep] + ends[keep]) // 2, vals[keep]


def detect_peaks(denoised: AudioSegment, config: PipelineConfig,
                 window_index: int = 0) -> BeatSeries:
    """Pick beats: local maxima at least min_peak_height tall, thinned so no
    two survivors are closer than min_peak_distance_s, higher peaks winning
    conflicts (greedy by descending amplitude, ties to the earlier peak)."""
    fs = denoised.sample_rate_hz
    min_dist = int(round(config.min_peak_distance_s * fs))
    if min_dist < 1:
        raise ValueError(
            f"min_peak_distance_s {config.min_peak_distance_s} is under one sample at {fs} Hz"
        )
    pos, heights = _peak_candidates(denoised.samples)
    tall = heights >= config.min_peak_height
    pos, heights = pos[tall], heights[tall]
    order = np.lexsort((pos, -heights))
    alive = np.ones(len(pos), dtype=bool)
    kept = []
    for ci in order:
        if not alive[ci]:
            continue
        kept.append(pos[ci])
        lo = np.searchsorted(pos, pos[ci] - min_dist + 1, side="left")
        hi = np.searchsorted(pos, pos[ci] + min_dist - 1, side="right")
        alive[lo:hi] = False
    kept.sort()
    times = denoised.start_time_s + np.array(kept, dtype=np.float64) / fs
    return BeatSeries(times, window_index)


def compute_ihr(beats: BeatSeries, config: PipelineConfig) -> HrSeries:
    """Instantaneous HR, 60 over each beat-to-beat interval, stamped at the
    interval midpoint. Intervals slower than min_hr_bpm are dropped and
    counted; fewer than two beats yields an empty series."""
    t = beats.beat_times_s
    if len(t) < 2:
        return HrSeries((), Missingness(0, 0, 0, 0))
    gaps = np.diff(t)
    bpm = 60.0 / gaps
    mid = (t[:-1] + t[1:]) / 2.0
    keep = bpm >= config.min_hr_bpm
    samples = tuple(
        HrSample(float(m), float(b), HrKind.instantaneous)
        for m, b in zip(mid[keep], bpm[keep])
    )
    return HrSeries(samples, Missingness(0, 0, len(gaps), int(np.sum(~keep))))


def compute_ahr(window_ihr: HrSeries, window: AnalysisWindow,
                config: PipelineConfig) -> HrSample | None:
    """Mean of the window's instantaneous samples whose interval midpoint
    falls in the window head (the trailing overlap_s is excluded), stamped
    at the window center. None when nothing survives."""
    start = window.segment.start_time_s
    cutoff = start + config.hop_s
    bpms = [s.bpm for s in window_ihr.samples if start <= s.time_s < cutoff]
    if not bpms:
        return None
    center = start + config.window_len_s / 2.0
    return HrSample(center, float(np.mean(bpms)), HrKind.window_average)


def _window_bounds(i: int, n: int, length: int) -> tuple:
    lo = i - (length - 1) // 2
    hi = i + length // 2 + 1
    return max(0, lo), min(n, hi)


def postprocess_ahr(series: HrSeries, config: PipelineConfig) -> HrSeries:
    """Clean the window-average series in two passes.

    Pass 1 flags each sample against its neighborhood (centered window of
    std_window_len samples, shrinking at the edges, the sample itself
    excluded): when |x - neighborhood mean| > outlier_sigma * neighborhood
    std, x is replaced by the neighborhood median. Neighborhoods read the
    input values, not earlier replacements. Pass 2 is a centered moving
    average of smooth_window_len samples (shrinking at the edges). Times
    and length are preserved.
    """
    n = len(series.samples)
    if n < 2:
        return series
    x = series.bpms()
    replaced = x.copy()
    for i in range(n):
        lo, hi = _window_bounds(i, n, config.std_window_len)
        neighbors = np.concatenate([x[lo:i], x[i + 1:hi]])
        if len(neighbors) == 0:
            continue
        if abs(x[i] - neighbors.mean()) > config.outlier_sigma * neighbors.std():
            replaced[i] = float(np.median(neighbors))
    smoothed = np.empty(n)
    for i in range(n):
        lo, hi = _window_bounds(i, n, config.smooth_window_len)
        smoothed[i] = replaced[lo:hi].mean()
    samples = tuple(
        HrSample(s.time_s, float(v), s.kind)
        for s, v in zip(series.samples, smoothed)
    )
    return HrSeries(samples, series.missingness)


def _process_window(window: AnalysisWindow, own_end_s: float, filt, basis,
                    policy: ThresholdPolicy, config: PipelineConfig) -> tuple:
    """Denoise one accepted window, detect beats, and split its intervals
    into the owned span [window start, own_end_s). Returns (record, owned
    instantaneous samples, window-average sample or None)."""
    start = window.segment.start_time_s
    if window.status is not WindowStatus.accepted:
        record = WindowRecord(window.index, start, window.status, 0, 0, 0, None)
        return record, (), None
    filtered = filter_zero_phase(filt, window.segment)
    cleaned = denoise_window(filtered.samples, basis, config.levels, policy)
    denoised = AudioSegment(cleaned, window.segment.sample_rate_hz, start)
    beats = detect_peaks(denoised, config, window.index)
    t = beats.beat_times_s
    owned_samples = []
    own_total = own_rejected = 0
    if len(t) >= 2:
        gaps = np.diff(t)
        bpm = 60.0 / gaps
        mid = (t[:-1] + t[1:]) / 2.0
        owned = (mid >= start) & (mid < own_end_s)
        own_total = int(np.sum(owned))
        slow = owned & (bpm < config.min_hr_bpm)
        own_rejected = int(np.sum(slow))
        for m, b in zip(mid[owned & ~slow], bpm[owned & ~slow]):
            owned_samples.append(HrSample(float(m), float(b), HrKind.instantaneous))
    ahr = compute_ahr(compute_ihr(beats, config), window, config)
    record = WindowRecord(
        window.index, start, window.status, len(t), own_total, own_rejected,
        ahr.bpm if ahr is not None else None,
    )
    return record, tuple(owned_samples), ahr


def run_pipeline(raw: AudioSegment, config: PipelineConfig = PipelineConfig(),
                 jobs: int = 1) -> PipelineResult:
    """Full chain: resample -> window/normalize/gate -> lowpass -> wavelet
    denoise -> peak detection -> instantaneous HR with the slow-interval
    floor -> window-average HR -> outlier replacement and smoothing.

    Overlapping windows both see the shared 2 s of audio; each beat
    interval is credited to exactly one window (the one whose hop span
    holds the interval midpoint) so the merged series carries no
    duplicates. Pure function of (raw, config); jobs only parallelizes
    the per-window work.
    """
    if raw.duration_s < config.window_len_s:
        raise ValueError(
            f"recording is {raw.duration_s:.3f} s; need at least one full "
            f"window of {config.window_len_s:g} s"
        )
    if raw.sample_rate_hz < config.target_rate_hz:
        raise ValueError(
            f"recording rate {raw.sample_rate_hz:g} Hz is below the target "
            f"{config.target_rate_hz:g} Hz and upsampling is not supported"
        )
    work = resample(raw, config.target_rate_hz, config.antialias_cutoff_hz)
    windows = segment_windows(work, config)
    basis = wavelet_basis(config.wavelet)
    policy = ThresholdPolicy()
    filt = design_butterworth_lowpass(
        config.butter_order, config.butter_cutoff_hz, config.target_rate_hz
    )
    fs = work.sample_rate_hz
    hop_samples = int(round(config.hop_s * fs))

    def own_end(k: int) -> float:
        if k == len(windows) - 1:
            return windows[k].segment.start_time_s + config.window_len_s
        return work.start_time_s + ((k + 1) * hop_samples) / fs

    tasks = [(w, own_end(w.index)) for w in windows]
    if jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(
                lambda args: _process_window(args[0], args[1], filt, basis, policy, config),
                tasks,
            ))
    else:
        outputs = [_process_window(w, e, filt, basis, policy, config) for w, e in tasks]

    records = tuple(out[0] for out in outputs)
    ihr_samples = tuple(s for out in outputs for s in out[1])
    ahr_samples = tuple(out[2] for out in outputs if out[2] is not None)
    missing = recount_missingness(records)
    ihr = HrSeries(ihr_samples, missing)
    ahr = postprocess_ahr(HrSeries(ahr_samples, missing), config)
    return PipelineResult(ihr=ihr, ahr=ahr, windows=records)


# ---------------------------------------------------------------------------
# file formats

_CONFIG_FIELDS = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}
_INT_FIELDS = {"butter_order", "levels", "std_window_len", "smooth_window_len"}


def load_config(path) -> PipelineConfig:
    """Read a PipelineConfig from JSON or TOML (by file suffix); keys mirror
    the field names and missing keys keep their defaults."""
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"config file not found: {path}")
    if path.suffix.lower() == ".toml":
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    else:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"config root must be a table/object, got {type(data).__name__}")
    unknown = sorted(set(data) - set(_CONFIG_FIELDS))
    if unknown:
        raise ValueError(f"unknown config keys {unknown}; valid keys: {sorted(_CONFIG_FIELDS)}")
    kwargs = {}
    for key, value in data.items():
        if key == "wavelet":
            if not isinstance(value, str):
                raise ValueError(f"config key 'wavelet' must be a string, got {value!r}")
            kwargs[key] = value
        elif key in _INT_FIELDS:
            if not isinstance(value, int) or isinstance(value, bool):
                raise ValueError(f"config key {key!r} must be an integer, got {value!r}")
            kwargs[key] = value
        else:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValueError(f"config key {key!r} must be a number, got {value!r}")
            kwargs[key] = float(value)
    return PipelineConfig(**kwargs)


def format_float(value: float) -> str:
    """Fixed 6-significant-digit rendering used by every text output."""
    return f"{value:.6g}"


def write_hr_csv(path, series: HrSeries) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("time_s,bpm,kind\n")
        for s in series.samples:
            fh.write(f"{format_float(s.time_s)},{format_float(s.bpm)},{s.kind.value}\n")


def read_hr_csv(path) -> HrSeries:
    """Read a series written by write_hr_csv; the missingness record is not
    part of the CSV and comes back zeroed."""
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"HR series file not found: {path}")
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "time_s,bpm,kind":
            raise ValueError(
                f"{path} has header {header!r}; expected 'time_s,bpm,kind'"
            )
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
            try:
                samples.append(HrSample(float(parts[0]), float(parts[1]), HrKind(parts[2])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return HrSeries(tuple(samples), Missingness(0, 0, 0, 0))


def missingness_as_dict(missing: Missingness) -> dict:
    return {
        "windows_total": missing.windows_total,
        "windows_rejected": missing.windows_rejected,
        "intervals_total": missing.intervals_total,
        "intervals_rejected": missing.intervals_rejected,
        "fraction_missing": float(format_float(missing.fraction_missing)),
    }


def write_missingness_json(path, missing: Missingness) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(missingness_as_dict(missing), fh, indent=2)
        fh.write("\n")
