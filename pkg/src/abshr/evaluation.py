"""Ground-truth ingestion, estimate/truth alignment, error metrics,
Bland-Altman records, and grouped aggregation."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .pipeline import (
    HrKind,
    HrSample,
    HrSeries,
    Missingness,
    PipelineConfig,
    format_float,
    sum_missingness,
)

MIN_RR_SPACING_S = 0.2


@dataclass(frozen=True)
class RPeakAnnotations:
    """ECG R-peak timestamps on the same clock as the audio."""

    peak_times_s: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.peak_times_s, dtype=np.float64)
        if times.ndim != 1:
            raise ValueError(f"peak times must be 1-D, got shape {times.shape}")
        if not np.all(np.isfinite(times)):
            raise ValueError("peak times contain NaN or Inf")
        if len(times) > 1:
            gaps = np.diff(times)
            if not np.all(gaps > 0):
                raise ValueError("peak times must be strictly increasing")
            if np.min(gaps) <= MIN_RR_SPACING_S:
                raise ValueError(
                    f"R-R spacing of {np.min(gaps):.4f} s is at or below the "
                    f"{MIN_RR_SPACING_S} s physiological floor"
                )
        object.__setattr__(self, "peak_times_s", times)

    def __len__(self) -> int:
        return len(self.peak_times_s)


@dataclass(frozen=True)
class PairedSample:
    """One matched (estimate, ground truth) pair at a shared instant."""

    time_s: float
    hr_audio: float
    hr_ecg: float

    def __post_init__(self):
        if not (self.hr_audio > 0 and self.hr_ecg > 0):
            raise ValueError(
                f"paired rates must be positive, got {self.hr_audio}, {self.hr_ecg}"
            )


@dataclass(frozen=True)
class BlandAltmanRecord:
    """Per-pair agreement row; gt_bpm keeps the reference value so bias can
    be plotted against ground truth rather than the pair mean."""

    gt_bpm: float
    mean_bpm: float
    diff_bpm: float


@dataclass(frozen=True)
class EvalReport:
    mde_bpm: float
    mae_bpm: float
    mape_pct: float
    n_pairs: int
    bland_altman: tuple
    missingness: Missingness | None = None
    group_keys: dict | None = None

    def __post_init__(self):
        object.__setattr__(self, "bland_altman", tuple(self.bland_altman))
        if self.n_pairs != len(self.bland_altman):
            raise ValueError(
                f"n_pairs {self.n_pairs} does not match {len(self.bland_altman)} records"
            )
        if self.mape_pct < 0:
            raise ValueError(f"mape_pct must be nonnegative, got {self.mape_pct}")
        if self.mae_bpm < abs(self.mde_bpm) - 1e-9:
            raise ValueError(
                f"mae {self.mae_bpm} is below |mde| = {abs(self.mde_bpm)}"
            )


def ecg_hr(annotations: RPeakAnnotations) -> HrSeries:
    """Ground-truth instantaneous HR: 60 over each R-R interval, stamped at
    the interval midpoint. No floor is applied (the reference is trusted);
    fewer than two peaks yields an empty series."""
    t = annotations.peak_times_s
    if len(t) < 2:
        return HrSeries((), Missingness(0, 0, 0, 0))
    bpm = 60.0 / np.diff(t)
    mid = (t[:-1] + t[1:]) / 2.0
    samples = tuple(
        HrSample(float(m), float(b), HrKind.instantaneous) for m, b in zip(mid, bpm)
    )
    return HrSeries(samples, Missingness(0, 0, 0, 0))


def ecg_window_hr(annotations: RPeakAnnotations, config: PipelineConfig,
                  start_time_s: float = 0.0,
                  duration_s: float | None = None) -> HrSeries:
    """Ground-truth window-average HR on the estimator's own window grid
    (same length, hop, and trailing-overlap exclusion), stamped at window
    centers. Windows without any interval midpoint in their head span are
    skipped. duration_s defaults to the last peak time."""
    t = annotations.peak_times_s
    if duration_s is None:
        duration_s = float(t[-1] - start_time_s) if len(t) else 0.0
    if duration_s < config.window_len_s:
        return HrSeries((), Missingness(0, 0, 0, 0))
    if len(t) < 2:
        return HrSeries((), Missingness(0, 0, 0, 0))
    bpm = 60.0 / np.diff(t)
    mid = (t[:-1] + t[1:]) / 2.0
    n_windows = int((duration_s - config.window_len_s) / config.hop_s) + 1
    samples = []
    for k in range(n_windows):
        w_start = start_time_s + k * config.hop_s
        lo = np.searchsorted(mid, w_start, side="left")
        hi = np.searchsorted(mid, w_start + config.hop_s, side="left")
        if hi > lo:
            center = w_start + config.window_len_s / 2.0
            samples.append(HrSample(center, float(np.mean(bpm[lo:hi])), HrKind.window_average))
    return HrSeries(tuple(samples), Missingness(0, 0, 0, 0))


def align(pred: HrSeries, truth: HrSeries, tolerance_s: float = 0.5) -> list:
    """Pair each prediction with the nearest-in-time unused truth sample
    within tolerance, walking predictions in time order (one-to-one; a tie
    in distance goes to the earlier truth sample). Unpaired samples on
    either side are simply absent from the result."""
    if tolerance_s < 0:
        raise ValueError(f"tolerance_s must be nonnegative, got {tolerance_s}")
    truth_times = truth.times()
    truth_bpms = truth.bpms()
    used = np.zeros(len(truth_times), dtype=bool)
    pairs = []
    for sample in pred.samples:
        lo = np.searchsorted(truth_times, sample.time_s - tolerance_s, side="left")
        hi = np.searchsorted(truth_times, sample.time_s + tolerance_s, side="right")
        best = -1
        best_gap = np.inf
        for j in range(lo, hi):
            if used[j]:
                continue
            gap = abs(truth_times[j] - sample.time_s)
            if gap < best_gap:
                best, best_gap = j, gap
        if best >= 0:
            used[best] = True
            pairs.append(PairedSample(sample.time_s, sample.bpm, float(truth_bpms[best])))
    return pairs


def metrics(pairs, missingness: Missingness | None = None,
            group_keys: dict | None = None) -> EvalReport:
    """Mean directional, absolute, and absolute-percentage error over the
    pairs (signed as audio minus ECG; percentages against the ECG value),
    plus one Bland-Altman record per pair."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("no pairs to score; metrics are undefined")
    audio = np.array([p.hr_audio for p in pairs], dtype=np.float64)
    ecg = np.array([p.hr_ecg for p in pairs], dtype=np.float64)
    diff = audio - ecg
    records = tuple(
        BlandAltmanRecord(float(e), float((a + e) / 2.0), float(a - e))
        for a, e in zip(audio, ecg)
    )
    return EvalReport(
        mde_bpm=float(np.mean(diff)),
        mae_bpm=float(np.mean(np.abs(diff))),
        mape_pct=float(100.0 * np.mean(np.abs(diff) / ecg)),
        n_pairs=len(pairs),
        bland_altman=records,
        missingness=missingness,
        group_keys=group_keys,
    )


def _pool_missingness(reports) -> Missingness | None:
    parts = [r.missingness for r in reports]
    if any(p is None for p in parts):
        return None
    return sum_missingness(parts)


def aggregate(reports, key: str) -> list:
    """Pool Bland-Altman records across reports sharing the same value of
    `key` ('participant' or 'day') and recompute metrics over each pool;
    never an average of averages. Output is ordered by group value."""
    if key not in ("participant", "day"):
        raise ValueError(f"unknown group key {key!r}; use 'participant' or 'day'")
    groups: dict = {}
    for report in reports:
        if not report.group_keys or key not in report.group_keys:
            raise ValueError(f"report lacks group key {key!r}: {report.group_keys}")
        groups.setdefault(str(report.group_keys[key]), []).append(report)
    pooled = []
    for value in sorted(groups):
        members = groups[value]
        records = [rec for rep in members for rec in rep.bland_altman]
        ecg = np.array([rec.gt_bpm for rec in records], dtype=np.float64)
        diff = np.array([rec.diff_bpm for rec in records], dtype=np.float64)
        if len(records) == 0:
            raise ValueError(f"group {key}={value} has no pairs to pool")
        pooled.append(EvalReport(
            mde_bpm=float(np.mean(diff)),
            mae_bpm=float(np.mean(np.abs(diff))),
            mape_pct=float(100.0 * np.mean(np.abs(diff) / ecg)),
            n_pairs=len(records),
            bland_altman=tuple(records),
            missingness=_pool_missingness(members),
            group_keys={key: value},
        ))
    return pooled


# ---------------------------------------------------------------------------
# file formats

def read_rpeaks(path) -> RPeakAnnotations:
    """Read R-peak timestamps: one float (seconds) per line, optional
    `time_s` header."""
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"R-peak file not found: {path}")
    times = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if lineno == 1 and text == "time_s":
                continue
            try:
                times.append(float(text))
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: expected one timestamp per line, got {text!r}"
                ) from None
    return RPeakAnnotations(np.array(times, dtype=np.float64))


def write_rpeaks(path, times) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("time_s\n")
        for t in np.asarray(times, dtype=np.float64):
            fh.write(format_float(float(t)) + "\n")


def report_as_dict(report: EvalReport) -> dict:
    """JSON-ready view of a report (Bland-Altman rows live in their own CSV)."""
    from .pipeline import missingness_as_dict

    return {
        "mde_bpm": float(format_float(report.mde_bpm)),
        "mae_bpm": float(format_float(report.mae_bpm)),
        "mape_pct": float(format_float(report.mape_pct)),
        "n_pairs": report.n_pairs,
        "missingness": (
            missingness_as_dict(report.missingness)
            if report.missingness is not None else None
        ),
        "group_keys": report.group_keys,
    }


def write_report_json(path, report: EvalReport, extra: dict | None = None) -> None:
    payload = report_as_dict(report)
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def write_bland_altman_csv(path, records) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("gt_bpm,mean_bpm,diff_bpm\n")
        for rec in records:
            fh.write(
                f"{format_float(rec.gt_bpm)},{format_float(rec.mean_bpm)},"
                f"{format_float(rec.diff_bpm)}\n"
            )
