"""Embedded invariant checks behind the `selftest` command.

Each check returns quickly and independently; the suite is a smoke screen
for broken builds (bad coefficient edits, toolchain numeric surprises),
not a replacement for the test suite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pipeline import PipelineConfig, detect_peaks
from .signal_core import AudioSegment, design_butterworth_lowpass
from .wavelet import WaveletBasis, dwt, idwt, soft_threshold, sqtwolog_threshold

_SEED = 20260814


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check_basis(basis: WaveletBasis) -> CheckResult:
    try:
        basis.validate(tol=1e-10)
    except ValueError as exc:
        return CheckResult("wavelet-basis-integrity", False, str(exc))
    return CheckResult("wavelet-basis-integrity", True, "sum, orthonormality, mirror relation ok")


def _check_reconstruction(basis: WaveletBasis) -> CheckResult:
    rng = np.random.default_rng(_SEED)
    worst = 0.0
    for _ in range(20):
        x = rng.standard_normal(4096)
        rec = idwt(dwt(x, basis, 5))
        worst = max(worst, float(np.linalg.norm(rec - x) / np.linalg.norm(x)))
    ok = worst < 1e-10
    return CheckResult("perfect-reconstruction", ok, f"worst relative error {worst:.3e}")


def _check_parseval(basis: WaveletBasis) -> CheckResult:
    rng = np.random.default_rng(_SEED + 1)
    worst = 0.0
    for _ in range(20):
        x = rng.standard_normal(4096)
        decomp = dwt(x, basis, 5)
        sig = float(x @ x)
        worst = max(worst, abs(decomp.coefficient_energy() - sig) / sig)
    ok = worst < 1e-9
    return CheckResult("parseval-energy", ok, f"worst relative energy drift {worst:.3e}")


def _check_filter_response() -> CheckResult:
    filt = design_butterworth_lowpass(5, 200.0, 4000.0)
    dc, cut = filt.magnitude([0.0, 200.0])
    err_dc = abs(dc - 1.0)
    err_cut = abs(cut - 1.0 / np.sqrt(2.0))
    ok = err_dc < 1e-9 and err_cut < 1e-6
    return CheckResult(
        "butterworth-response", ok,
        f"|H(0)|-1 = {err_dc:.3e}, |H(200)|-1/sqrt(2) = {err_cut:.3e}",
    )


def _check_soft_threshold() -> CheckResult:
    rng = np.random.default_rng(_SEED + 2)
    x = rng.standard_normal(10000) * 3.0
    th = 0.7
    got = soft_threshold(x, th)
    want = np.sign(x) * np.maximum(np.abs(x) - th, 0.0)
    ok = bool(np.array_equal(got, want))
    return CheckResult("soft-threshold-law", ok, "sign(x)*max(|x|-th,0) pointwise" if ok else "mismatch")


def _check_sqtwolog() -> CheckResult:
    band = np.tile([-1.0, 1.0], 512)  # mean 0, mean absolute deviation exactly 1
    got = sqtwolog_threshold(band, "mean_abs_dev")
    want = float(np.sqrt(2.0 * np.log(1024.0)))
    err = abs(got - want)
    return CheckResult("universal-threshold", err < 1e-9, f"|th - sqrt(2 ln 1024)| = {err:.3e}")


def _reference_peaks(x: np.ndarray, min_height: float, min_dist: int) -> list:
    """Brute-force greedy reference used only for the self-check."""
    n = len(x)
    runs = []
    start = 0
    for i in range(1, n + 1):
        if i == n or x[i] != x[start]:
            runs.append((start, i - 1))
            start = i
    cands = []
    for left, right in runs:
        left_ok = left == 0 or x[left - 1] < x[left]
        right_ok = right == n - 1 or x[right + 1] < x[right]
        if left_ok and right_ok and x[left] >= min_height:
            cands.append(((left + right) // 2, x[left]))
    cands.sort(key=lambda c: (-c[1], c[0]))
    kept = []
    for pos, _ in cands:
        if all(abs(pos - q) >= min_dist for q in kept):
            kept.append(pos)
    return sorted(kept)


def _check_peak_detector() -> CheckResult:
    rng = np.random.default_rng(_SEED + 3)
    config = PipelineConfig()
    for trial in range(100):
        length = int(rng.integers(4, 64))
        x = rng.integers(0, 5, length).astype(np.float64)
        fs = 20.0  # 0.65 s -> exactly 13 samples
        min_dist = int(round(config.min_peak_distance_s * fs))
        seg = AudioSegment(x, fs, 0.0)
        got = np.round(detect_peaks(seg, config).beat_times_s * fs).astype(int).tolist()
        want = _reference_peaks(x, config.min_peak_height, min_dist)
        if got != want:
            return CheckResult(
                "peak-detector-oracle", False,
                f"trial {trial}: got {got}, reference {want}",
            )
    return CheckResult("peak-detector-oracle", True, "100 random signals matched")


def _check_metric_identities() -> CheckResult:
    from .evaluation import PairedSample, metrics

    rng = np.random.default_rng(_SEED + 4)
    for trial in range(50):
        n = int(rng.integers(1, 40))
        ecg = rng.uniform(40, 120, n)
        audio = ecg + rng.normal(0, 5, n)
        audio = np.clip(audio, 1.0, None)
        pairs = [PairedSample(float(i), float(a), float(e))
                 for i, (a, e) in enumerate(zip(audio, ecg))]
        rep = metrics(pairs)
        swapped = metrics([PairedSample(p.time_s, p.hr_ecg, p.hr_audio) for p in pairs])
        if rep.mae_bpm < abs(rep.mde_bpm) - 1e-12:
            return CheckResult("metric-identities", False, f"trial {trial}: MAE < |MDE|")
        if abs(swapped.mde_bpm + rep.mde_bpm) > 1e-9:
            return CheckResult("metric-identities", False, f"trial {trial}: swap does not negate MDE")
        if abs(swapped.mae_bpm - rep.mae_bpm) > 1e-9:
            return CheckResult("metric-identities", False, f"trial {trial}: swap changes MAE")
    return CheckResult("metric-identities", True, "MAE >= |MDE|, swap symmetry held")


def run_checks(basis: WaveletBasis | None = None) -> list:
    """Run every embedded check; pass a corrupted basis to watch the
    integrity checks catch it (fault-injection hook)."""
    if basis is None:
        basis = WaveletBasis.coif4()
    results = [_check_basis(basis)]
    if results[0].passed:
        results.append(_check_reconstruction(basis))
        results.append(_check_parseval(basis))
    else:
        results.append(CheckResult("perfect-reconstruction", False, "skipped: basis invalid"))
        results.append(CheckResult("parseval-energy", False, "skipped: basis invalid"))
    results.append(_check_filter_response())
    results.append(_check_soft_threshold())
    results.append(_check_sqtwolog())
    results.append(_check_peak_detector())
    results.append(_check_metric_identities())
    return results
