"""The embedded checks must pass on a healthy build and catch a broken one."""

import dataclasses
import time

from abshr.selftest import run_checks
from abshr.wavelet import WaveletBasis


def test_clean_build_passes_every_check():
    results = run_checks()
    assert len(results) >= 8
    assert all(res.passed for res in results), [r for r in results if not r.passed]
    names = [res.name for res in results]
    assert len(names) == len(set(names))
    assert all(res.detail for res in results)


def test_checks_finish_quickly():
    t0 = time.perf_counter()
    run_checks()
    assert time.perf_counter() - t0 < 30.0


def test_corrupted_coefficients_are_caught_by_name():
    good = WaveletBasis.coif4()
    lo = good.decomposition_lowpass.copy()
    lo[0] += 1e-6  # one bad digit in one tap
    bad = dataclasses.replace(good, decomposition_lowpass=lo)
    by_name = {res.name: res for res in run_checks(basis=bad)}
    assert not by_name["wavelet-basis-integrity"].passed
    # downstream transform checks must not report success off a broken basis
    assert not by_name["perfect-reconstruction"].passed
    assert not by_name["parseval-energy"].passed
    # unrelated checks still run
    assert by_name["butterworth-response"].passed
    assert by_name["peak-detector-oracle"].passed
