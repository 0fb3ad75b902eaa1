"""Synthetic-recording generator: beat grid, SNR calibration, ground truth."""

import dataclasses
import json

import numpy as np
import pytest

from abshr.evaluation import RPeakAnnotations, ecg_hr
from abshr.pipeline import HrKind
from abshr.synth import (
    BURST_SIGMA_S,
    S2_DELAY_S,
    SPIKE_LEN,
    SynthSpec,
    load_synth_spec,
    spec_as_dict,
    synthesize,
)

FS = 4000.0


def _ramp_phase(t, b0, b1, duration):
    """Beats elapsed by time t under a linear profile, in closed form."""
    slope = (b1 - b0) / duration
    return (b0 * t + 0.5 * slope * t * t) / 60.0


def _ramp_beat_time(k, b0, b1, duration):
    """Invert _ramp_phase: the time of the k-th integer phase crossing."""
    slope = (b1 - b0) / duration
    if slope == 0.0:
        return 60.0 * k / b0
    # 0.5*slope*t^2 + b0*t - 60k = 0, positive root
    return (-b0 + np.sqrt(b0 * b0 + 120.0 * slope * k)) / slope


# ---------------------------------------------------------------------------
# spec validation and the rate profile


def test_bare_number_profile_becomes_single_knot():
    spec = SynthSpec(duration_s=10.0, hr_profile=75)
    assert spec.hr_profile == ((0.0, 75.0),)


def test_profile_interpolates_and_clamps():
    spec = SynthSpec(duration_s=20.0, hr_profile=((0.0, 60.0), (10.0, 90.0)))
    assert spec.hr_at(5.0) == pytest.approx(75.0)
    assert spec.hr_at(-1.0) == pytest.approx(60.0)
    assert spec.hr_at(15.0) == pytest.approx(90.0)


def test_rejects_nonpositive_duration():
    with pytest.raises(ValueError, match="duration_s"):
        SynthSpec(duration_s=0.0, hr_profile=60)


def test_rejects_rate_outside_supported_band():
    with pytest.raises(ValueError, match="outside"):
        SynthSpec(duration_s=10.0, hr_profile=130)
    with pytest.raises(ValueError, match="outside"):
        SynthSpec(duration_s=10.0, hr_profile=((0.0, 60.0), (5.0, 39.0)))


def test_rejects_unordered_knots():
    with pytest.raises(ValueError, match="strictly increasing"):
        SynthSpec(duration_s=10.0, hr_profile=((5.0, 60.0), (5.0, 70.0)))


def test_rejects_empty_profile():
    with pytest.raises(ValueError, match="at least one"):
        SynthSpec(duration_s=10.0, hr_profile=())


def test_rejects_bad_burst_parameters():
    with pytest.raises(ValueError, match="s1_amplitude"):
        SynthSpec(duration_s=10.0, hr_profile=60, s1_amplitude=0.0)
    with pytest.raises(ValueError, match="Nyquist"):
        SynthSpec(duration_s=10.0, hr_profile=60, s1_center_hz=2000.0)
    with pytest.raises(ValueError, match="nonnegative"):
        SynthSpec(duration_s=10.0, hr_profile=60, motion_spike_rate_per_min=-1.0)


def test_rejects_fractional_seed():
    with pytest.raises(ValueError, match="integer"):
        SynthSpec(duration_s=10.0, hr_profile=60, rng_seed=1.5)


# ---------------------------------------------------------------------------
# beat grid


def test_constant_60_bpm_puts_beats_on_integer_seconds():
    out = synthesize(SynthSpec(duration_s=10.0, hr_profile=60))
    assert len(out.true_beat_times_s) == 10
    assert np.allclose(out.true_beat_times_s, np.arange(10.0), atol=1.0 / FS)


def test_constant_75_bpm_beat_grid():
    out = synthesize(SynthSpec(duration_s=60.0, hr_profile=75))
    assert len(out.true_beat_times_s) == 75
    assert np.allclose(out.true_beat_times_s, 0.8 * np.arange(75.0), atol=1.0 / FS)


def test_ramp_beat_count_matches_integrated_rate():
    # 60 -> 90 BPM over 60 s; the closed-form phase integral says how many
    # integer crossings fit before the last sample.
    spec = SynthSpec(duration_s=60.0, hr_profile=((0.0, 60.0), (60.0, 90.0)))
    out = synthesize(spec)
    t_last = (int(round(spec.duration_s * FS)) - 1) / FS
    expected = int(np.floor(_ramp_phase(t_last, 60.0, 90.0, 60.0))) + 1
    assert expected == 75
    assert len(out.true_beat_times_s) == expected


def test_ramp_beat_times_match_analytic_crossings():
    out = synthesize(SynthSpec(duration_s=60.0, hr_profile=((0.0, 60.0), (60.0, 90.0))))
    ks = np.arange(len(out.true_beat_times_s))
    oracle = np.array([_ramp_beat_time(k, 60.0, 90.0, 60.0) for k in ks])
    assert np.allclose(out.true_beat_times_s, oracle, atol=1.0 / FS)


def test_first_beat_is_at_time_zero():
    out = synthesize(SynthSpec(duration_s=5.0, hr_profile=90))
    assert out.true_beat_times_s[0] == 0.0


def test_true_hr_is_interval_rate_at_interval_midpoints():
    out = synthesize(SynthSpec(duration_s=30.0, hr_profile=((0.0, 60.0), (30.0, 80.0))))
    beats = out.true_beat_times_s
    assert len(out.true_hr.samples) == len(beats) - 1
    mids = (beats[:-1] + beats[1:]) / 2.0
    bpm = 60.0 / np.diff(beats)
    assert np.allclose(out.true_hr.times(), mids)
    assert np.allclose(out.true_hr.bpms(), bpm)
    assert all(s.kind is HrKind.instantaneous for s in out.true_hr.samples)


def test_true_hr_tracks_the_requested_profile():
    spec = SynthSpec(duration_s=60.0, hr_profile=((0.0, 60.0), (60.0, 90.0)))
    out = synthesize(spec)
    profile = spec.hr_at(out.true_hr.times())
    assert np.max(np.abs(out.true_hr.bpms() - profile)) < 1.0
    # same thing measured the way an ECG channel would be scored
    ecg_view = ecg_hr(RPeakAnnotations(out.true_beat_times_s))
    assert np.max(np.abs(ecg_view.bpms() - spec.hr_at(ecg_view.times()))) < 1.0


# ---------------------------------------------------------------------------
# waveform content


def test_s1_burst_peaks_at_unit_amplitude_on_the_beat():
    out = synthesize(SynthSpec(duration_s=10.0, hr_profile=60, s2_amplitude=0.0))
    x = out.audio.samples
    assert x[4000] == pytest.approx(1.0, abs=1e-9)  # beat at t = 1 s
    # nothing between bursts: S1 support is +-4 sigma around each beat
    assert abs(x[2000]) < 1e-12


def test_s2_appears_at_fixed_delay_after_s1():
    out = synthesize(SynthSpec(duration_s=10.0, hr_profile=60))
    x = out.audio.samples
    c = int(round(S2_DELAY_S * FS))
    assert x[c] == pytest.approx(0.5, abs=1e-9)
    silent = synthesize(SynthSpec(duration_s=10.0, hr_profile=60, s2_amplitude=0.0))
    assert abs(silent.audio.samples[c]) < 1e-12


def test_respiration_modulates_burst_amplitude():
    # 15 breaths/min = 4 s period; beats on integer seconds sample the
    # sinusoid at its extremes.
    out = synthesize(SynthSpec(duration_s=20.0, hr_profile=60, s2_amplitude=0.0,
                               respiration_rate_bpm=15.0))
    x = out.audio.samples
    assert x[int(1.0 * FS)] == pytest.approx(1.1, abs=1e-9)
    assert x[int(3.0 * FS)] == pytest.approx(0.9, abs=1e-9)


def test_burst_support_matches_sigma():
    out = synthesize(SynthSpec(duration_s=10.0, hr_profile=60, s2_amplitude=0.0))
    x = out.audio.samples
    half = int(round(4.0 * BURST_SIGMA_S * FS))
    assert abs(x[4000 + half]) > 0.0
    assert x[4000 + half + 1] == 0.0


# ---------------------------------------------------------------------------
# noise scaling


def test_noise_power_hits_the_requested_snr():
    spec = SynthSpec(duration_s=30.0, hr_profile=75, gi_noise_snr_db=6.0, rng_seed=5)
    noisy = synthesize(spec).audio.samples
    clean = synthesize(dataclasses.replace(spec, gi_noise_snr_db=None)).audio.samples
    noise = noisy - clean
    measured = 10.0 * np.log10(np.mean(clean ** 2) / np.mean(noise ** 2))
    assert measured == pytest.approx(6.0, abs=1e-6)


def test_zero_db_means_equal_powers():
    spec = SynthSpec(duration_s=30.0, hr_profile=60, gi_noise_snr_db=0.0, rng_seed=9)
    noisy = synthesize(spec).audio.samples
    clean = synthesize(dataclasses.replace(spec, gi_noise_snr_db=None)).audio.samples
    noise = noisy - clean
    assert np.mean(noise ** 2) == pytest.approx(np.mean(clean ** 2), rel=1e-9)


def test_noise_is_bursty_not_stationary():
    spec = SynthSpec(duration_s=60.0, hr_profile=60, s1_amplitude=1.0,
                     gi_noise_snr_db=0.0, rng_seed=3)
    noisy = synthesize(spec).audio.samples
    clean = synthesize(dataclasses.replace(spec, gi_noise_snr_db=None)).audio.samples
    noise = noisy - clean
    # per-second variance should spread far more than white noise would
    var = np.var(noise.reshape(60, -1), axis=1)
    assert np.max(var) / np.min(var) > 2.0


# ---------------------------------------------------------------------------
# motion spikes


def test_spike_count_rounds_rate_times_duration():
    spec = SynthSpec(duration_s=120.0, hr_profile=75, motion_spike_rate_per_min=2.0,
                     rng_seed=7)
    out = synthesize(spec)
    assert len(out.spike_times_s) == 4
    half_min = SynthSpec(duration_s=60.0, hr_profile=75,
                         motion_spike_rate_per_min=1.5, rng_seed=7)
    assert len(synthesize(half_min).spike_times_s) == 2
    rare = SynthSpec(duration_s=60.0, hr_profile=75,
                     motion_spike_rate_per_min=0.4, rng_seed=7)
    assert len(synthesize(rare).spike_times_s) == 0


def test_spike_times_stay_inside_the_margins():
    spec = SynthSpec(duration_s=120.0, hr_profile=75, motion_spike_rate_per_min=3.0,
                     rng_seed=21)
    out = synthesize(spec)
    assert np.all(np.diff(out.spike_times_s) >= 0.0)
    assert np.all(out.spike_times_s >= 0.5 - 1e-3)
    assert np.all(out.spike_times_s <= 120.0 - 0.5 + 1e-3)


def test_spikes_are_clicks_of_twenty_sigma():
    spec = SynthSpec(duration_s=120.0, hr_profile=75, motion_spike_rate_per_min=2.0,
                     rng_seed=7)
    spiked = synthesize(spec)
    calm = synthesize(dataclasses.replace(spec, motion_spike_rate_per_min=0.0))
    diff = spiked.audio.samples - calm.audio.samples
    sigma = np.std(calm.audio.samples)
    for ts in spiked.spike_times_s:
        c = int(round(ts * FS))
        assert diff[c] == pytest.approx(20.0 * sigma, rel=1e-9)
        assert np.all(diff[c:c + SPIKE_LEN] != 0.0)
    # and nowhere else
    assert np.count_nonzero(diff) == SPIKE_LEN * len(spiked.spike_times_s)


# ---------------------------------------------------------------------------
# determinism


def test_same_spec_same_bytes():
    spec = SynthSpec(duration_s=20.0, hr_profile=70, gi_noise_snr_db=3.0,
                     motion_spike_rate_per_min=2.0, rng_seed=42)
    a = synthesize(spec)
    b = synthesize(spec)
    assert np.array_equal(a.audio.samples, b.audio.samples)
    assert np.array_equal(a.spike_times_s, b.spike_times_s)


def test_different_seeds_differ():
    spec = SynthSpec(duration_s=20.0, hr_profile=70, gi_noise_snr_db=3.0, rng_seed=1)
    a = synthesize(spec)
    b = synthesize(dataclasses.replace(spec, rng_seed=2))
    assert not np.array_equal(a.audio.samples, b.audio.samples)
    # the deterministic heart part is unchanged
    assert np.array_equal(a.true_beat_times_s, b.true_beat_times_s)


# ---------------------------------------------------------------------------
# spec files


def test_load_spec_from_json(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({
        "duration_s": 30.0,
        "hr_profile": [[0.0, 60.0], [30.0, 80.0]],
        "gi_noise_snr_db": 6.0,
        "rng_seed": 11,
    }))
    spec = load_synth_spec(path)
    assert spec.duration_s == 30.0
    assert spec.hr_profile == ((0.0, 60.0), (30.0, 80.0))
    assert spec.gi_noise_snr_db == 6.0
    assert spec.rng_seed == 11


def test_load_spec_from_toml(tmp_path):
    path = tmp_path / "spec.toml"
    path.write_text('duration_s = 10.0\nhr_profile = 75\nrng_seed = 2\n')
    spec = load_synth_spec(path)
    assert spec.hr_profile == ((0.0, 75.0),)
    assert spec.rng_seed == 2


def test_load_spec_rejects_unknown_keys(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"duration_s": 10.0, "hr_profile": 60, "snr": 3.0}))
    with pytest.raises(ValueError, match="snr"):
        load_synth_spec(path)


def test_load_spec_requires_duration_and_profile(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"duration_s": 10.0}))
    with pytest.raises(ValueError, match="hr_profile"):
        load_synth_spec(path)


def test_load_spec_rejects_malformed_profile(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"duration_s": 10.0, "hr_profile": "fast"}))
    with pytest.raises(ValueError, match="pairs"):
        load_synth_spec(path)


def test_load_spec_missing_file(tmp_path):
    with pytest.raises(ValueError, match="not found"):
        load_synth_spec(tmp_path / "nope.json")


def test_spec_round_trips_through_dict(tmp_path):
    spec = SynthSpec(duration_s=12.0, hr_profile=((0.0, 55.0), (12.0, 65.0)),
                     gi_noise_snr_db=1.5, respiration_rate_bpm=14.0, rng_seed=4)
    path = tmp_path / "echo.json"
    path.write_text(json.dumps(spec_as_dict(spec)))
    assert load_synth_spec(path) == spec
