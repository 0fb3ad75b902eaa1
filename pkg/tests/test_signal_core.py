"""Sample-level primitives: segments, stats, Butterworth design, zero-phase
filtering, resampling, WAV round trips."""
import numpy as np
import pytest
from scipy.io import wavfile

from abshr.signal_core import (
    AudioSegment,
    NormalizationStats,
    compute_stats,
    design_butterworth_lowpass,
    filter_zero_phase,
    read_wav,
    resample,
    write_wav,
    zscore,
)


# ---------------------------------------------------------------------------
# AudioSegment


def test_segment_basic_properties():
    seg = AudioSegment(np.zeros(8000), 4000.0, start_time_s=2.0)
    assert seg.n_samples == 8000
    assert seg.duration_s == 2.0
    t = seg.time_axis()
    assert t[0] == 2.0
    assert t[1] - t[0] == pytest.approx(1.0 / 4000.0)


def test_segment_rejects_bad_input():
    with pytest.raises(ValueError):
        AudioSegment(np.zeros((4, 4)), 4000.0)
    with pytest.raises(ValueError):
        AudioSegment(np.array([0.0, np.nan]), 4000.0)
    with pytest.raises(ValueError):
        AudioSegment(np.array([0.0, np.inf]), 4000.0)
    with pytest.raises(ValueError):
        AudioSegment(np.zeros(4), 0.0)


# ---------------------------------------------------------------------------
# stats / z-score


def _two_pass_stats(x):
    # independent reference: explicit two-pass mean and population std
    mean = sum(float(v) for v in x) / len(x)
    var = sum((float(v) - mean) ** 2 for v in x) / len(x)
    return mean, var ** 0.5


def test_stats_constant_and_symmetric_pair():
    assert compute_stats(AudioSegment([1.0, 1.0, 1.0, 1.0], 10.0)) == NormalizationStats(1.0, 0.0)
    assert compute_stats(AudioSegment([-1.0, 1.0], 10.0)) == NormalizationStats(0.0, 1.0)


def test_stats_match_two_pass_reference():
    rng = np.random.default_rng(7)
    x = rng.standard_normal(4096) * 3.0 + 1.5
    got = compute_stats(AudioSegment(x, 100.0))
    mean, std = _two_pass_stats(x)
    assert got.mean == pytest.approx(mean, rel=1e-12)
    assert got.std_dev == pytest.approx(std, rel=1e-12)


def test_zscore_examples_and_round_trip():
    seg = AudioSegment([0.0, 2.0], 10.0)
    out = zscore(seg, NormalizationStats(1.0, 1.0))
    assert np.array_equal(out.samples, [-1.0, 1.0])

    rng = np.random.default_rng(8)
    v = AudioSegment(rng.standard_normal(512) * 4.0 - 2.0, 10.0)
    stats = compute_stats(v)
    z = zscore(v, stats)
    zstats = compute_stats(z)
    assert zstats.mean == pytest.approx(0.0, abs=1e-9)
    assert zstats.std_dev == pytest.approx(1.0, abs=1e-9)
    # idempotence on already-standardized input
    again = zscore(z, zstats)
    assert np.allclose(again.samples, z.samples, atol=1e-12)
    # un-normalizing recovers the original
    back = z.samples * stats.std_dev + stats.mean
    assert np.allclose(back, v.samples, rtol=1e-10)


def test_zscore_rejects_zero_std():
    with pytest.raises(ValueError):
        zscore(AudioSegment(np.ones(16), 10.0), NormalizationStats(1.0, 0.0))


# ---------------------------------------------------------------------------
# Butterworth design


def _analytic_magnitude(f_hz, order, cutoff_hz, fs_hz):
    # bilinear design: |H|^2 = 1 / (1 + (tan(pi f/fs) / tan(pi fc/fs))^(2N))
    ratio = np.tan(np.pi * f_hz / fs_hz) / np.tan(np.pi * cutoff_hz / fs_hz)
    return 1.0 / np.sqrt(1.0 + ratio ** (2 * order))


def test_butterworth_dc_and_cutoff():
    filt = design_butterworth_lowpass(5, 200.0, 4000.0)
    h0, hc = filt.magnitude([0.0, 200.0])
    assert abs(h0 - 1.0) < 1e-9
    assert abs(filt.dc_gain() - 1.0) < 1e-9
    assert abs(hc - 1.0 / np.sqrt(2.0)) < 1e-6


@pytest.mark.parametrize("f_hz", [50.0, 100.0, 400.0, 1000.0, 1800.0])
def test_butterworth_matches_analytic_prototype(f_hz):
    filt = design_butterworth_lowpass(5, 200.0, 4000.0)
    got = filt.magnitude([f_hz])[0]
    assert got == pytest.approx(_analytic_magnitude(f_hz, 5, 200.0, 4000.0), rel=1e-8)


def test_butterworth_stability_sweep():
    for order in range(1, 11):
        for ratio in (0.002, 0.01, 0.1, 0.5, 0.9, 0.99, 0.998):
            filt = design_butterworth_lowpass(order, ratio * 2000.0, 4000.0)
            assert filt.is_stable(), (order, ratio)


def test_butterworth_rejects_bad_arguments():
    with pytest.raises(ValueError):
        design_butterworth_lowpass(0, 200.0, 4000.0)
    with pytest.raises(ValueError):
        design_butterworth_lowpass(5, 2000.0, 4000.0)  # at Nyquist
    with pytest.raises(ValueError):
        design_butterworth_lowpass(5, -1.0, 4000.0)


# ---------------------------------------------------------------------------
# zero-phase filtering


def test_zero_phase_preserves_constant():
    filt = design_butterworth_lowpass(5, 200.0, 4000.0)
    seg = AudioSegment(np.full(4000, 3.25), 4000.0)
    out = filter_zero_phase(filt, seg)
    assert out.n_samples == seg.n_samples
    assert out.sample_rate_hz == seg.sample_rate_hz
    assert np.allclose(out.samples, 3.25, atol=1e-9)


def test_zero_phase_passband_amplitude():
    """50 Hz tone through the 200 Hz design keeps its amplitude (the
    forward-backward pass applies |H|^2, which is still ~1 there)."""
    filt = design_butterworth_lowpass(5, 200.0, 4000.0)
    fs = 4000.0
    t = np.arange(int(8 * fs)) / fs
    out = filter_zero_phase(filt, AudioSegment(np.sin(2 * np.pi * 50.0 * t), fs))
    trim = out.samples[int(0.5 * fs):-int(0.5 * fs)]
    amp = np.sqrt(2.0) * np.std(trim)
    want = _analytic_magnitude(50.0, 5, 200.0, fs) ** 2
    assert amp == pytest.approx(want, rel=0.01)


def test_zero_phase_stopband_attenuation():
    filt = design_butterworth_lowpass(5, 200.0, 4000.0)
    fs = 4000.0
    t = np.arange(int(8 * fs)) / fs
    out = filter_zero_phase(filt, AudioSegment(np.sin(2 * np.pi * 1000.0 * t), fs))
    trim = out.samples[int(0.5 * fs):-int(0.5 * fs)]
    assert np.max(np.abs(trim)) < 1e-3


def test_zero_phase_keeps_even_symmetry():
    filt = design_butterworth_lowpass(5, 200.0, 4000.0)
    rng = np.random.default_rng(11)
    r = rng.standard_normal(2001)
    x = r + r[::-1]  # even-symmetric about the center sample
    out = filter_zero_phase(filt, AudioSegment(x, 4000.0)).samples
    core = out[3 * filt.order:-3 * filt.order]
    assert np.max(np.abs(core - core[::-1])) < 1e-8


def test_zero_phase_rejects_short_segment():
    filt = design_butterworth_lowpass(5, 200.0, 4000.0)
    with pytest.raises(ValueError, match="15"):
        filter_zero_phase(filt, AudioSegment(np.zeros(15), 4000.0))
    # one past the minimum is fine
    filter_zero_phase(filt, AudioSegment(np.zeros(16), 4000.0))


# ---------------------------------------------------------------------------
# resampling


def test_resample_exact_decimation_length():
    seg = AudioSegment(np.random.default_rng(0).standard_normal(16000), 8000.0)
    out = resample(seg, 4000.0)
    assert out.sample_rate_hz == 4000.0
    assert out.n_samples == 8000
    assert abs(out.duration_s - seg.duration_s) <= 1.0 / 4000.0


def test_resample_identity_at_same_rate():
    seg = AudioSegment(np.random.default_rng(1).standard_normal(4000), 4000.0)
    out = resample(seg, 4000.0)
    assert np.array_equal(out.samples, seg.samples)


def test_resample_non_integer_ratio_sine():
    fs0 = 44100.0
    t0 = np.arange(int(5 * fs0)) / fs0
    seg = AudioSegment(np.sin(2 * np.pi * 100.0 * t0), fs0)
    out = resample(seg, 4000.0)
    assert out.n_samples == int(np.ceil(seg.n_samples * 4000.0 / fs0))
    ref = np.sin(2 * np.pi * 100.0 * out.time_axis())
    trim = slice(1000, -1000)
    assert np.max(np.abs(out.samples[trim] - ref[trim])) < 0.01
    assert np.std(out.samples[trim]) == pytest.approx(np.std(ref[trim]), rel=0.01)


def test_resample_is_linear():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(20000)
    y = rng.standard_normal(20000)
    a, b = 2.5, -1.25
    lhs = resample(AudioSegment(a * x + b * y, 8000.0), 4000.0).samples
    rhs = (a * resample(AudioSegment(x, 8000.0), 4000.0).samples
           + b * resample(AudioSegment(y, 8000.0), 4000.0).samples)
    assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_resample_suppresses_out_of_band_content():
    # 3 kHz tone sits above the 2 kHz output Nyquist; >= 60 dB down after
    fs0 = 8000.0
    t0 = np.arange(int(4 * fs0)) / fs0
    out = resample(AudioSegment(np.sin(2 * np.pi * 3000.0 * t0), fs0), 4000.0)
    trim = out.samples[500:-500]
    assert np.sqrt(2.0) * np.std(trim) < 1e-3


def test_resample_rejects_upsampling():
    seg = AudioSegment(np.zeros(100), 4000.0)
    with pytest.raises(ValueError):
        resample(seg, 8000.0)
    with pytest.raises(ValueError):
        resample(seg, 0.0)


# ---------------------------------------------------------------------------
# WAV input/output


def test_wav_float32_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    seg = AudioSegment(rng.uniform(-1, 1, 5000), 4000.0)
    path = tmp_path / "a.wav"
    write_wav(path, seg, fmt="float32")
    back = read_wav(path)
    assert back.sample_rate_hz == 4000.0
    assert np.array_equal(back.samples, seg.samples.astype(np.float32).astype(np.float64))


def test_wav_pcm16_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    seg = AudioSegment(rng.uniform(-0.9, 0.9, 5000), 8000.0)
    path = tmp_path / "b.wav"
    write_wav(path, seg, fmt="pcm16")
    back = read_wav(path)
    assert np.max(np.abs(back.samples - seg.samples)) <= 0.5 / 32768.0 + 1e-12


def test_wav_rejects_multichannel(tmp_path):
    path = tmp_path / "stereo.wav"
    wavfile.write(path, 8000, np.zeros((100, 2), dtype=np.float32))
    with pytest.raises(ValueError, match="channel"):
        read_wav(path)


def test_wav_rejects_unsupported_dtype(tmp_path):
    path = tmp_path / "int32.wav"
    wavfile.write(path, 8000, np.zeros(100, dtype=np.int32))
    with pytest.raises(ValueError, match="int32"):
        read_wav(path)


def test_wav_rejects_low_rate(tmp_path):
    path = tmp_path / "slow.wav"
    wavfile.write(path, 2000, np.zeros(100, dtype=np.float32))
    with pytest.raises(ValueError, match="2000"):
        read_wav(path)


def test_wav_rejects_missing_and_empty(tmp_path):
    with pytest.raises(ValueError, match="not found"):
        read_wav(tmp_path / "nope.wav")
    empty = tmp_path / "empty.wav"
    empty.touch()
    with pytest.raises(ValueError, match="empty"):
        read_wav(empty)


def test_write_wav_rejects_unknown_format(tmp_path):
    seg = AudioSegment(np.zeros(10), 4000.0)
    with pytest.raises(ValueError):
        write_wav(tmp_path / "c.wav", seg, fmt="mp3")
