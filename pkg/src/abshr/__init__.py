"""Heart-rate extraction from abdominal audio.

The chain: resample to 4 kHz, slice into overlapping windows, z-score and
gate motion artifacts, Butterworth-lowpass, wavelet denoise, pick heart-sound
peaks, convert beat intervals to instantaneous and window-average heart rate,
and score the result against ECG R-peak ground truth.
"""

from .evaluation import (
    BlandAltmanRecord,
    EvalReport,
    PairedSample,
    RPeakAnnotations,
    aggregate,
    align,
    ecg_hr,
    ecg_window_hr,
    metrics,
    read_rpeaks,
    write_bland_altman_csv,
    write_report_json,
    write_rpeaks,
)
from .pipeline import (
    AnalysisWindow,
    BeatSeries,
    HrKind,
    HrSample,
    HrSeries,
    Missingness,
    PipelineConfig,
    PipelineResult,
    WindowRecord,
    WindowStatus,
    compute_ahr,
    compute_ihr,
    detect_peaks,
    load_config,
    postprocess_ahr,
    read_hr_csv,
    recount_missingness,
    run_pipeline,
    segment_windows,
    write_hr_csv,
    write_missingness_json,
)
from .signal_core import (
    AudioSegment,
    IirFilter,
    NormalizationStats,
    compute_stats,
    design_butterworth_lowpass,
    filter_zero_phase,
    read_wav,
    resample,
    write_wav,
    zscore,
)
from .synth import SynthOutput, SynthSpec, load_synth_spec, synthesize
from .wavelet import (
    ThresholdPolicy,
    WaveletBasis,
    WaveletDecomposition,
    denoise_window,
    dwt,
    idwt,
    max_decomposition_level,
    soft_threshold,
    sqtwolog_threshold,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisWindow",
    "AudioSegment",
    "BeatSeries",
    "BlandAltmanRecord",
    "EvalReport",
    "HrKind",
    "HrSample",
    "HrSeries",
    "IirFilter",
    "Missingness",
    "NormalizationStats",
    "PairedSample",
    "PipelineConfig",
    "PipelineResult",
    "RPeakAnnotations",
    "SynthOutput",
    "SynthSpec",
    "ThresholdPolicy",
    "WaveletBasis",
    "WaveletDecomposition",
    "WindowRecord",
    "WindowStatus",
    "aggregate",
    "align",
    "compute_ahr",
    "compute_ihr",
    "compute_stats",
    "denoise_window",
    "design_butterworth_lowpass",
    "detect_peaks",
    "dwt",
    "ecg_hr",
    "ecg_window_hr",
    "filter_zero_phase",
    "idwt",
    "load_config",
    "load_synth_spec",
    "max_decomposition_level",
    "metrics",
    "postprocess_ahr",
    "read_hr_csv",
    "read_rpeaks",
    "read_wav",
    "recount_missingness",
    "resample",
    "run_pipeline",
    "segment_windows",
    "soft_threshold",
    "sqtwolog_threshold",
    "synthesize",
    "write_bland_altman_csv",
    "write_hr_csv",
    "write_missingness_json",
    "write_report_json",
    "write_rpeaks",
    "write_wav",
    "zscore",
]
