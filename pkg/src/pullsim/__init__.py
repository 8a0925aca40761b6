"""Injection-pulling simulator and analysis toolkit.

Models a self-sustained oscillator pulled by an injected microwave tone,
transduces the beat through a four-level atomic susceptibility into an
optical intermediate-frequency record, and reduces either signal path to
spectrograms, peak tracks, pulling-law fits, and responsivity curves.
"""

from .analysis import (
    AdlerFit,
    PeakEstimate,
    PeakTrack,
    ResponsivityCurve,
    extract_peak,
    fit_adler_model,
    responsivity_numeric,
    track_peaks,
)
from .atoms import (
    DriveFields,
    LadderSystem,
    RfScene,
    autler_townes_splitting,
    cesium_defaults,
    if_photodetector_signal,
    lindblad_steady_state,
    probe_transmission,
    weak_probe_coherence,
)
from .cli import cli_main, main
from .config import config_from_dict, read_config
from .datasets import (
    SpectrogramDataset,
    atomic_write,
    power_averaged_dataset,
    read_responsivity_csv,
    read_spectrogram_csv,
    read_track_csv,
    write_fit_csv,
    write_responsivity_csv,
    write_spectrogram_csv,
    write_track_csv,
)
from .errors import ConvergenceError, DataError, PullsimError
from .experiment import (
    ComparisonReport,
    ConsistencyReport,
    SceneCalibration,
    ScenarioConfig,
    SweepResult,
    rf_atomic_consistency,
    run_detuning_comparison,
    run_power_sweep,
)
from .oscillator import (
    AdlerTrajectory,
    OscillatorParams,
    SoftPullModel,
    beat_frequency_analytic,
    integrate_adler,
    kappa_from_power,
    measure_beat_frequency,
    pulled_detuning_soft,
    responsivity_analytic,
    synthesize_baseband,
)
from .plotting import pgm_heatmap, svg_line_plot
from .signal import (
    BandpassSpec,
    Spectrogram,
    TimeSeries,
    bandpass,
    dbm_to_mw,
    mw_to_dbm,
    stft,
)

__version__ = "0.1.0"

__all__ = [
    "AdlerFit",
    "AdlerTrajectory",
    "BandpassSpec",
    "ComparisonReport",
    "ConsistencyReport",
    "ConvergenceError",
    "DataError",
    "DriveFields",
    "LadderSystem",
    "OscillatorParams",
    "PeakEstimate",
    "PeakTrack",
    "PullsimError",
    "ResponsivityCurve",
    "RfScene",
    "SceneCalibration",
    "ScenarioConfig",
    "SoftPullModel",
    "Spectrogram",
    "SpectrogramDataset",
    "SweepResult",
    "TimeSeries",
    "autler_townes_splitting",
    "bandpass",
    "beat_frequency_analytic",
    "cesium_defaults",
    "cli_main",
    "config_from_dict",
    "dbm_to_mw",
    "extract_peak",
    "fit_adler_model",
    "if_photodetector_signal",
    "integrate_adler",
    "kappa_from_power",
    "lindblad_steady_state",
    "main",
    "measure_beat_frequency",
    "mw_to_dbm",
    "pgm_heatmap",
    "atomic_write",
    "power_averaged_dataset",
    "probe_transmission",
    "pulled_detuning_soft",
    "read_config",
    "read_responsivity_csv",
    "read_spectrogram_csv",
    "read_track_csv",
    "responsivity_analytic",
    "responsivity_numeric",
    "rf_atomic_consistency",
    "run_detuning_comparison",
    "run_power_sweep",
    "stft",
    "svg_line_plot",
    "synthesize_baseband",
    "track_peaks",
    "weak_probe_coherence",
    "write_fit_csv",
    "write_responsivity_csv",
    "write_spectrogram_csv",
    "write_track_csv",
]
