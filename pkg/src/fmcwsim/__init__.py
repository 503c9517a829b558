"""fmcwsim: indoor FMCW radar simulator for human-motion micro-Doppler data.

Simulates the received frames of a monostatic chirp radar watching a walking
person in a box room, processes them into micro-Doppler spectrograms, fits
the interference evolution rate against reference data, and batch-generates
labelled spectrogram datasets for motion-recognition experiments.
"""

from .calibration import (
    CalibrationRecord,
    RhoGrid,
    average_pmf,
    default_rho_grid,
    fit_rho,
    kl_divergence,
    lut_lookup,
    lut_store,
)
from .channel import (
    EvolutionState,
    QdConfig,
    TapVector,
    apply_channel,
    compose,
    evolve_interference,
    image_clusters,
    primitive_channel,
    qd_snapshot,
    required_taps,
)
from .dataset import (
    ClassSpec,
    DatasetManifest,
    DspConfig,
    JitterConfig,
    Scenario,
    baseline_scenario,
    calibration_scenario,
    dataset_scenario,
    default_classes,
    generate_dataset,
    load_scenario,
    read_manifest,
    save_scenario,
    simulate_iq,
    simulate_sample,
)
from .dsp import (
    GrayImage,
    Pmf,
    Spectrogram,
    dechirp_conj,
    gray_pmf,
    load_pgm,
    load_pmf_csv,
    save_pgm,
    save_pmf_csv,
    slow_time,
    stft_spectrogram,
    svd_denoise,
    to_grayscale,
)
from .errors import BoundsError, ConfigError, FormatError, SimulationError
from .kinematics import (
    GaitConfig,
    PrimitiveTrack,
    SubjectSpec,
    Trajectory,
    build_walker,
    primitive_gain,
)
from .waveform import (
    IQMatrix,
    RadarParams,
    SampledWaveform,
    SPEED_OF_LIGHT,
    fmcw_chirp,
    load_iq,
    sample_frames,
    save_iq,
)

__version__ = "0.1.0"
