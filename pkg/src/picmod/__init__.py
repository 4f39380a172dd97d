"""picmod: digital twin and control stack for cascaded-MZI modulator arrays."""

from .core import (
    ChipConfig,
    Coupler,
    ModulatorChannel,
    MziStage,
    PhaseShifter,
    Port,
    ShifterRole,
    SweepResult,
    channel_transmission,
    channel_transmission_equal,
    link_budget,
    make_calibrated_channel,
    power_split_for_er,
    stage_transmission,
    sweep_channel,
)
from .dynamics import (
    ActuatorResponse,
    KernelKind,
    OpticalTrace,
    Waveform,
    apply_actuator,
    measure_rise_time,
    synthesize_kernel,
    trace_optical,
)
from .beams import (
    BeamArray,
    BeamProfile,
    SiteLeakage,
    intensity_profile,
    make_beam_array,
    site_leakage_report,
    target_plane_profile,
)
from .calibration import calibrate
from .config import ExperimentConfig
from .crosstalk import (
    ChannelState,
    CrosstalkGraph,
    ModState,
    Scenario,
    crosstalk_matrix,
    nearest_neighbor_graph,
    nn_mean_db,
    predict_scenario_c_db,
    victim_output,
)
from .errors import PicmodError
from .fitting import VpiFit, fit_v_pi
from .lock import (
    LockController,
    LockRunResult,
    PulseStats,
    noisy_pulse_experiment,
    run_lock,
    transmission_at_phase,
)
from .noise import DetectorModel, NoiseModel, OuParams, measure, sample_ou_path
from .reports import RunReport, load_report
from .waveforms import (
    DynamicExtinction,
    EdgeShape,
    PredistortionProblem,
    PredistortionSolution,
    PulseSpec,
    dynamic_extinction,
    make_pulse_train,
    predistort,
    pulse_areas,
    switch_off_target_phase,
    target_phase_from_power,
)

__version__ = "0.1.0"
