"""Online ESR and capacitance estimation for boost converter output capacitors."""

from .acquisition import FrameMeans, SegmentedFrame, compute_means, segment_states
from .config import NOISE_PROFILES, DESIGN_POINT, ExperimentConfig, load_config, sim_config
from .diagnostics import HealthBaseline, HealthMonitor, HealthReport, Status, Thresholds, assess
from .estimator import (
    CalibrationOffset,
    EsrDenominator,
    EstimateResult,
    EstimateStats,
    EstimatorConfig,
    RegressionResult,
    calibrate_offset,
    estimate_c,
    estimate_esr,
    estimate_frame,
    estimate_l,
    estimate_rload,
    linear_regression,
    run_batch,
)
from .frame import AcquisitionFrame, read_frame, write_frame
from .sim import (
    ConverterParams,
    DegradationState,
    SimConfig,
    apply_degradation,
    simulate,
    simulate_clean,
)

__version__ = "0.1.0"
