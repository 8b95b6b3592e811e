"""Identification of forced oscillators with response-dependent inertia."""

from .errors import (
    AlignmentError,
    AliasingError,
    ConfigError,
    DecompositionError,
    DivergenceError,
    InsufficientExcitationError,
    InvalidInputError,
    NoDataError,
    OutOfValidityError,
    ParameterError,
    SchemaError,
    TooShortError,
    VarInertiaError,
)
from .identification import (
    BackboneCurve,
    GsSeries,
    ModalTrajectory,
    StiffnessFit,
    compute_g_s,
    estimate_stiffness,
    identify_forcevib,
    identify_forcevibmod,
    stitch_backbone,
    trim_transients,
)
from .oracles import BackboneSample, LpBackbone, free_oscillation_period, lp_backbone_eval, sweep_free_backbone
from .pipeline import IdentificationResult, NoiseEnvelope, PipelineConfig, identify, noise_study
from .scenario import Scenario, load_scenario, parse_scenario, simulate_scenario
from .signal_core import (
    AnalyticRecord,
    HvdConfig,
    TimeSeries,
    differentiate,
    hilbert_transform,
    hvd_largest_component,
    make_analytic,
)
from .simulators import (
    ChirpParams,
    RlcParams,
    SimpleOscillatorParams,
    StickSlipParams,
    add_noise,
    chirp,
    simulate_rlc,
    simulate_simple,
    simulate_stick_slip,
)

__all__ = [name for name in dir() if not name.startswith("_")]
