"""Hawkes processes with a Weibull base intensity: simulation, EM learning,
evaluation and Granger-causality analysis."""
from .basis import BasisConfig, basis_integral, basis_value, impact_integral, impact_value
from .intensity import (
    EventSequence,
    ModelParams,
    base_integral,
    base_intensity,
    conditional_intensity,
    log_likelihood,
    weibull_event_density,
)
from .learn import FitConfig, FitReport, config_for_mode, em_fit
from .simulate import GroundTruth, SimConfig, synth_protocol, thinning_simulate

__all__ = [
    "BasisConfig", "basis_value", "basis_integral", "impact_value", "impact_integral",
    "EventSequence", "ModelParams", "base_intensity", "base_integral",
    "weibull_event_density", "conditional_intensity", "log_likelihood",
    "FitConfig", "FitReport", "config_for_mode", "em_fit",
    "GroundTruth", "SimConfig", "synth_protocol", "thinning_simulate",
]
