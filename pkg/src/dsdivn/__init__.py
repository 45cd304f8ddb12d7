"""Segment-clustered vehicular SDN simulator with mobile controllers and fallback recovery."""

from .config import (ConfigError, FailureSpec, LinkModelParams, ProtocolTimers,
                     ScenarioConfig, MODES)
from .engine import EventLoop, SchedulingInPastError, seeded_stream
from .metrics import InstallSample, PdrWindow, RunReport, export_csv, mean_pdr_series
from .simulation import Simulation, run_simulation
from .experiments import run_distance_sweep, run_failure_experiment

__all__ = [
    "ConfigError", "FailureSpec", "LinkModelParams", "ProtocolTimers",
    "ScenarioConfig", "MODES", "EventLoop", "SchedulingInPastError",
    "seeded_stream", "InstallSample", "PdrWindow", "RunReport", "export_csv",
    "mean_pdr_series", "Simulation", "run_simulation", "run_distance_sweep",
    "run_failure_experiment",
]

__version__ = "0.1.0"
