"""Deterministic closed-loop simulator for the autonomous grasping mission."""

from .config import MissionConfig, config_from_dict, dump_config, load_config, validate_config
from .pid import PidController, pid_step
from .scene import Camera, Phase, TargetState, WorldState, render_patch, sense
from .sim import LOG_COLUMNS, MissionLog, Simulator, run, standard_scenarios

__all__ = [
    "Camera",
    "LOG_COLUMNS",
    "MissionConfig",
    "MissionLog",
    "Phase",
    "PidController",
    "Simulator",
    "TargetState",
    "WorldState",
    "config_from_dict",
    "dump_config",
    "load_config",
    "pid_step",
    "render_patch",
    "run",
    "sense",
    "standard_scenarios",
    "validate_config",
]
