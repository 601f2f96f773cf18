"""Scalar PID with an integral clamp and output saturation."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import InvalidInputError


def clamp(x: float, limit: float) -> float:
    return max(-limit, min(limit, x))


@dataclass
class PidController:
    kp: float
    ki: float = 0.0
    kd: float = 0.0
    output_limit: float = math.inf
    integral_limit: float = math.inf
    integral: float = 0.0
    prev_error: float | None = None

    def __post_init__(self):
        if not (self.output_limit > 0 and self.integral_limit >= 0):
            raise InvalidInputError("PID output limit must be positive and integral limit non-negative")

    def reset(self) -> None:
        self.integral = 0.0
        self.prev_error = None


def pid_step(ctrl: PidController, error: float, dt: float) -> float:
    """Advance ``ctrl`` by one sample and return the saturated command.

    The derivative term is zero on the first sample after a reset so a
    setpoint jump does not kick the output.
    """
    if not dt > 0:
        raise InvalidInputError(f"dt must be positive, got {dt}")
    ctrl.integral = clamp(ctrl.integral + error * dt, ctrl.integral_limit)
    deriv = 0.0 if ctrl.prev_error is None else (error - ctrl.prev_error) / dt
    ctrl.prev_error = error
    return clamp(ctrl.kp * error + ctrl.ki * ctrl.integral + ctrl.kd * deriv, ctrl.output_limit)
