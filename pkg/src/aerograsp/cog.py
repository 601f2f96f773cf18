"""Centre-of-gravity bookkeeping for the arm and the battery counterweight.

The battery rides a slider along the body x axis. The slider coordinate
``p_b`` points *opposite* body +x, so a positive ``p_b`` balances an arm
reaching forward and the residual moment is ``sum(m_i x_i) - m_b p_b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import InvalidInputError
from .kinematics import ArmGeometry, JointState
from .transforms import RigidTransform, dh_transform

Vec3 = tuple[float, float, float]

FD_STEP = 1e-6
SENSITIVITY_FLOOR = 1e-9

# total arm mass and battery mass of the reference airframe
ARM_MASS = 0.459
BATTERY_MASS = 0.525


@dataclass(frozen=True)
class MassModel:
    """Masses in kg; ``link_cogs[i]`` is link i's CoG in its own link frame.

    Index 2 is the gripper payload (the grasped object), zero when empty.
    """

    link_masses: tuple[float, float, float]
    link_cogs: tuple[Vec3, Vec3, Vec3]
    battery_mass: float

    def __post_init__(self):
        masses = tuple(float(m) for m in self.link_masses)
        cogs = tuple(tuple(float(v) for v in c) for c in self.link_cogs)
        if len(masses) != 3 or len(cogs) != 3 or any(len(c) != 3 for c in cogs):
            raise InvalidInputError("mass model needs three link masses and three 3-D CoG offsets")
        if any(not math.isfinite(m) or m < 0 for m in masses + (float(self.battery_mass),)):
            raise InvalidInputError("masses must be finite and non-negative")
        object.__setattr__(self, "link_masses", masses)
        object.__setattr__(self, "link_cogs", cogs)
        object.__setattr__(self, "battery_mass", float(self.battery_mass))

    @classmethod
    def default(cls, geom: ArmGeometry, payload: float = 0.0) -> "MassModel":
        """Arm mass split evenly over the two links, CoGs at mid-link."""
        half = ARM_MASS / 2
        return cls(
            (half, half, payload),
            ((-geom.l1 / 2, 0.0, 0.0), (0.0, 0.0, geom.l2 / 2), (0.0, 0.0, 0.0)),
            BATTERY_MASS,
        )

    def with_payload(self, mass: float) -> "MassModel":
        return replace(self, link_masses=(self.link_masses[0], self.link_masses[1], float(mass)))


# D-H rows (theta, d, a, alpha). Links 1-2 are the planar pair; the last two
# rows put joint 3 on link 2's axis so it rolls the gripper without moving the
# end point.
def dh_table(geom: ArmGeometry, q: JointState) -> list[tuple[float, float, float, float]]:
    return [
        (q.theta1, 0.0, geom.l1, 0.0),
        (q.theta2 + math.pi / 2, 0.0, 0.0, math.pi / 2),
        (q.theta3, geom.l2, 0.0, 0.0),
    ]


def link_transforms(geom: ArmGeometry, q: JointState) -> list[RigidTransform]:
    """``T_i^0`` for i = 1..3: link frames expressed in the fixed-arm frame."""
    out = []
    t = RigidTransform.identity()
    for row in dh_table(geom, q):
        t = t @ dh_transform(*row)
        out.append(t)
    return out


def link_cog_in_body(t0b: RigidTransform, ti0: RigidTransform, cog_link: Sequence[float]) -> np.ndarray:
    p = np.append(np.asarray(cog_link, dtype=float), 1.0)
    return (t0b.matrix @ ti0.matrix @ p)[:3]


def body_cogs(
    geom: ArmGeometry, model: MassModel, q: JointState, t0b: RigidTransform | None = None
) -> list[np.ndarray]:
    t0b = t0b if t0b is not None else RigidTransform.identity()
    return [link_cog_in_body(t0b, ti0, c) for ti0, c in zip(link_transforms(geom, q), model.link_cogs)]


def battery_position(model: MassModel, cogs: Sequence[Sequence[float]]) -> float:
    """Slider position that cancels the arm's x-moment."""
    if not model.battery_mass > 0:
        raise InvalidInputError("battery mass must be positive to act as a counterweight")
    moment = sum(m * c[0] for m, c in zip(model.link_masses, cogs))
    return moment / model.battery_mass


def net_x_moment(model: MassModel, cogs: Sequence[Sequence[float]], p_b: float) -> float:
    """Residual first moment about the body centre along x (kg*m)."""
    return sum(m * c[0] for m, c in zip(model.link_masses, cogs)) - model.battery_mass * p_b


def clamp_slider(p_b: float, p_max: float) -> tuple[float, bool]:
    """Clamp to the rail ``[-p_max, p_max]``; the flag reports saturation."""
    if p_b > p_max:
        return p_max, True
    if p_b < -p_max:
        return -p_max, True
    return p_b, False


def battery_position_for_pose(
    geom: ArmGeometry, model: MassModel, q: JointState, t0b: RigidTransform | None = None
) -> float:
    return battery_position(model, body_cogs(geom, model, q, t0b))


def max_compensation_speed(
    slider_speed: float,
    geom: ArmGeometry,
    model: MassModel,
    q: JointState,
    joint: int,
    t0b: RigidTransform | None = None,
) -> float:
    """Fastest rate (rad/s) for ``joint`` (1-based) the slider can still follow."""
    if not slider_speed > 0:
        raise InvalidInputError(f"slider speed must be positive, got {slider_speed}")
    if joint not in (1, 2, 3):
        raise InvalidInputError(f"joint index must be 1, 2 or 3, got {joint}")
    angles = list(q.as_tuple())
    angles[joint - 1] += FD_STEP
    hi = battery_position_for_pose(geom, model, JointState(*angles), t0b)
    angles[joint - 1] -= 2 * FD_STEP
    lo = battery_position_for_pose(geom, model, JointState(*angles), t0b)
    slope = abs(hi - lo) / (2 * FD_STEP)
    return slider_speed / max(slope, SENSITIVITY_FLOOR)
