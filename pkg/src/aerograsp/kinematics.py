"""Planar two-link arm with a wrist roll: FK/IK, joint limits, rotor-downwash
zones and joint-space trajectories.

Arm-plane coordinates ``(x, y)`` live in the fixed-arm frame: ``x`` forward
along the body, ``y`` downward. ``theta3`` only turns the gripper and never
moves the planar end point.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .errors import InvalidInputError, JointLimitError, OutOfWorkspaceError

# slack on the reachable-annulus test for targets computed in floating point
REACH_EPS = 1e-12

DEFAULT_LIMITS = ((-math.pi / 2, math.pi / 2), (0.0, math.pi), (-math.pi, math.pi))


@dataclass(frozen=True)
class JointState:
    theta1: float = 0.0
    theta2: float = 0.0
    theta3: float = 0.0

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.theta1, self.theta2, self.theta3)


@dataclass(frozen=True)
class ArmGeometry:
    l1: float
    l2: float
    joint_limits: tuple[tuple[float, float], ...] = DEFAULT_LIMITS

    def __post_init__(self):
        if not (self.l1 > 0 and self.l2 > 0):
            raise InvalidInputError(f"link lengths must be positive, got l1={self.l1}, l2={self.l2}")
        limits = tuple((float(lo), float(hi)) for lo, hi in self.joint_limits)
        if len(limits) != 3 or any(lo > hi for lo, hi in limits):
            raise InvalidInputError(f"need three [min, max] joint limits, got {self.joint_limits}")
        lo2, hi2 = limits[1]
        if lo2 < 0.0 or hi2 > math.pi:
            raise InvalidInputError("theta2 limits must lie within [0, pi] (elbow-down branch)")
        object.__setattr__(self, "joint_limits", limits)

    @property
    def reach(self) -> float:
        return self.l1 + self.l2

    @property
    def inner_reach(self) -> float:
        return abs(self.l1 - self.l2)

    def check_limits(self, q: JointState, tol: float = 0.0) -> None:
        for i, (v, (lo, hi)) in enumerate(zip(q.as_tuple(), self.joint_limits), start=1):
            if v < lo - tol or v > hi + tol:
                raise JointLimitError(i, v, (lo, hi))

    def within_limits(self, q: JointState, tol: float = 0.0) -> bool:
        try:
            self.check_limits(q, tol)
        except JointLimitError:
            return False
        return True


def forward(geom: ArmGeometry, q: JointState) -> tuple[float, float, float]:
    """End point ``(x0, y0)`` in the arm plane plus the wrist angle."""
    a12 = q.theta1 + q.theta2
    x = geom.l1 * math.cos(q.theta1) + geom.l2 * math.cos(a12)
    y = geom.l1 * math.sin(q.theta1) + geom.l2 * math.sin(a12)
    return x, y, q.theta3


def is_reachable(geom: ArmGeometry, target: Sequence[float]) -> bool:
    r = math.hypot(target[0], target[1])
    return geom.inner_reach - REACH_EPS <= r <= geom.reach + REACH_EPS and r > 0.0


def inverse(geom: ArmGeometry, target: Sequence[float], theta3: float = 0.0, check_limits: bool = True) -> JointState:
    """Elbow-down IK: ``theta2`` is always taken from ``[0, pi]``.

    Raises :class:`OutOfWorkspaceError` outside the reachable annulus and
    :class:`JointLimitError` if the solution violates a limit.
    """
    x, y = float(target[0]), float(target[1])
    r2 = x * x + y * y
    r = math.sqrt(r2)
    if not is_reachable(geom, (x, y)):
        raise OutOfWorkspaceError(
            f"target ({x:.6g}, {y:.6g}) at distance {r:.6g} outside [{geom.inner_reach:.6g}, {geom.reach:.6g}]"
        )
    l1, l2 = geom.l1, geom.l2
    c2 = (r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
    theta2 = math.acos(min(1.0, max(-1.0, c2)))
    # equals acos((r^2 + l1^2 - l2^2) / (2 l1 r)) exactly, but stays consistent
    # with the rounded theta2 near the annulus edges where acos is ill-conditioned
    beta = math.atan2(l2 * math.sin(theta2), l1 + l2 * math.cos(theta2))
    theta1 = math.atan2(y, x) - beta
    if theta1 < -math.pi:
        theta1 += 2.0 * math.pi
    q = JointState(theta1, theta2, theta3)
    if check_limits:
        geom.check_limits(q, tol=1e-12)
    return q


# --- rotor downwash ----------------------------------------------------------------


class FlowZone(str, Enum):
    WEAK = "weak"
    STRONG = "strong"


@dataclass(frozen=True)
class FlowModel:
    """Radial downwash profile under the airframe (metres from the body centre)."""

    inner_weak: float = 0.08
    peak: float = 0.21
    outer_weak: float = 0.30

    def __post_init__(self):
        if not (0.0 < self.inner_weak < self.peak < self.outer_weak):
            raise InvalidInputError(
                f"flow model needs 0 < inner_weak < peak < outer_weak, got "
                f"{self.inner_weak}, {self.peak}, {self.outer_weak}"
            )


def flow_zone(model: FlowModel, radial_distance: float) -> FlowZone:
    if radial_distance < 0 or not math.isfinite(radial_distance):
        raise InvalidInputError(f"radial distance must be a non-negative number, got {radial_distance}")
    if radial_distance < model.inner_weak or radial_distance > model.outer_weak:
        return FlowZone.WEAK
    return FlowZone.STRONG


@dataclass(frozen=True)
class WorkspaceSample:
    x: float
    y: float
    zone: FlowZone
    reachable: bool


def body_radial_distance(point: Sequence[float], arm_mount: Sequence[float]) -> float:
    """Horizontal distance from the body centre of an arm-plane point."""
    return abs(arm_mount[0] + point[0])


def workspace(
    geom: ArmGeometry,
    model: FlowModel,
    arm_mount: Sequence[float] = (0.0, 0.0),
    resolution: float = 0.01,
) -> list[WorkspaceSample]:
    """Grid over the arm's square bounding region, row by row (y, then x).

    ``reachable`` means inside the annulus *and* an IK solution within joint
    limits exists.
    """
    if not resolution > 0:
        raise InvalidInputError(f"resolution must be positive, got {resolution}")
    r = geom.reach
    n = int(math.floor(2.0 * r / resolution + 1e-9)) + 1
    coords = [-r + i * resolution for i in range(n)]
    out = []
    for y in coords:
        for x in coords:
            ok = True
            try:
                inverse(geom, (x, y))
            except (OutOfWorkspaceError, JointLimitError):
                ok = False
            zone = flow_zone(model, body_radial_distance((x, y), arm_mount))
            out.append(WorkspaceSample(x, y, zone, ok))
    return out


def workspace_to_csv(samples: Sequence[WorkspaceSample]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "zone", "reachable"])
    for s in samples:
        w.writerow([f"{s.x:.6f}", f"{s.y:.6f}", s.zone.value, int(s.reachable)])
    return buf.getvalue()


# --- trajectories --------------------------------------------------------------------


@dataclass(frozen=True)
class TrajectoryPoint:
    t: float
    q: JointState


def plan_trajectory(
    start: JointState,
    goal: JointState,
    max_joint_speed: float,
    dt: float,
    geom: ArmGeometry | None = None,
) -> list[TrajectoryPoint]:
    """Synchronised linear joint interpolation under a per-joint speed cap.

    Every joint finishes together; the slowest joint runs at ``max_joint_speed``
    and every step changes each joint by at most ``max_joint_speed * dt``.
    The first point is ``start`` at t=0 and the last is exactly ``goal``.
    """
    if not (max_joint_speed > 0 and dt > 0):
        raise InvalidInputError(f"speed and dt must be positive, got {max_joint_speed}, {dt}")
    if geom is not None:
        geom.check_limits(start, tol=1e-12)
        geom.check_limits(goal, tol=1e-12)
    a, b = start.as_tuple(), goal.as_tuple()
    span = max(abs(bj - aj) for aj, bj in zip(a, b))
    if span == 0.0:
        return [TrajectoryPoint(0.0, goal)]
    n = max(1, math.ceil(span / (max_joint_speed * dt) - 1e-12))
    out = []
    for i in range(n):
        f = i / n
        out.append(TrajectoryPoint(i * dt, JointState(*(aj + f * (bj - aj) for aj, bj in zip(a, b)))))
    out.append(TrajectoryPoint(n * dt, goal))
    return out
