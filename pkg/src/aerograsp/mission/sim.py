"""Closed-loop grasping mission: search, approach, grasp, deliver, drop.

The drone is a kinematic point with yaw. A cascaded PID (position then
velocity) produces a velocity command that the airframe realises through a
first-order lag. The arm follows joint trajectories whose speed is capped so
the battery slider can keep the centre of gravity over the body centre.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from ..cog import MassModel, battery_position_for_pose, clamp_slider, max_compensation_speed
from ..errors import NoDepthError
from ..geometry import wrap_angle
from ..kinematics import JointState, TrajectoryPoint, forward, inverse, plan_trajectory
from ..localization import TargetFix, grasp_waypoint, localize
from ..transforms import RigidTransform, arm_mount_transform, body_to_world
from .config import Gains, MissionConfig, validate_config
from .pid import PidController, clamp, pid_step
from .scene import Camera, Phase, TargetState, WorldState, sense

# joint-space samples used to bound the compensation-limited arm speed
SPEED_SAMPLES = 11

LOG_COLUMNS = (
    "t", "phase", "x", "y", "z", "yaw", "ex", "ey", "ez",
    "theta1", "theta2", "theta3", "p_b", "p_b_target", "saturated",
)


def _pid(g: Gains, limit: float = math.inf) -> PidController:
    return PidController(g.kp, g.ki, g.kd, output_limit=limit, integral_limit=g.integral_limit)


def _wrap_pi(a: float) -> float:
    """Reduce into ``[-pi, pi)``."""
    return (a + math.pi) % (2.0 * math.pi) - math.pi


@dataclass
class MissionLog:
    rows: list[tuple] = field(default_factory=list)
    phase_changes: list[tuple[float, str]] = field(default_factory=list)
    outcome: str = "running"
    grasp_error: float | None = None
    theta3: float | None = None
    target_theta: float | None = None
    success_tolerance: float = 0.01
    saturated_ticks: int = 0

    @property
    def ticks(self) -> int:
        return len(self.rows)

    @property
    def success(self) -> bool:
        return self.outcome == "done" and self.grasp_error is not None and self.grasp_error <= self.success_tolerance

    def column(self, name: str) -> list:
        i = LOG_COLUMNS.index(name)
        return [r[i] for r in self.rows]

    def summary(self) -> dict:
        return {
            "success": self.success,
            "outcome": self.outcome,
            "grasp_error": self.grasp_error,
            "theta3": self.theta3,
            "target_theta": self.target_theta,
            "ticks": self.ticks,
            "sim_time": self.rows[-1][0] if self.rows else 0.0,
            "slider_saturated_ticks": self.saturated_ticks,
            "phase_changes": [[t, p] for t, p in self.phase_changes],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        w.writerows(self.rows)
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"

    def write(self, directory: str | Path) -> tuple[Path, Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        csv_path, json_path = d / "mission.csv", d / "summary.json"
        csv_path.write_text(self.to_csv())
        json_path.write_text(self.to_json())
        return csv_path, json_path


class Simulator:
    """Owns the controllers, the arm trajectory queue and the current world snapshot."""

    def __init__(self, config: MissionConfig, seed: int | None = None):
        validate_config(config)
        self.cfg = config
        self.rng = np.random.default_rng(config.seed if seed is None else seed)
        self.geom = config.geometry()
        self.t0b = arm_mount_transform(config.arm.mount_forward, config.arm.mount_down)
        cam = config.camera
        self.camera = Camera(cam.width, cam.height, cam.focal, RigidTransform.translation(*cam.offset))
        l1, l2 = config.arm.l1, config.arm.l2
        self.empty_model = MassModel(
            (config.mass.link_masses[0], config.mass.link_masses[1], 0.0),
            ((-l1 / 2, 0.0, 0.0), (0.0, 0.0, l2 / 2), (0.0, 0.0, 0.0)),
            config.mass.battery_mass,
        )
        ctl = config.control
        self.pos_pid = [_pid(ctl.position) for _ in range(3)]
        self.vel_pid = [_pid(ctl.velocity) for _ in range(3)]
        self.yaw_pid = _pid(ctl.yaw, ctl.yaw_rate)
        self.slider_pid = _pid(config.slider.gains, config.slider.speed)

        d = np.asarray(config.search.direction, dtype=float)
        self.search_dir = np.array([*(d / np.linalg.norm(d)), 0.0])
        self.search_travel = 0.0
        self.trajectory: list[TrajectoryPoint] = []
        self.waypoint: np.ndarray | None = None
        self.fix: TargetFix | None = None
        self.grasp_goal: JointState | None = None
        self.tick = 0

        tgt = config.target
        target = None
        if tgt.present:
            target = TargetState((tgt.position[0], tgt.position[1], -tgt.height), tgt.yaw, tgt.size, tgt.height)
        arm = JointState(*config.arm.hold_joints)
        p_b, _ = clamp_slider(self._slider_target(arm, target), config.slider.p_max)
        self.world = WorldState(
            tuple(float(v) for v in config.search.start), config.drone_yaw, (0.0, 0.0, 0.0),
            arm, p_b, target, Phase.SEARCH, 0.0,
        )
        self.log = MissionLog(success_tolerance=config.success_tolerance)
        self.log.phase_changes.append((0.0, Phase.SEARCH.value))

    # --- helpers -------------------------------------------------------------------

    def _model(self, target: TargetState | None) -> MassModel:
        if target is not None and target.grasped:
            return self.empty_model.with_payload(self.cfg.target.mass)
        return self.empty_model

    def _slider_target(self, arm: JointState, target: TargetState | None) -> float:
        return battery_position_for_pose(self.geom, self._model(target), arm, self.t0b)

    def end_effector_world(self, world: WorldState | None = None) -> np.ndarray:
        w = world or self.world
        x, y, _ = forward(self.geom, w.arm)
        return body_to_world(w.position, w.yaw).apply(self.t0b.apply((x, y, 0.0)))

    def arm_speed(self, start: JointState, goal: JointState, target: TargetState | None) -> float:
        """Joint speed cap so the slider can follow the CoG shift along the whole move.

        All joints move together, so the slider rate is bounded by the sum of
        each joint's share of the motion over its own compensation limit.
        """
        a, b = np.array(start.as_tuple()), np.array(goal.as_tuple())
        delta = np.abs(b - a)
        span = float(delta.max())
        speed = self.cfg.arm.max_joint_speed
        if span == 0.0:
            return speed
        model = self._model(target)
        for f in np.linspace(0.0, 1.0, SPEED_SAMPLES):
            q = JointState(*(a + f * (b - a)))
            load = 0.0
            for j in (1, 2):
                if delta[j - 1] > 0:
                    limit = max_compensation_speed(self.cfg.slider.speed, self.geom, model, q, j, self.t0b)
                    load += delta[j - 1] / span / limit
            if load > 0:
                speed = min(speed, 1.0 / load)
        return speed

    def _move_arm(self, goal: JointState, target: TargetState | None) -> None:
        start = self.world.arm
        speed = self.arm_speed(start, goal, target)
        self.trajectory = plan_trajectory(start, goal, speed, self.cfg.dt, self.geom)[1:]

    def _fix_to_waypoint(self, fix: TargetFix) -> np.ndarray:
        w = self.world
        return grasp_waypoint(
            w.position, body_to_world(w.position, w.yaw), self.camera.mount, self.t0b, fix, self.cfg.arm.grasp_point
        )

    def _observe(self) -> TargetFix | None:
        seen = sense(self.world, self.camera, self.rng, self.cfg.noise.pixel_sigma, self.cfg.noise.angle_sigma)
        if seen is None:
            return None
        det, patch = seen
        try:
            return localize(patch, det)
        except NoDepthError:
            return None

    # --- one tick ------------------------------------------------------------------------

    def step(self) -> WorldState:
        cfg, w = self.cfg, self.world
        dt = cfg.dt
        phase = w.phase
        target = w.target
        pos = np.array(w.position)
        speed_cap = cfg.control.approach_speed

        if phase is Phase.SEARCH:
            speed_cap = cfg.control.max_speed
            self.search_travel = min(self.search_travel + cfg.search.speed * dt, cfg.search.length)
            setpoint = np.asarray(cfg.search.start) + self.search_travel * self.search_dir
            fix = self._observe()
            if fix is not None:
                self.waypoint = self._fix_to_waypoint(fix)
                self.fix = fix
                phase = Phase.APPROACH
        elif phase is Phase.APPROACH:
            fix = self._observe()
            if fix is not None:
                self.waypoint = self._fix_to_waypoint(fix)
                self.fix = fix
            elif cfg.regress_on_loss:
                phase = Phase.SEARCH
            setpoint = self.waypoint
            if phase is Phase.APPROACH and np.linalg.norm(pos - self.waypoint) <= cfg.approach_tolerance:
                theta3 = wrap_angle(wrap_angle(self.fix.theta) + cfg.arm.theta3_offset)
                self.log.target_theta = wrap_angle(target.yaw - w.yaw)
                self.grasp_goal = inverse(self.geom, cfg.arm.grasp_point, theta3)
                self._move_arm(self.grasp_goal, target)
                phase = Phase.GRASP
        elif phase is Phase.GRASP:
            setpoint = self.waypoint
            if not self.trajectory and np.linalg.norm(pos - self.waypoint) <= cfg.grasp_tolerance:
                ee = self.end_effector_world()
                self.log.grasp_error = float(np.linalg.norm(ee - np.asarray(target.position)))
                self.log.theta3 = w.arm.theta3
                target = replace(target, grasped=True)
                self._move_arm(JointState(*cfg.arm.hold_joints[:2], w.arm.theta3), target)
                phase = Phase.DELIVER
        elif phase is Phase.DELIVER:
            setpoint = np.asarray(cfg.drop_position)
            if not self.trajectory and np.linalg.norm(pos - setpoint) <= cfg.approach_tolerance:
                self._move_arm(inverse(self.geom, cfg.arm.drop_point, w.arm.theta3), target)
                phase = Phase.DROP
        elif phase is Phase.DROP:
            setpoint = np.asarray(cfg.drop_position)
            if not self.trajectory:
                ee = self.end_effector_world()
                target = replace(target, position=(float(ee[0]), float(ee[1]), -target.height), grasped=False)
                phase = Phase.DONE
        else:
            setpoint = pos

        # drone: position loop -> velocity setpoint -> velocity loop -> lagged velocity
        vel = np.array(w.velocity)
        err = setpoint - pos
        v_sp = np.array([pid_step(self.pos_pid[i], err[i], dt) for i in range(3)])
        norm = float(np.linalg.norm(v_sp))
        if norm > speed_cap:
            v_sp *= speed_cap / norm
        v_cmd = v_sp + np.array([pid_step(self.vel_pid[i], v_sp[i] - vel[i], dt) for i in range(3)])
        vel = vel + (v_cmd - vel) * (dt / cfg.control.lag)
        pos = pos + vel * dt
        yaw = w.yaw + pid_step(self.yaw_pid, _wrap_pi(cfg.drone_yaw - w.yaw), dt) * dt

        arm = self.trajectory.pop(0).q if self.trajectory else w.arm

        p_target = self._slider_target(arm, target)
        rate = pid_step(self.slider_pid, p_target - w.slider, dt)
        p_b, saturated = clamp_slider(w.slider + clamp(rate, cfg.slider.speed) * dt, cfg.slider.p_max)
        self.log.saturated_ticks += int(saturated)

        new = WorldState(tuple(float(v) for v in pos), yaw, tuple(float(v) for v in vel), arm, p_b,
                         target, phase, 0.0)
        if target is not None and target.grasped:
            ee = self.end_effector_world(new)
            target = replace(target, position=tuple(float(v) for v in ee))
        self.tick += 1
        new = replace(new, target=target, clock=self.tick * dt)

        if phase is not w.phase:
            self.log.phase_changes.append((new.clock, phase.value))
            for c in self.pos_pid:
                c.reset()
        self.log.rows.append((
            new.clock, phase.value, *new.position, yaw, *(float(e) for e in err),
            *arm.as_tuple(), p_b, float(p_target), int(saturated),
        ))
        self.world = new
        return new


def run(config: MissionConfig, seed: int | None = None) -> MissionLog:
    """Step until Done or the time cap; the log's outcome says which."""
    sim = Simulator(config, seed)
    max_ticks = int(math.floor(config.time_cap / config.dt + 1e-9))
    while sim.world.phase is not Phase.DONE and sim.tick < max_ticks:
        sim.step()
    sim.log.outcome = "done" if sim.world.phase is Phase.DONE else "timeout"
    return sim.log


def standard_scenarios(base: MissionConfig | None = None) -> list[MissionConfig]:
    """Ten zero-noise missions over varied target positions and rotations."""
    base = base or MissionConfig()
    placements: Sequence[tuple[float, float, float]] = [
        (0.6, 0.1, 0.0),
        (0.8, -0.15, math.pi / 4),
        (0.4, 0.2, math.pi / 2),
        (1.0, 0.0, 3 * math.pi / 4),
        (0.5, -0.25, 0.3),
        (1.2, 0.15, 1.2),
        (0.7, 0.3, 2.5),
        (0.3, -0.1, math.pi / 4 + 0.01),
        (0.9, 0.05, 2.9),
        (1.4, -0.2, 0.8),
    ]
    out = []
    for i, (x, y, yaw) in enumerate(placements):
        tgt = replace(base.target, present=True, position=(x, y), yaw=yaw)
        out.append(replace(base, target=tgt, noise=replace(base.noise, pixel_sigma=0.0, angle_sigma=0.0), seed=i))
    return out
