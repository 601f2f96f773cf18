"""Mission configuration: nested frozen dataclasses loaded from YAML.

Every field has a default, so a config file only lists what it changes.
Unknown keys are rejected rather than ignored.
"""

from __future__ import annotations

import dataclasses
import math
import typing
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import yaml

from ..errors import ConfigError, JointLimitError, OutOfWorkspaceError
from ..kinematics import DEFAULT_LIMITS, ArmGeometry, FlowModel, JointState, inverse

Pair = tuple[float, float]
Triple = tuple[float, float, float]


@dataclass(frozen=True)
class Gains:
    kp: float
    ki: float = 0.0
    kd: float = 0.0
    integral_limit: float = math.inf


@dataclass(frozen=True)
class ArmConfig:
    l1: float = 0.2
    l2: float = 0.23
    joint_limits: tuple[Pair, Pair, Pair] = DEFAULT_LIMITS
    # shoulder position in the body frame (forward, down)
    mount_forward: float = 0.05
    mount_down: float = 0.05
    max_joint_speed: float = 1.0
    hold_joints: Triple = (-0.5, 2.5, 0.0)
    # arm-plane points (x forward, y down)
    grasp_point: Pair = (0.30, 0.25)
    drop_point: Pair = (0.25, 0.30)
    theta3_offset: float = 0.0


@dataclass(frozen=True)
class MassConfig:
    link_masses: Pair = (0.2295, 0.2295)
    battery_mass: float = 0.525


@dataclass(frozen=True)
class SliderConfig:
    p_max: float = 0.3
    speed: float = 0.1
    gains: Gains = Gains(20.0)


@dataclass(frozen=True)
class CameraConfig:
    width: int = 160
    height: int = 120
    focal: float = 150.0
    # optical centre in the body frame; the camera axes match the body axes
    offset: Triple = (0.30, 0.0, 0.05)


@dataclass(frozen=True)
class ControlConfig:
    position: Gains = Gains(1.5, 0.0, 0.0, 0.2)
    velocity: Gains = Gains(1.0)
    yaw: Gains = Gains(1.5)
    lag: float = 0.3
    max_speed: float = 1.0
    approach_speed: float = 0.5
    yaw_rate: float = 1.0


@dataclass(frozen=True)
class SearchConfig:
    start: Triple = (-1.0, 0.0, -1.2)
    # horizontal sweep direction in the world frame, normalised on use
    direction: Pair = (1.0, 0.0)
    speed: float = 0.3
    length: float = 4.0


@dataclass(frozen=True)
class TargetConfig:
    present: bool = True
    # world x, y of the top-face centre; the object stands on the ground
    position: Pair = (0.6, 0.1)
    yaw: float = 0.0
    size: Pair = (0.06, 0.03)
    height: float = 0.05
    mass: float = 0.05


@dataclass(frozen=True)
class NoiseConfig:
    pixel_sigma: float = 0.0
    angle_sigma: float = 0.0


@dataclass(frozen=True)
class MissionConfig:
    arm: ArmConfig = ArmConfig()
    mass: MassConfig = MassConfig()
    slider: SliderConfig = SliderConfig()
    camera: CameraConfig = CameraConfig()
    control: ControlConfig = ControlConfig()
    search: SearchConfig = SearchConfig()
    target: TargetConfig = TargetConfig()
    flow: FlowModel = FlowModel()
    noise: NoiseConfig = NoiseConfig()
    drone_yaw: float = 0.0
    drop_position: Triple = (1.5, 1.0, -1.0)
    dt: float = 0.02
    time_cap: float = 60.0
    approach_tolerance: float = 0.03
    grasp_tolerance: float = 0.005
    success_tolerance: float = 0.01
    regress_on_loss: bool = False
    seed: int = 0

    def replace(self, **changes) -> "MissionConfig":
        return dataclasses.replace(self, **changes)

    def geometry(self) -> ArmGeometry:
        return ArmGeometry(self.arm.l1, self.arm.l2, self.arm.joint_limits)


# --- dict / YAML conversion -------------------------------------------------------


def _convert(value: Any, hint: Any, where: str) -> Any:
    if dataclasses.is_dataclass(hint):
        if not isinstance(value, Mapping):
            raise ConfigError(f"{where}: expected a mapping, got {value!r}")
        return _build(hint, value, where)
    origin = typing.get_origin(hint)
    if origin is tuple:
        args = typing.get_args(hint)
        if not isinstance(value, (list, tuple)) or len(value) != len(args):
            raise ConfigError(f"{where}: expected a list of {len(args)} items, got {value!r}")
        return tuple(_convert(v, a, f"{where}[{i}]") for i, (v, a) in enumerate(zip(value, args)))
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if hint is float:
        if isinstance(value, bool):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        try:
            out = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: expected a number, got {value!r}") from None
        if math.isnan(out):
            raise ConfigError(f"{where}: NaN is not allowed")
        return out
    return value


def _build(cls, data: Mapping[str, Any], where: str):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where or 'config'}: unknown key(s) {', '.join(unknown)}")
    kwargs = {k: _convert(v, hints[k], f"{where}.{k}" if where else k) for k, v in data.items()}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where or 'config'}: {exc}") from None


def config_from_dict(data: Mapping[str, Any] | None) -> MissionConfig:
    cfg = _build(MissionConfig, data or {}, "")
    validate_config(cfg)
    return cfg


def config_to_dict(cfg: MissionConfig) -> dict:
    def plain(v):
        if dataclasses.is_dataclass(v):
            return {f.name: plain(getattr(v, f.name)) for f in dataclasses.fields(v)}
        if isinstance(v, tuple):
            return [plain(x) for x in v]
        return v

    return plain(cfg)


def load_config(path: str | Path) -> MissionConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    if data is not None and not isinstance(data, Mapping):
        raise ConfigError(f"config {path} must be a mapping at the top level")
    return config_from_dict(data)


def dump_config(cfg: MissionConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)


# --- validation -----------------------------------------------------------------------


def _positive(name: str, value: float) -> None:
    if not (value > 0 and math.isfinite(value)):
        raise ConfigError(f"{name} must be positive and finite, got {value}")


def _reachable(geom: ArmGeometry, point: Pair, name: str) -> None:
    try:
        inverse(geom, point)
    except OutOfWorkspaceError as exc:
        raise ConfigError(f"{name} {point} is unreachable: {exc}") from None
    except JointLimitError as exc:
        raise ConfigError(f"{name} {point} violates a joint limit: {exc}") from None


def validate_config(cfg: MissionConfig) -> None:
    """Reject inconsistent configs before any simulation tick runs."""
    for name, value in [
        ("dt", cfg.dt), ("time_cap", cfg.time_cap), ("slider.p_max", cfg.slider.p_max),
        ("slider.speed", cfg.slider.speed), ("mass.battery_mass", cfg.mass.battery_mass),
        ("camera.focal", cfg.camera.focal), ("control.lag", cfg.control.lag),
        ("control.max_speed", cfg.control.max_speed), ("control.approach_speed", cfg.control.approach_speed),
        ("control.yaw_rate", cfg.control.yaw_rate), ("arm.max_joint_speed", cfg.arm.max_joint_speed),
        ("search.speed", cfg.search.speed), ("target.height", cfg.target.height),
        ("approach_tolerance", cfg.approach_tolerance), ("grasp_tolerance", cfg.grasp_tolerance),
        ("success_tolerance", cfg.success_tolerance),
    ]:
        _positive(name, value)
    if cfg.search.length < 0:
        raise ConfigError("search.length must be non-negative")
    if cfg.camera.width < 1 or cfg.camera.height < 1:
        raise ConfigError("camera must be at least one pixel in each direction")
    if any(not s > 0 for s in cfg.target.size):
        raise ConfigError(f"target size must be positive, got {cfg.target.size}")
    if any(m < 0 for m in cfg.mass.link_masses) or cfg.target.mass < 0:
        raise ConfigError("masses must be non-negative")
    if cfg.noise.pixel_sigma < 0 or cfg.noise.angle_sigma < 0:
        raise ConfigError("noise sigmas must be non-negative")
    if math.hypot(*cfg.search.direction) == 0:
        raise ConfigError("search.direction must be a non-zero vector")
    if cfg.grasp_tolerance > cfg.approach_tolerance:
        raise ConfigError("grasp_tolerance must not exceed approach_tolerance")
    try:
        geom = cfg.geometry()
    except ValueError as exc:
        raise ConfigError(f"arm: {exc}") from None
    _reachable(geom, cfg.arm.grasp_point, "grasp point")
    _reachable(geom, cfg.arm.drop_point, "drop point")
    if not geom.within_limits(JointState(*cfg.arm.hold_joints)):
        raise ConfigError(f"hold joints {cfg.arm.hold_joints} violate the joint limits")
    lo3, hi3 = geom.joint_limits[2]
    if lo3 > 0.0 or hi3 < math.pi:
        # wrist targets live in [0, pi)
        raise ConfigError("theta3 limits must include [0, pi] to match every target rotation")
    cam_down = cfg.search.start[2] + cfg.camera.offset[2]
    if cam_down >= -cfg.target.height:
        raise ConfigError("search altitude puts the camera at or below the target top")
