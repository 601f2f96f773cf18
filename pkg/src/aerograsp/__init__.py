"""Oriented-box geometry, arm kinematics, CoG compensation and a grasping-mission simulator."""

from .anchors import AnchorGrid, decode, encode, generate, kmeans_shapes
from .cog import MassModel, battery_position, body_cogs, link_transforms, max_compensation_speed, net_x_moment
from .detection import Detection, PredictionMap, decode_map, evaluate_ap, nms
from .errors import (
    AeroGraspError,
    ConfigError,
    InvalidInputError,
    JointLimitError,
    NoDepthError,
    OutOfWorkspaceError,
    UndefinedRecallError,
)
from .geometry import OrientedBox, iou_approx, iou_exact, iou_horizontal, wrap_angle
from .kinematics import ArmGeometry, FlowModel, FlowZone, JointState, flow_zone, forward, inverse, plan_trajectory
from .localization import PointPatch, TargetFix, grasp_waypoint, localize, subarea_size

__version__ = "0.1.0"

__all__ = [
    "AeroGraspError", "AnchorGrid", "ArmGeometry", "ConfigError", "Detection", "FlowModel", "FlowZone",
    "InvalidInputError", "JointLimitError", "JointState", "MassModel", "NoDepthError", "OrientedBox",
    "OutOfWorkspaceError", "PointPatch", "PredictionMap", "TargetFix", "UndefinedRecallError",
    "battery_position", "body_cogs", "decode", "decode_map", "encode", "evaluate_ap", "flow_zone",
    "forward", "generate", "grasp_waypoint", "inverse", "iou_approx", "iou_exact", "iou_horizontal",
    "kmeans_shapes", "link_transforms", "localize", "max_compensation_speed", "net_x_moment", "nms",
    "plan_trajectory", "subarea_size", "wrap_angle",
]
