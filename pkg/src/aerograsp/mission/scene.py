"""Synthetic pinhole camera over a flat ground plane with one box-shaped target.

World is north-east-down with the ground at ``z = 0``. The camera's axes are
the body axes (it looks straight down when the airframe is level); image
column ``u`` grows along camera ``x`` and row ``v`` along camera ``y``, so a
rotation in the world's horizontal plane shows up unchanged in the image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from enum import Enum
from typing import Sequence

import numpy as np

from ..detection import Detection
from ..geometry import OrientedBox, wrap_angle
from ..kinematics import JointState
from ..localization import PointPatch
from ..transforms import RigidTransform, body_to_world


@dataclass(frozen=True)
class Camera:
    width: int
    height: int
    focal: float
    mount: RigidTransform  # camera -> body

    @property
    def principal(self) -> tuple[int, int]:
        return self.width // 2, self.height // 2

    def project(self, p_cam: Sequence[float]) -> tuple[float, float] | None:
        x, y, z = p_cam
        if not z > 0:
            return None
        u0, v0 = self.principal
        return u0 + self.focal * x / z, v0 + self.focal * y / z

    @cached_property
    def rays(self) -> np.ndarray:
        """Camera-frame direction with unit z through every pixel centre, row-major."""
        u0, v0 = self.principal
        rows, cols = np.mgrid[0 : self.height, 0 : self.width]
        d = np.empty((self.height * self.width, 3))
        d[:, 0] = (cols.ravel() - u0) / self.focal
        d[:, 1] = (rows.ravel() - v0) / self.focal
        d[:, 2] = 1.0
        d.setflags(write=False)
        return d


@dataclass(frozen=True)
class TargetState:
    """A box standing on the ground; ``position`` is its top-face centre."""

    position: tuple[float, float, float]
    yaw: float
    size: tuple[float, float]
    height: float
    grasped: bool = False


class Phase(str, Enum):
    SEARCH = "search"
    APPROACH = "approach"
    GRASP = "grasp"
    DELIVER = "deliver"
    DROP = "drop"
    DONE = "done"


@dataclass(frozen=True)
class WorldState:
    position: tuple[float, float, float]
    yaw: float
    velocity: tuple[float, float, float]
    arm: JointState
    slider: float
    target: TargetState | None
    phase: Phase
    clock: float


def camera_to_world(camera: Camera, drone_pos: Sequence[float], yaw: float) -> RigidTransform:
    return body_to_world(drone_pos, yaw) @ camera.mount


def render_patch(camera: Camera, t_cw: RigidTransform, target: TargetState | None) -> PointPatch:
    """Camera-frame points of ground and target top face; side-occluded pixels invalid."""
    d_cam = camera.rays
    d = d_cam @ t_cw.rotation.T
    o = t_cw.position
    n = len(d)
    dz = d[:, 2]
    points = np.zeros((n, 3))
    valid = dz > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t_ground = np.where(valid, (0.0 - o[2]) / dz, np.nan)
    t = t_ground
    if target is not None and not target.grasped:
        z_top = target.position[2]
        c, s = math.cos(target.yaw), math.sin(target.yaw)
        half_l, half_w = target.size[0] / 2, target.size[1] / 2

        def local(tt):
            px = o[0] + tt * d[:, 0] - target.position[0]
            py = o[1] + tt * d[:, 1] - target.position[1]
            return c * px + s * py, -s * px + c * py

        with np.errstate(divide="ignore", invalid="ignore"):
            t_top = np.where(valid, (z_top - o[2]) / dz, np.nan)
        lx, ly = local(t_top)
        on_top = valid & (t_top > 0) & (np.abs(lx) <= half_l) & (np.abs(ly) <= half_w)
        # a ray that enters the box footprint between the top face and the
        # ground without hitting the top face meets a side wall
        lx_g, ly_g = local(t_ground)
        side = valid & ~on_top & (t_top > 0) & _segment_hits_rect(lx, ly, lx_g, ly_g, half_l, half_w)
        t = np.where(on_top, t_top, t_ground)
        valid = valid & ~side
    valid = valid & (t > 0)
    points[valid] = d_cam[valid] * t[valid, None]
    return PointPatch(camera.width, camera.height, points, valid)


def _segment_hits_rect(x0, y0, x1, y1, hx, hy) -> np.ndarray:
    """Does the 2-D segment (x0, y0)-(x1, y1) touch the centred rectangle?"""
    lo = np.zeros_like(x0)
    hi = np.ones_like(x0)
    for a, b, h in ((x0, x1, hx), (y0, y1, hy)):
        da = b - a
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (-h - a) / da
            t2 = (h - a) / da
        flat = da == 0
        inside = np.abs(a) <= h
        tmin = np.where(flat, np.where(inside, -np.inf, np.inf), np.minimum(t1, t2))
        tmax = np.where(flat, np.where(inside, np.inf, -np.inf), np.maximum(t1, t2))
        lo = np.maximum(lo, tmin)
        hi = np.minimum(hi, tmax)
    return lo <= hi


def sense(
    world: WorldState,
    camera: Camera,
    rng: np.random.Generator | None = None,
    pixel_sigma: float = 0.0,
    angle_sigma: float = 0.0,
) -> tuple[Detection, PointPatch] | None:
    """Detection and point patch of the target, or ``None`` when out of view.

    Noise draws happen whenever ``rng`` is given and a sigma is positive, so
    a fixed seed always yields the same stream.
    """
    target = world.target
    if target is None or target.grasped:
        return None
    t_cw = camera_to_world(camera, world.position, world.yaw)
    p_cam = t_cw.inverse().apply(target.position)
    uv = camera.project(p_cam)
    if uv is None:
        return None
    u, v = uv
    theta = target.yaw - world.yaw
    if rng is not None:
        if pixel_sigma > 0:
            du, dv = rng.normal(0.0, pixel_sigma, 2)
            u, v = u + du, v + dv
        if angle_sigma > 0:
            theta += rng.normal(0.0, angle_sigma)
    depth = p_cam[2]
    w = camera.focal * target.size[0] / depth
    h = camera.focal * target.size[1] / depth
    if min(w, h) < 1.0:
        return None
    if not (0 <= math.floor(u + 0.5) < camera.width and 0 <= math.floor(v + 0.5) < camera.height):
        return None
    det = Detection(OrientedBox(u, v, w, h, wrap_angle(theta)))
    return det, render_patch(camera, t_cw, target)
