"""Target position from an organised point cloud and the grasp waypoint."""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .detection import Detection
from .errors import InvalidInputError, NoDepthError
from .transforms import RigidTransform

MAX_WINDOW = 5

_PATCH_HEADER = struct.Struct("<2I")
_PIXEL_DTYPE = np.dtype([("x", "<f4"), ("y", "<f4"), ("z", "<f4"), ("valid", "u1")])


@dataclass(frozen=True, eq=False)
class PointPatch:
    """Camera-frame points laid out like the image, row-major.

    ``valid`` is either one flag per pixel ``(h, w)`` or one flag per
    coordinate ``(h, w, 3)``; non-finite coordinates are always invalid.
    """

    width: int
    height: int
    points: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.size != self.width * self.height * 3:
            raise InvalidInputError(
                f"patch needs width*height = {self.width * self.height} points, got {pts.size // 3}"
            )
        pts = pts.reshape(self.height, self.width, 3)
        valid = np.asarray(self.valid, dtype=bool)
        if valid.size == self.width * self.height:
            valid = np.repeat(valid.reshape(self.height, self.width, 1), 3, axis=2)
        elif valid.size == pts.size:
            valid = valid.reshape(self.height, self.width, 3)
        else:
            raise InvalidInputError("validity mask must have one flag per pixel or per coordinate")
        valid = valid & np.isfinite(pts)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "valid", valid)

    # --- I/O ---

    def to_bytes(self) -> bytes:
        rec = np.zeros(self.width * self.height, dtype=_PIXEL_DTYPE)
        flat = self.points.reshape(-1, 3)
        rec["x"], rec["y"], rec["z"] = flat[:, 0], flat[:, 1], flat[:, 2]
        rec["valid"] = self.valid.reshape(-1, 3).all(axis=1)
        return _PATCH_HEADER.pack(self.width, self.height) + rec.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "PointPatch":
        if len(data) < _PATCH_HEADER.size:
            raise InvalidInputError("point patch shorter than its header")
        w, h = _PATCH_HEADER.unpack_from(data)
        body = data[_PATCH_HEADER.size:]
        if len(body) != w * h * _PIXEL_DTYPE.itemsize:
            raise InvalidInputError(f"point patch body has {len(body)} bytes, expected {w * h * _PIXEL_DTYPE.itemsize}")
        rec = np.frombuffer(body, dtype=_PIXEL_DTYPE)
        pts = np.stack([rec["x"], rec["y"], rec["z"]], axis=1).astype(float)
        return cls(w, h, pts, rec["valid"] != 0)

    def to_json(self) -> str:
        return json.dumps(
            {
                "width": self.width,
                "height": self.height,
                "points": self.points.reshape(-1, 3).tolist(),
                "valid": self.valid.reshape(-1, 3).all(axis=1).astype(int).tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "PointPatch":
        try:
            d = json.loads(text)
            return cls(int(d["width"]), int(d["height"]), np.asarray(d["points"], dtype=float),
                       np.asarray(d["valid"], dtype=bool))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"bad point patch JSON: {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> "PointPatch":
        data = Path(path).read_bytes()
        if Path(path).suffix.lower() == ".json" or data[:1] == b"{":
            return cls.from_json(data.decode())
        return cls.from_bytes(data)


@dataclass(frozen=True)
class TargetFix:
    position: tuple[float, float, float]
    theta: float

    def __post_init__(self):
        pos = tuple(float(v) for v in self.position)
        if len(pos) != 3 or not all(math.isfinite(v) for v in pos + (self.theta,)):
            raise InvalidInputError(f"target fix must be finite, got {self.position}, {self.theta}")
        object.__setattr__(self, "position", pos)


def subarea_size(w: float, h: float) -> int:
    """Side of the central sampling window: 5 px, or less for thin boxes."""
    m = min(w, h)
    if m < 1:
        raise InvalidInputError(f"box must be at least one pixel on each side, got {w}x{h}")
    return MAX_WINDOW if m > MAX_WINDOW else int(math.floor(m))


def _nearest_pixel(c: float) -> int:
    return int(math.floor(c + 0.5))


def window_bounds(patch: PointPatch, cx: float, cy: float, k: int) -> tuple[int, int, int, int]:
    """Row/column slice bounds of the k x k window, clipped to the patch."""
    u, v = _nearest_pixel(cx), _nearest_pixel(cy)
    c0, r0 = u - k // 2, v - k // 2
    return max(r0, 0), min(r0 + k, patch.height), max(c0, 0), min(c0 + k, patch.width)


def localize(patch: PointPatch, det: Detection) -> TargetFix:
    """Per-axis mean of the valid points in the central window of ``det``."""
    box = det.box
    u, v = _nearest_pixel(box.cx), _nearest_pixel(box.cy)
    if not (0 <= u < patch.width and 0 <= v < patch.height):
        raise InvalidInputError(f"detection centre ({box.cx:.2f}, {box.cy:.2f}) outside the {patch.width}x{patch.height} patch")
    k = subarea_size(box.w, box.h)
    r0, r1, c0, c1 = window_bounds(patch, box.cx, box.cy, k)
    pts = patch.points[r0:r1, c0:c1].reshape(-1, 3)
    ok = patch.valid[r0:r1, c0:c1].reshape(-1, 3)
    counts = ok.sum(axis=0)
    if np.any(counts == 0):
        raise NoDepthError(f"no valid depth on axis {'xyz'[int(np.argmin(counts))]} in the {k}x{k} window")
    mean = tuple(math.fsum(pts[ok[:, a], a]) / int(counts[a]) for a in range(3))
    return TargetFix(mean, box.theta)


def grasp_waypoint(
    drone_pos: Sequence[float],
    t_bw: RigidTransform,
    t_cb: RigidTransform,
    t_0b: RigidTransform,
    fix: TargetFix,
    grasp_point: Sequence[float],
) -> np.ndarray:
    """World position for the drone that puts the arm's grasp point on the target."""
    drone_h = np.append(np.asarray(drone_pos, dtype=float), 1.0)
    target_h = np.append(np.asarray(fix.position, dtype=float), 1.0)
    grasp_h = np.array([grasp_point[0], grasp_point[1], 0.0, 1.0])
    out = drone_h + t_bw.matrix @ t_cb.matrix @ target_h - t_bw.matrix @ t_0b.matrix @ grasp_h
    return out[:3]
