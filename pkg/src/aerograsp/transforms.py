"""Homogeneous rigid transforms and the frame conventions used throughout.

Frames follow the flight-controller convention: world is north-east-down,
body is forward-right-down. The fixed-arm frame has ``x`` forward and ``y``
down (so the arm works in the body x-z plane); ``z`` completes the
right-handed triad and points to body-left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError

ORTHO_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class RigidTransform:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (4, 4):
            raise InvalidInputError(f"transform must be 4x4, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidInputError("transform has non-finite entries")
        if not np.allclose(m[3], (0.0, 0.0, 0.0, 1.0), atol=0.0, rtol=0.0):
            raise InvalidInputError(f"bottom row must be (0, 0, 0, 1), got {m[3]}")
        r = m[:3, :3]
        if np.max(np.abs(r.T @ r - np.eye(3))) > ORTHO_TOL or np.linalg.det(r) < 0:
            raise InvalidInputError("rotation block is not a proper orthonormal matrix")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(4))

    @classmethod
    def from_rt(cls, rotation: np.ndarray, translation: Sequence[float] = (0.0, 0.0, 0.0)) -> "RigidTransform":
        m = np.eye(4)
        m[:3, :3] = rotation
        m[:3, 3] = translation
        return cls(m)

    @classmethod
    def translation(cls, x: float, y: float, z: float) -> "RigidTransform":
        return cls.from_rt(np.eye(3), (x, y, z))

    @classmethod
    def rot_x(cls, a: float, translation: Sequence[float] = (0.0, 0.0, 0.0)) -> "RigidTransform":
        return cls.from_rt(rot_x(a), translation)

    @classmethod
    def rot_z(cls, a: float, translation: Sequence[float] = (0.0, 0.0, 0.0)) -> "RigidTransform":
        return cls.from_rt(rot_z(a), translation)

    @property
    def rotation(self) -> np.ndarray:
        return self.matrix[:3, :3]

    @property
    def position(self) -> np.ndarray:
        return self.matrix[:3, 3]

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return RigidTransform(self.matrix @ other.matrix)

    def apply(self, point: Sequence[float]) -> np.ndarray:
        p = np.asarray(point, dtype=float)
        return self.rotation @ p + self.position

    def inverse(self) -> "RigidTransform":
        r = self.rotation.T
        return RigidTransform.from_rt(r, -r @ self.position)

    def __eq__(self, other) -> bool:
        return isinstance(other, RigidTransform) and np.array_equal(self.matrix, other.matrix)

    def __repr__(self) -> str:
        return f"RigidTransform({self.matrix.tolist()!r})"


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def dh_transform(theta: float, d: float, a: float, alpha: float) -> RigidTransform:
    """Standard Denavit-Hartenberg link transform ``Rz(theta) Tz(d) Tx(a) Rx(alpha)``."""
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    return RigidTransform(
        np.array(
            [
                [ct, -st * ca, st * sa, a * ct],
                [st, ct * ca, -ct * sa, a * st],
                [0.0, sa, ca, d],
                [0.0, 0.0, 0.0, 1.0],
            ]
        )
    )


# arm x -> body x, arm y -> body z (down), arm z -> -body y
ARM_TO_BODY_ROTATION = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])


def arm_mount_transform(forward: float = 0.0, down: float = 0.0) -> RigidTransform:
    """Fixed-arm frame -> body frame for an arm shoulder at ``(forward, 0, down)``."""
    return RigidTransform.from_rt(ARM_TO_BODY_ROTATION, (forward, 0.0, down))


def body_to_world(position: Sequence[float], yaw: float) -> RigidTransform:
    """Level body pose in the world (roll and pitch are not modelled)."""
    return RigidTransform.rot_z(yaw, position)
