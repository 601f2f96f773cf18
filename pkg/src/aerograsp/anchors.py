"""Rotation anchors: the per-position prior grid, shape clustering, and the
box <-> regression-target transform."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidInputError
from .geometry import OrientedBox, wrap_angle

N_SHAPES = 9
ANCHOR_ANGLES = tuple(m * math.pi / 9 for m in range(9))
ANCHORS_PER_POSITION = N_SHAPES * len(ANCHOR_ANGLES)

KMEANS_MAX_ITER = 300


@dataclass(frozen=True)
class AnchorGrid:
    fw: int
    fh: int
    stride: float
    shapes: tuple[tuple[float, float], ...]
    angles: tuple[float, ...] = field(default=ANCHOR_ANGLES)

    def __post_init__(self):
        if self.fw < 1 or self.fh < 1:
            raise InvalidInputError(f"feature map must be at least 1x1, got {self.fw}x{self.fh}")
        if not self.stride > 0:
            raise InvalidInputError(f"stride must be positive, got {self.stride}")
        shapes = tuple((float(w), float(h)) for w, h in self.shapes)
        if len(shapes) != N_SHAPES:
            raise InvalidInputError(f"expected {N_SHAPES} anchor shapes, got {len(shapes)}")
        if any(not (w > 0 and h > 0) for w, h in shapes):
            raise InvalidInputError("anchor shapes must have positive width and height")
        if tuple(self.angles) != ANCHOR_ANGLES:
            raise InvalidInputError("anchor angles are fixed at m*pi/9, m = 0..8")
        object.__setattr__(self, "shapes", shapes)
        object.__setattr__(self, "angles", tuple(self.angles))

    @property
    def anchors_per_position(self) -> int:
        return len(self.shapes) * len(self.angles)

    def __len__(self) -> int:
        return self.fw * self.fh * self.anchors_per_position

    def to_dict(self) -> dict:
        return {"fw": self.fw, "fh": self.fh, "stride": self.stride, "shapes": [list(s) for s in self.shapes]}

    @classmethod
    def from_dict(cls, d: dict) -> "AnchorGrid":
        try:
            return cls(int(d["fw"]), int(d["fh"]), float(d["stride"]), tuple(tuple(s) for s in d["shapes"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"bad anchor grid: {exc}") from None


@dataclass(frozen=True)
class EncodedParams:
    vx: float
    vy: float
    vw: float
    vh: float
    vtheta: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.as_tuple()):
            raise InvalidInputError(f"encoded parameters must be finite: {self.as_tuple()}")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.vx, self.vy, self.vw, self.vh, self.vtheta)


def generate(grid: AnchorGrid) -> list[OrientedBox]:
    """All anchors, ordered by row, column, shape index, angle index."""
    out = []
    for j in range(grid.fh):
        cy = (j + 0.5) * grid.stride
        for i in range(grid.fw):
            cx = (i + 0.5) * grid.stride
            for w, h in grid.shapes:
                for a in grid.angles:
                    out.append(OrientedBox(cx, cy, w, h, a))
    return out


def generate_array(grid: AnchorGrid) -> np.ndarray:
    """Same anchors as :func:`generate` as an ``(N, 5)`` array."""
    js, is_, ss, as_ = np.meshgrid(
        np.arange(grid.fh), np.arange(grid.fw), np.arange(len(grid.shapes)), np.arange(len(grid.angles)),
        indexing="ij",
    )
    shapes = np.asarray(grid.shapes)
    angles = np.asarray(grid.angles)
    out = np.stack(
        [
            (is_ + 0.5) * grid.stride,
            (js + 0.5) * grid.stride,
            shapes[ss, 0],
            shapes[ss, 1],
            angles[as_],
        ],
        axis=-1,
    )
    return out.reshape(-1, 5)


def encode(gt: OrientedBox, anchor: OrientedBox) -> EncodedParams:
    # vtheta picks the multiple of pi that lands anchor.theta + vtheta in [0, pi)
    return EncodedParams(
        (gt.cx - anchor.cx) / anchor.w,
        (gt.cy - anchor.cy) / anchor.h,
        math.log(gt.w / anchor.w),
        math.log(gt.h / anchor.h),
        wrap_angle(gt.theta) - anchor.theta,
    )


def decode(v: EncodedParams, anchor: OrientedBox) -> OrientedBox:
    return OrientedBox(
        anchor.cx + v.vx * anchor.w,
        anchor.cy + v.vy * anchor.h,
        anchor.w * math.exp(v.vw),
        anchor.h * math.exp(v.vh),
        wrap_angle(anchor.theta + v.vtheta),
    )


# --- shape clustering ---------------------------------------------------------


def shape_iou(wh: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """IoU of co-centred, axis-aligned shapes; ``(N, 2) x (K, 2) -> (N, K)``."""
    inter = np.minimum(wh[:, None, 0], centroids[None, :, 0]) * np.minimum(wh[:, None, 1], centroids[None, :, 1])
    union = (wh[:, 0] * wh[:, 1])[:, None] + (centroids[:, 0] * centroids[:, 1])[None, :] - inter
    return inter / union


@dataclass
class KMeansResult:
    shapes: list[tuple[float, float]]
    objective_history: list[float]
    iterations: int


def kmeans_shapes(boxes: Sequence[OrientedBox], k: int = N_SHAPES, seed: int = 0) -> list[tuple[float, float]]:
    """Cluster box ``(w, h)`` with the ``1 - IoU`` distance; returns ``k`` shapes sorted by area."""
    return kmeans_shapes_detailed(boxes, k, seed).shapes


def kmeans_shapes_detailed(boxes: Sequence[OrientedBox], k: int = N_SHAPES, seed: int = 0) -> KMeansResult:
    if len(boxes) == 0:
        raise InvalidInputError("k-means needs at least one box")
    if k < 1:
        raise InvalidInputError(f"k must be >= 1, got {k}")
    wh = np.array([(b.w, b.h) for b in boxes], dtype=float)
    rng = np.random.default_rng(seed)
    centroids = _plus_plus_init(wh, k, rng)

    labels, dist = _assign(wh, centroids)
    history = [float(dist.mean())]
    it = 0
    while it < KMEANS_MAX_ITER:
        it += 1
        new = _update_centroids(wh, centroids, labels)
        new = _reseed_empty(wh, new, labels, dist)
        new_labels, new_dist = _assign(wh, new)
        history.append(float(new_dist.mean()))
        moved = not np.array_equal(new, centroids)
        centroids = new
        if np.array_equal(new_labels, labels) and not moved:
            break
        labels, dist = new_labels, new_dist

    order = sorted(range(k), key=lambda c: (centroids[c, 0] * centroids[c, 1], centroids[c, 0]))
    shapes = [(float(centroids[c, 0]), float(centroids[c, 1])) for c in order]
    return KMeansResult(shapes, history, it)


def _update_centroids(wh: np.ndarray, centroids: np.ndarray, labels: np.ndarray) -> np.ndarray:
    # the mean is not the exact 1-IoU minimiser, so a cluster only takes it when
    # its own cost drops; this keeps the objective non-increasing
    new = centroids.copy()
    for c in range(len(centroids)):
        members = wh[labels == c]
        if not len(members):
            continue
        cand = members.mean(axis=0)
        old_cost = (1.0 - shape_iou(members, centroids[[c]])).sum()
        new_cost = (1.0 - shape_iou(members, cand[None, :])).sum()
        if new_cost < old_cost:
            new[c] = cand
    return new


def _assign(wh: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = 1.0 - shape_iou(wh, centroids)
    labels = np.argmin(d, axis=1)
    return labels, d[np.arange(len(wh)), labels]


def _plus_plus_init(wh: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(wh)
    chosen = [int(rng.integers(n))]
    d2 = (1.0 - shape_iou(wh, wh[chosen]))[:, 0] ** 2
    while len(chosen) < k:
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        chosen.append(idx)
        d2 = np.minimum(d2, (1.0 - shape_iou(wh, wh[[idx]]))[:, 0] ** 2)
    return wh[chosen].copy()


def _reseed_empty(wh, centroids, labels, dist):
    counts = np.bincount(labels, minlength=len(centroids))
    empty = np.flatnonzero(counts == 0)
    if len(empty) == 0:
        return centroids
    taken = set()
    far = np.argsort(-dist, kind="stable")
    for c in empty:
        for idx in far:
            if idx not in taken and dist[idx] > 0.0:
                taken.add(idx)
                centroids[c] = wh[idx]
                break
    return centroids


def save_shapes(shapes: Sequence[tuple[float, float]], path: str | Path) -> None:
    Path(path).write_text(json.dumps({"shapes": [list(s) for s in shapes]}, indent=2) + "\n")


def load_shapes(path: str | Path) -> list[tuple[float, float]]:
    data = json.loads(Path(path).read_text())
    return [tuple(map(float, s)) for s in data["shapes"]]
