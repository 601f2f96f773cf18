"""Rotated-rectangle primitives and three flavours of IoU.

Boxes are ``(cx, cy, w, h, theta)`` in image pixels with ``theta`` in radians.
A rectangle is symmetric under a half turn, so every angle comparison is done
on the canonical representative in ``[0, pi)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError

Point = tuple[float, float]

BOX_FIELDS = ("cx", "cy", "w", "h", "theta")

# edge-touching rectangles leave slivers of this size after clipping
AREA_EPS = 1e-12


@dataclass(frozen=True)
class OrientedBox:
    cx: float
    cy: float
    w: float
    h: float
    theta: float = 0.0

    def __post_init__(self):
        for name in BOX_FIELDS:
            if not math.isfinite(getattr(self, name)):
                raise InvalidInputError(f"box field {name} is not finite: {getattr(self, name)!r}")
        if self.w <= 0 or self.h <= 0:
            raise InvalidInputError(f"box width/height must be positive, got w={self.w}, h={self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.cx, self.cy, self.w, self.h, self.theta)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "OrientedBox":
        try:
            return cls(*(float(d[k]) for k in BOX_FIELDS))
        except KeyError as exc:
            raise InvalidInputError(f"box object missing field {exc}") from None
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"bad box object {d!r}: {exc}") from None


def wrap_angle(theta: float) -> float:
    """Reduce an angle into ``[0, pi)``."""
    t = math.fmod(theta, math.pi)
    if t < 0.0:
        t += math.pi
    if t >= math.pi:  # fmod of a tiny negative can round up to pi
        t -= math.pi
    return t


def canonicalize(box: OrientedBox) -> OrientedBox:
    return OrientedBox(box.cx, box.cy, box.w, box.h, wrap_angle(box.theta))


def angle_difference(theta_a: float, theta_b: float) -> float:
    """Smallest rotation between two rectangle orientations, in ``[0, pi/2]``."""
    d = abs(wrap_angle(theta_a) - wrap_angle(theta_b))
    return min(d, math.pi - d)


def corners(box: OrientedBox) -> list[Point]:
    """Four vertices, counter-clockwise (positive signed area)."""
    c, s = math.cos(box.theta), math.sin(box.theta)
    hw, hh = 0.5 * box.w, 0.5 * box.h
    out = []
    for lx, ly in ((hw, hh), (-hw, hh), (-hw, -hh), (hw, -hh)):
        out.append((box.cx + c * lx - s * ly, box.cy + s * lx + c * ly))
    return out


def polygon_area(poly: Sequence[Point]) -> float:
    """Signed shoelace area; positive for counter-clockwise vertex order."""
    n = len(poly)
    if n < 3:
        return 0.0
    acc = 0.0
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        acc += x0 * y1 - x1 * y0
    return 0.5 * acc


def clip_convex(subject: Sequence[Point], clipper: Sequence[Point]) -> list[Point]:
    """Sutherland-Hodgman clip of ``subject`` by a counter-clockwise convex ``clipper``."""
    output = list(subject)
    n = len(clipper)
    for i in range(n):
        if not output:
            break
        ax, ay = clipper[i]
        bx, by = clipper[(i + 1) % n]
        ex, ey = bx - ax, by - ay

        def side(p: Point) -> float:
            return ex * (p[1] - ay) - ey * (p[0] - ax)

        inp = output
        output = []
        prev = inp[-1]
        s_prev = side(prev)
        for cur in inp:
            s_cur = side(cur)
            if s_cur >= 0.0:
                if s_prev < 0.0:
                    output.append(_cross_point(prev, cur, s_prev, s_cur))
                output.append(cur)
            elif s_prev >= 0.0:
                output.append(_cross_point(prev, cur, s_prev, s_cur))
            prev, s_prev = cur, s_cur
    return output


def _cross_point(p: Point, q: Point, sp: float, sq: float) -> Point:
    t = sp / (sp - sq)
    return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))


def intersection_area(a: OrientedBox, b: OrientedBox) -> float:
    # work relative to a's center; large pixel coordinates otherwise cancel badly
    a0 = OrientedBox(0.0, 0.0, a.w, a.h, a.theta)
    b0 = OrientedBox(b.cx - a.cx, b.cy - a.cy, b.w, b.h, b.theta)
    poly = clip_convex(corners(a0), corners(b0))
    area = abs(polygon_area(poly))
    if area <= AREA_EPS:
        return 0.0
    return min(area, a.area, b.area)


def iou_exact(a: OrientedBox, b: OrientedBox) -> float:
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    return min(1.0, max(0.0, inter / union))


def iou_horizontal(a: OrientedBox, b: OrientedBox) -> float:
    """Axis-aligned IoU of the ``(cx, cy, w, h)`` parts; angles are ignored."""
    ix = min(a.cx + a.w / 2, b.cx + b.w / 2) - max(a.cx - a.w / 2, b.cx - b.w / 2)
    iy = min(a.cy + a.h / 2, b.cy + b.h / 2) - max(a.cy - a.h / 2, b.cy - b.h / 2)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    return min(1.0, inter / (a.area + b.area - inter))


def angle_factor(theta_a: float, theta_b: float) -> float:
    """Down-weighting factor ``1 - |dtheta|/pi`` on the wrapped angle difference."""
    return 1.0 - angle_difference(theta_a, theta_b) / math.pi


def iou_approx(a: OrientedBox, b: OrientedBox) -> float:
    """Fast approximate rotated IoU: horizontal IoU scaled by angular deviation."""
    return iou_horizontal(a, b) * angle_factor(a.theta, b.theta)


IOU_FUNCTIONS = {
    "exact": iou_exact,
    "approx": iou_approx,
    "horizontal": iou_horizontal,
}


def boxes_to_array(boxes: Iterable[OrientedBox]) -> np.ndarray:
    arr = np.array([b.as_tuple() for b in boxes], dtype=float)
    return arr.reshape(-1, 5)


def iou_approx_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise approximate IoU between rows of two ``(N, 5)`` / ``(M, 5)`` arrays.

    Fully vectorized; this is the batch form of :func:`iou_approx` and agrees
    with it element-wise.
    """
    a = np.asarray(a, dtype=float).reshape(-1, 5)
    b = np.asarray(b, dtype=float).reshape(-1, 5)
    ax0, ax1 = a[:, None, 0] - a[:, None, 2] / 2, a[:, None, 0] + a[:, None, 2] / 2
    ay0, ay1 = a[:, None, 1] - a[:, None, 3] / 2, a[:, None, 1] + a[:, None, 3] / 2
    bx0, bx1 = b[None, :, 0] - b[None, :, 2] / 2, b[None, :, 0] + b[None, :, 2] / 2
    by0, by1 = b[None, :, 1] - b[None, :, 3] / 2, b[None, :, 1] + b[None, :, 3] / 2
    ix = np.clip(np.minimum(ax1, bx1) - np.maximum(ax0, bx0), 0.0, None)
    iy = np.clip(np.minimum(ay1, by1) - np.maximum(ay0, by0), 0.0, None)
    inter = ix * iy
    union = (a[:, None, 2] * a[:, None, 3]) + (b[None, :, 2] * b[None, :, 3]) - inter
    iou = np.minimum(inter / union, 1.0)
    ta = np.mod(a[:, None, 4], np.pi)
    tb = np.mod(b[None, :, 4], np.pi)
    d = np.abs(ta - tb)
    d = np.minimum(d, np.pi - d)
    return iou * (1.0 - d / np.pi)


# --- serialization -------------------------------------------------------


def box_to_json(box: OrientedBox) -> str:
    return json.dumps(box.to_dict())


def parse_boxes(text: str) -> list[OrientedBox]:
    """Parse boxes from JSON (object or list of objects) or CSV rows.

    CSV rows are ``cx,cy,w,h,theta``; a header line naming those columns is
    optional and extra columns are ignored.
    """
    stripped = text.strip()
    if not stripped:
        return []
    if stripped[0] in "[{":
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"invalid box JSON: {exc}") from None
        if isinstance(data, dict):
            data = [data]
        return [OrientedBox.from_dict(d) for d in data]
    return [OrientedBox.from_dict(row) for row in read_csv_rows(stripped, BOX_FIELDS)]


def read_csv_rows(text: str, default_fields: Sequence[str]) -> list[dict]:
    """Rows as dicts; uses the header when present, else ``default_fields`` positionally."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        return []
    first = [c.strip() for c in next(csv.reader([lines[0]]))]
    has_header = bool(set(first) & set(default_fields))
    reader = csv.reader(io.StringIO("\n".join(lines)))
    rows = [[c.strip() for c in r] for r in reader]
    if has_header:
        names, rows = rows[0], rows[1:]
    else:
        names = list(default_fields)
    out = []
    for r in rows:
        if len(r) < len(names) and not has_header:
            raise InvalidInputError(f"CSV row has {len(r)} columns, expected {len(names)}: {r}")
        out.append(dict(zip(names, r)))
    return out


def load_boxes(path: str | Path) -> list[OrientedBox]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from None
    return parse_boxes(text)


def boxes_to_csv(boxes: Iterable[OrientedBox]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BOX_FIELDS)
    for b in boxes:
        w.writerow([repr(float(v)) for v in b.as_tuple()])
    return buf.getvalue()
