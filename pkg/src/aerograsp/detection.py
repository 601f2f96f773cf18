"""Post-network detection pipeline: prediction-map decoding, oriented NMS and
average-precision evaluation."""

from __future__ import annotations

import csv
import io
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .anchors import ANCHORS_PER_POSITION, AnchorGrid, EncodedParams, decode, generate_array
from .errors import InvalidInputError, UndefinedRecallError
from .geometry import BOX_FIELDS, IOU_FUNCTIONS, OrientedBox, iou_exact, read_csv_rows

_HEADER = struct.Struct("<4I")


@dataclass(frozen=True)
class Detection:
    box: OrientedBox
    class_id: int = 0
    score: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise InvalidInputError(f"detection score must lie in [0, 1], got {self.score}")
        if self.class_id < 0:
            raise InvalidInputError(f"class id must be non-negative, got {self.class_id}")


@dataclass(frozen=True)
class PredictionMap:
    """Dense network output, ``fw * fh * k * (5 + c + 1)`` values.

    Layout is row-major over feature positions, then anchor, then the per-anchor
    vector ``[vx, vy, vw, vh, vtheta, class logits..., confidence logit]``.
    """

    fw: int
    fh: int
    k: int
    c: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if min(self.fw, self.fh, self.k, self.c) < 1:
            raise InvalidInputError("prediction map dimensions must be positive")
        if vals.size != self.expected_size:
            raise InvalidInputError(
                f"prediction map has {vals.size} values, expected fw*fh*k*(5+c+1) = {self.expected_size}"
            )
        object.__setattr__(self, "values", vals)

    @property
    def per_anchor(self) -> int:
        return 5 + self.c + 1

    @property
    def expected_size(self) -> int:
        return self.fw * self.fh * self.k * self.per_anchor

    def rows(self) -> np.ndarray:
        return self.values.reshape(-1, self.per_anchor)

    # --- I/O ---

    def to_bytes(self) -> bytes:
        return _HEADER.pack(self.fw, self.fh, self.k, self.c) + self.values.astype("<f4").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "PredictionMap":
        if len(data) < _HEADER.size:
            raise InvalidInputError("prediction map file shorter than its header")
        fw, fh, k, c = _HEADER.unpack_from(data)
        body = data[_HEADER.size:]
        if len(body) % 4:
            raise InvalidInputError("prediction map body is not a whole number of float32 values")
        return cls(fw, fh, k, c, np.frombuffer(body, dtype="<f4").astype(float))

    def to_json(self) -> str:
        return json.dumps({"fw": self.fw, "fh": self.fh, "k": self.k, "c": self.c, "values": self.values.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "PredictionMap":
        try:
            d = json.loads(text)
            return cls(int(d["fw"]), int(d["fh"]), int(d["k"]), int(d["c"]), np.asarray(d["values"], dtype=float))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"bad prediction map JSON: {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> "PredictionMap":
        path = Path(path)
        data = path.read_bytes()
        if path.suffix.lower() == ".json" or data[:1] == b"{":
            return cls.from_json(data.decode())
        return cls.from_bytes(data)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def decode_map(pmap: PredictionMap, grid: AnchorGrid, score_floor: float = 0.0) -> list[Detection]:
    """Turn raw per-anchor outputs into scored detections, best first.

    score = sigmoid(confidence) * max softmax(class logits).
    """
    if pmap.k != ANCHORS_PER_POSITION or (pmap.fw, pmap.fh) != (grid.fw, grid.fh):
        raise InvalidInputError(
            f"map {pmap.fw}x{pmap.fh}x{pmap.k} does not match grid {grid.fw}x{grid.fh}x{grid.anchors_per_position}"
        )
    rows = pmap.rows()
    logits = rows[:, 5:5 + pmap.c]
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    probs = expd / expd.sum(axis=1, keepdims=True)
    class_ids = np.argmax(probs, axis=1)
    scores = _sigmoid(rows[:, -1]) * probs[np.arange(len(rows)), class_ids]

    keep = np.flatnonzero(scores >= score_floor)
    keep = keep[np.argsort(-scores[keep], kind="stable")]
    anchors = generate_array(grid)
    out = []
    for idx in keep:
        anchor = OrientedBox(*anchors[idx])
        box = decode(EncodedParams(*rows[idx, :5]), anchor)
        out.append(Detection(box, int(class_ids[idx]), float(min(1.0, scores[idx]))))
    return out


def nms(dets: Sequence[Detection], iou_threshold: float, mode: str = "exact") -> list[Detection]:
    """Greedy per-class suppression; survivors come back best-score first."""
    try:
        iou = IOU_FUNCTIONS[mode]
    except KeyError:
        raise InvalidInputError(f"unknown IoU mode {mode!r}") from None
    if mode == "horizontal":
        raise InvalidInputError("nms supports 'exact' or 'approx' IoU")
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    kept: list[Detection] = []
    for i in order:
        d = dets[i]
        if all(k.class_id != d.class_id or iou(k.box, d.box) < iou_threshold for k in kept):
            kept.append(d)
    return kept


# --- evaluation ------------------------------------------------------------------


def _rank_key(image: Hashable, det: Detection):
    # independent of input order, so shuffling never changes the ranking
    return (-det.score, str(image), det.box.as_tuple(), det.class_id)


def match_detections(
    dets_per_image: Mapping[Hashable, Sequence[Detection]],
    gts_per_image: Mapping[Hashable, Sequence[OrientedBox]],
    iou_threshold: float,
    iou: Callable[[OrientedBox, OrientedBox], float] = iou_exact,
) -> list[tuple[float, bool]]:
    """Rank all detections and flag each as true/false positive."""
    ranked = sorted(
        ((img, d) for img, ds in dets_per_image.items() for d in ds),
        key=lambda item: _rank_key(*item),
    )
    used = {img: [False] * len(g) for img, g in gts_per_image.items()}
    out = []
    for img, d in ranked:
        gts = gts_per_image.get(img, ())
        best, best_iou = -1, -1.0
        for gi, g in enumerate(gts):
            if used[img][gi]:
                continue
            v = iou(d.box, g)
            if v >= iou_threshold and v > best_iou:  # strict '>' keeps the lowest index on ties
                best, best_iou = gi, v
        if best >= 0:
            used[img][best] = True
        out.append((d.score, best >= 0))
    return out


def average_precision(tp_flags: Sequence[bool], n_gt: int, interpolation: str = "all") -> float:
    if n_gt <= 0:
        raise UndefinedRecallError("average precision is undefined without ground truth")
    if not tp_flags:
        return 0.0
    tp = np.cumsum(np.asarray(tp_flags, dtype=float))
    ranks = np.arange(1, len(tp) + 1)
    recall = tp / n_gt
    precision = tp / ranks
    if interpolation == "11":
        ap = 0.0
        for t in np.linspace(0.0, 1.0, 11):
            mask = recall >= t - 1e-12
            ap += precision[mask].max() if mask.any() else 0.0
        return float(ap / 11.0)
    if interpolation != "all":
        raise InvalidInputError(f"unknown interpolation {interpolation!r}")
    mrec = np.concatenate(([0.0], recall))
    mpre = np.concatenate(([0.0], precision))
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    steps = np.flatnonzero(mrec[1:] != mrec[:-1])
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def evaluate_ap(
    dets_per_image: Mapping[Hashable, Sequence[Detection]],
    gts_per_image: Mapping[Hashable, Sequence[OrientedBox]],
    iou_threshold: float = 0.5,
    interpolation: str = "all",
) -> float:
    """Single-class AP at an exact-IoU matching threshold."""
    if not (0.0 < iou_threshold <= 1.0):
        raise InvalidInputError(f"IoU threshold must lie in (0, 1], got {iou_threshold}")
    n_gt = sum(len(g) for g in gts_per_image.values())
    if n_gt == 0:
        raise UndefinedRecallError("no ground-truth boxes in any image")
    matched = match_detections(dets_per_image, gts_per_image, iou_threshold)
    return average_precision([tp for _, tp in matched], n_gt, interpolation)


# --- file formats ------------------------------------------------------------------

DET_FIELDS = ("image",) + BOX_FIELDS + ("class_id", "score")
GT_FIELDS = ("image",) + BOX_FIELDS


def _box_from_row(row: Mapping[str, str]) -> OrientedBox:
    return OrientedBox.from_dict(row)


def parse_detections(text: str) -> dict[str, list[Detection]]:
    """``image,cx,cy,w,h,theta,class_id,score`` CSV, or JSON ``{image: [{...}]}``."""
    out: dict[str, list[Detection]] = {}
    for img, row in _records(text, DET_FIELDS):
        try:
            det = Detection(_box_from_row(row), int(float(row.get("class_id", 0))), float(row.get("score", 1.0)))
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"bad detection row {row!r}: {exc}") from None
        out.setdefault(img, []).append(det)
    return out


def parse_ground_truth(text: str) -> dict[str, list[OrientedBox]]:
    out: dict[str, list[OrientedBox]] = {}
    for img, row in _records(text, GT_FIELDS):
        out.setdefault(img, []).append(_box_from_row(row))
    return out


def _records(text: str, fields: Sequence[str]) -> Iterable[tuple[str, Mapping]]:
    stripped = text.strip()
    if not stripped:
        return []
    if stripped[0] == "{":
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise InvalidInputError("expected a JSON object mapping image id to a list of records")
        return [(str(img), rec) for img, recs in data.items() for rec in recs]
    rows = read_csv_rows(stripped, fields)
    if rows and "image" not in rows[0]:
        raise InvalidInputError("CSV needs an 'image' column")
    return [(row["image"], row) for row in rows]


def load_detections(path: str | Path) -> dict[str, list[Detection]]:
    return parse_detections(_read(path))


def load_ground_truth(path: str | Path) -> dict[str, list[OrientedBox]]:
    return parse_ground_truth(_read(path))


def _read(path: str | Path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from None


def detections_to_csv(dets_per_image: Mapping[Hashable, Sequence[Detection]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DET_FIELDS)
    for img, ds in dets_per_image.items():
        for d in ds:
            w.writerow([img, *(repr(float(v)) for v in d.box.as_tuple()), d.class_id, repr(float(d.score))])
    return buf.getvalue()


def ground_truth_to_csv(gts_per_image: Mapping[Hashable, Sequence[OrientedBox]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GT_FIELDS)
    for img, gs in gts_per_image.items():
        for g in gs:
            w.writerow([img, *(repr(float(v)) for v in g.as_tuple())])
    return buf.getvalue()

