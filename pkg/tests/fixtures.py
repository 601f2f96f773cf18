"""Hand-built evaluation fixtures shared by unit and acceptance tests."""

from fractions import Fraction

from aerograsp.detection import Detection
from aerograsp.geometry import OrientedBox

# Ranked outcome of the 21 detections below (T = true positive, F = false positive).
AP_PATTERN = "TTTFTTTTFTTFTTTFTTFTF"

# 20 gts, 15 TPs. Interpolated precision at each TP, in rank order:
#   3 x 1, 4 x 7/8, 2 x 9/11, 3 x 4/5, 2 x 7/9, 1 x 3/4
# AP = (3 + 4*7/8 + 2*9/11 + 3*4/5 + 2*7/9 + 3/4) / 20 = 25427/39600
AP_EXPECTED = Fraction(25427, 39600)


def gt_box(i: int) -> OrientedBox:
    return OrientedBox(50.0 + i, 60.0, 20.0, 10.0, 0.1 * (i % 5))


def ap_fixture():
    """Return ``(dets_per_image, gts_per_image)`` realising :data:`AP_PATTERN`."""
    gts = {f"img{i:02d}": [gt_box(i)] for i in range(20)}
    dets: dict[str, list[Detection]] = {}

    def add(img, box, rank):
        dets.setdefault(img, []).append(Detection(box, 0, round(1.0 - 0.04 * rank, 10)))

    next_tp = 0
    false_positives = {
        4: ("img00", gt_box(0)),  # duplicate of the rank-1 match
        9: ("img03", OrientedBox(400, 400, 20, 10, 0.0)),  # disjoint
        12: ("img17", OrientedBox(50.0 + 17 + 15, 60.0, 20, 10, 0.1 * 2)),  # IoU 1/7
        16: ("extra", OrientedBox(50, 60, 20, 10, 0.0)),  # image without gt
        19: ("img05", gt_box(5)),  # duplicate of the rank-6 match
        21: ("img19", OrientedBox(50.0 + 19, 60.0, 20, 10, 0.1 * 4 + 1.5707963267948966)),  # IoU 1/3
    }
    for rank, outcome in enumerate(AP_PATTERN, start=1):
        if outcome == "T":
            img = f"img{next_tp:02d}"
            add(img, gt_box(next_tp), rank)
            next_tp += 1
        else:
            img, box = false_positives[rank]
            add(img, box, rank)
    return dets, gts
