"""Command-line entry point.

Exit codes: 0 ok, 2 parse or config error, 3 target out of workspace,
4 unusable evaluation input, 5 mission timeout.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .anchors import N_SHAPES, kmeans_shapes
from .detection import evaluate_ap, load_detections, load_ground_truth
from .errors import (
    ConfigError,
    InvalidInputError,
    JointLimitError,
    OutOfWorkspaceError,
    UndefinedRecallError,
)
from .geometry import IOU_FUNCTIONS, OrientedBox, load_boxes
from .kinematics import ArmGeometry, inverse, workspace, workspace_to_csv
from .mission import MissionConfig, load_config, run, validate_config

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_WORKSPACE = 3
EXIT_EVAL_INPUT = 4
EXIT_TIMEOUT = 5


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _one_box(path: str, degrees: bool) -> OrientedBox:
    boxes = load_boxes(path)
    if len(boxes) != 1:
        raise InvalidInputError(f"{path}: expected exactly one box, found {len(boxes)}")
    b = boxes[0]
    return replace(b, theta=math.radians(b.theta)) if degrees else b


def _config(path: str | None) -> MissionConfig:
    return load_config(path) if path else MissionConfig()


def cmd_iou(args) -> int:
    a, b = _one_box(args.file_a, args.degrees), _one_box(args.file_b, args.degrees)
    print(f"{IOU_FUNCTIONS[args.mode](a, b):.6f}")
    return EXIT_OK


def cmd_ik(args) -> int:
    try:
        geom = ArmGeometry(args.l1, args.l2)
    except ValueError as exc:
        raise InvalidInputError(str(exc)) from None
    try:
        q = inverse(geom, (args.x, args.y), check_limits=args.check_limits)
    except (OutOfWorkspaceError, JointLimitError) as exc:
        raise CliError(f"out of workspace: {exc}", EXIT_WORKSPACE) from None
    t1, t2 = (math.degrees(q.theta1), math.degrees(q.theta2)) if args.degrees else (q.theta1, q.theta2)
    print(f"{t1:.9f} {t2:.9f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    dets, gts = load_detections(args.dets), load_ground_truth(args.gts)
    try:
        ap = evaluate_ap(dets, gts, args.iou, args.interpolation)
    except UndefinedRecallError as exc:
        raise CliError(str(exc), EXIT_EVAL_INPUT) from None
    print(f"{ap:.6f}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args.config)
    if args.time_cap is not None:
        cfg = replace(cfg, time_cap=args.time_cap)
        validate_config(cfg)
    log = run(cfg, args.seed)
    if args.log_out:
        log.write(args.log_out)
    print(json.dumps(log.summary(), sort_keys=True))
    return EXIT_OK if log.outcome == "done" else EXIT_TIMEOUT


def cmd_workspace(args) -> int:
    cfg = _config(args.config)
    samples = workspace(cfg.geometry(), cfg.flow, (cfg.arm.mount_forward, cfg.arm.mount_down), args.resolution)
    _emit(workspace_to_csv(samples), args.out)
    return EXIT_OK


def cmd_anchors(args) -> int:
    boxes = load_boxes(args.boxes)
    if not boxes:
        raise InvalidInputError(f"{args.boxes}: no boxes")
    shapes = kmeans_shapes(boxes, args.k, args.seed)
    _emit(json.dumps({"shapes": [list(s) for s in shapes]}, indent=2) + "\n", args.out)
    return EXIT_OK


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aerograsp", description="Aerial grasping geometry and mission tools.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("iou", help="IoU of two boxes (JSON or CSV files, one box each)")
    s.add_argument("file_a")
    s.add_argument("file_b")
    s.add_argument("--mode", choices=sorted(IOU_FUNCTIONS), default="exact")
    s.add_argument("--degrees", action="store_true", help="box angles in the files are degrees")
    s.set_defaults(func=cmd_iou)

    s = sub.add_parser("ik", help="downward-elbow inverse kinematics of the two-link arm")
    s.add_argument("--l1", type=float, default=0.2)
    s.add_argument("--l2", type=float, default=0.23)
    s.add_argument("--x", type=float, required=True)
    s.add_argument("--y", type=float, required=True)
    s.add_argument("--no-limits", dest="check_limits", action="store_false", help="skip joint-limit checks")
    s.add_argument("--degrees", action="store_true", help="print angles in degrees")
    s.set_defaults(func=cmd_ik)

    s = sub.add_parser("eval", help="average precision of detections against ground truth")
    s.add_argument("--dets", required=True)
    s.add_argument("--gts", required=True)
    s.add_argument("--iou", "--iou-threshold", dest="iou", type=float, default=0.5)
    s.add_argument("--interpolation", choices=("all", "11"), default="all")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("simulate", help="run one grasping mission")
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--time-cap", type=float)
    s.add_argument("--log-out", help="directory for mission.csv and summary.json")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("workspace", help="reachability and flow-zone map as CSV")
    s.add_argument("--config")
    s.add_argument("--resolution", type=float, default=0.01)
    s.add_argument("--out")
    s.set_defaults(func=cmd_workspace)

    s = sub.add_parser("anchors", help="k-means anchor shapes as JSON")
    s.add_argument("--boxes", required=True)
    s.add_argument("--k", type=int, default=N_SHAPES)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_anchors)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)  # argparse exits 2 on bad flags
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, InvalidInputError, UndefinedRecallError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
