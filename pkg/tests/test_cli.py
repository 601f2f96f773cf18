import json
import math

import numpy as np
import pytest

from aerograsp.cli import main
from aerograsp.detection import detections_to_csv, ground_truth_to_csv
from aerograsp.geometry import OrientedBox, box_to_json, boxes_to_csv
from aerograsp.detection import Detection
from aerograsp.kinematics import ArmGeometry, JointState, forward

from fixtures import AP_EXPECTED, ap_fixture


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_box(path, box):
    path.write_text(box_to_json(box))
    return str(path)


# iou ----------------------------------------------------------------------------------


@pytest.mark.parametrize("mode", ["exact", "approx", "horizontal"])
def test_iou_identical(tmp_path, capsys, mode):
    b = OrientedBox(1, 2, 4, 2, 0.3)
    a_path, b_path = write_box(tmp_path / "a.json", b), write_box(tmp_path / "b.json", b)
    assert run_cli(capsys, "iou", a_path, b_path, "--mode", mode)[:2] == (0, "1.000000\n")


def test_iou_disjoint(tmp_path, capsys):
    a = write_box(tmp_path / "a.json", OrientedBox(0, 0, 1, 1))
    b = write_box(tmp_path / "b.json", OrientedBox(10, 0, 1, 1))
    assert run_cli(capsys, "iou", a, b)[:2] == (0, "0.000000\n")


def test_iou_approx_quarter_turn(tmp_path, capsys):
    a = write_box(tmp_path / "a.json", OrientedBox(0, 0, 4, 2, 0.0))
    b = tmp_path / "b.csv"
    b.write_text(boxes_to_csv([OrientedBox(0, 0, 4, 2, math.pi / 2)]))
    # same footprint, cos(pi/2 - 0) weighting: 1 * (1 + 0) / 2
    assert run_cli(capsys, "iou", a, str(b), "--mode", "approx")[1] == "0.500000\n"


def test_iou_degrees_flag(tmp_path, capsys):
    a = write_box(tmp_path / "a.json", OrientedBox(0, 0, 4, 2, 0.0))
    b = write_box(tmp_path / "b.json", OrientedBox(0, 0, 4, 2, 180.0))
    assert run_cli(capsys, "iou", a, b, "--degrees")[1] == "1.000000\n"
    # without the flag 180 rad is just some rotation
    assert run_cli(capsys, "iou", a, b)[1] != "1.000000\n"


def test_iou_parse_failure(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    good = write_box(tmp_path / "a.json", OrientedBox(0, 0, 1, 1))
    code, out, err = run_cli(capsys, "iou", str(bad), good)
    assert code == 2 and out == "" and "error" in err
    assert run_cli(capsys, "iou", str(tmp_path / "missing.json"), good)[0] == 2


def test_unknown_flag_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["ik", "--x", "1", "--y", "0", "--bogus"])
    assert exc.value.code != 0


# ik -----------------------------------------------------------------------------------


def test_ik_straight_arm(capsys):
    assert run_cli(capsys, "ik", "--l1", "1", "--l2", "1", "--x", "2", "--y", "0")[:2] == (
        0,
        "0.000000000 0.000000000\n",
    )


def test_ik_unreachable(capsys):
    code, out, err = run_cli(capsys, "ik", "--l1", "1", "--l2", "1", "--x", "3", "--y", "0")
    assert code == 3 and "out of workspace" in err


def test_ik_roundtrip_random(capsys):
    rng = np.random.default_rng(5)
    geom = ArmGeometry(0.2, 0.23)
    for _ in range(20):
        r = rng.uniform(0.06, 0.42)
        phi = rng.uniform(-1.0, 1.0)
        x, y = r * math.cos(phi), r * math.sin(phi)
        code, out, _ = run_cli(capsys, "ik", "--x", repr(x), "--y", repr(y), "--no-limits")
        assert code == 0
        t1, t2 = map(float, out.split())
        fx, fy, _ = forward(geom, JointState(t1, t2, 0.0))
        # 9 printed decimals bound the roundtrip error
        assert abs(fx - x) < 1e-8 and abs(fy - y) < 1e-8


def test_ik_degrees(capsys):
    out = run_cli(capsys, "ik", "--l1", "1", "--l2", "1", "--x", "1", "--y", "1", "--degrees")[1]
    assert [float(v) for v in out.split()] == pytest.approx([0.0, 90.0], abs=1e-9)


# eval ---------------------------------------------------------------------------------


def write_eval(tmp_path, dets, gts):
    d, g = tmp_path / "dets.csv", tmp_path / "gts.csv"
    d.write_text(detections_to_csv(dets))
    g.write_text(ground_truth_to_csv(gts))
    return str(d), str(g)


def test_eval_fixture(tmp_path, capsys):
    d, g = write_eval(tmp_path, *ap_fixture())
    code, out, _ = run_cli(capsys, "eval", "--dets", d, "--gts", g, "--iou", "0.5")
    assert code == 0 and out == f"{float(AP_EXPECTED):.6f}\n"


def test_eval_perfect_and_empty(tmp_path, capsys):
    _, gts = ap_fixture()
    perfect = {k: [Detection(b, 0, 0.9) for b in v] for k, v in gts.items()}
    d, g = write_eval(tmp_path, perfect, gts)
    assert run_cli(capsys, "eval", "--dets", d, "--gts", g)[1] == "1.000000\n"
    d, g = write_eval(tmp_path, {}, gts)
    assert run_cli(capsys, "eval", "--dets", d, "--gts", g)[1] == "0.000000\n"


def test_eval_without_gts(tmp_path, capsys):
    dets, _ = ap_fixture()
    d, g = write_eval(tmp_path, dets, {})
    assert run_cli(capsys, "eval", "--dets", d, "--gts", g)[0] == 4


# simulate -----------------------------------------------------------------------------


def test_simulate_default(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "simulate", "--seed", "0", "--log-out", str(tmp_path / "a"))
    assert code == 0 and json.loads(out)["success"] is True
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["outcome"] == "done" and summary["grasp_error"] <= 0.01
    run_cli(capsys, "simulate", "--seed", "0", "--log-out", str(tmp_path / "b"))
    for name in ("mission.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_timeout(tmp_path, capsys):
    cfg = tmp_path / "m.yaml"
    cfg.write_text("time_cap: 0.1\n")
    assert run_cli(capsys, "simulate", "--config", str(cfg))[0] == 5
    assert run_cli(capsys, "simulate", "--time-cap", "0.1")[0] == 5


def test_simulate_bad_config(tmp_path, capsys):
    cfg = tmp_path / "m.yaml"
    cfg.write_text("arm:\n  grasp_point: [0.6, 0.2]\n")
    out_dir = tmp_path / "logs"
    code, out, err = run_cli(capsys, "simulate", "--config", str(cfg), "--log-out", str(out_dir))
    assert code == 2 and "unreachable" in err and not out_dir.exists()
    assert run_cli(capsys, "simulate", "--config", str(tmp_path / "none.yaml"))[0] == 2


# workspace / anchors ---------------------------------------------------------------------


def test_workspace_has_both_zones(tmp_path, capsys):
    out = tmp_path / "ws.csv"
    assert run_cli(capsys, "workspace", "--out", str(out), "--resolution", "0.02")[0] == 0
    rows = [ln.split(",") for ln in out.read_text().splitlines()[1:]]
    zones = {r[2] for r in rows if r[3] == "1"}
    assert zones == {"weak", "strong"}


def test_anchors_default_k(tmp_path, capsys):
    rng = np.random.default_rng(0)
    boxes = [OrientedBox(0, 0, *map(float, rng.uniform(5, 50, 2))) for _ in range(200)]
    src = tmp_path / "boxes.csv"
    src.write_text(boxes_to_csv(boxes))
    code, out, _ = run_cli(capsys, "anchors", "--boxes", str(src), "--seed", "1")
    assert code == 0 and len(json.loads(out)["shapes"]) == 9


def test_anchors_single_box(tmp_path, capsys):
    src = write_box(tmp_path / "one.json", OrientedBox(0, 0, 12, 7))
    out = tmp_path / "a.json"
    assert run_cli(capsys, "anchors", "--boxes", src, "--out", str(out))[0] == 0
    assert json.loads(out.read_text())["shapes"] == [[12.0, 7.0]] * 9


def test_anchors_bad_input(tmp_path, capsys):
    empty = tmp_path / "e.csv"
    empty.write_text("")
    assert run_cli(capsys, "anchors", "--boxes", str(empty))[0] == 2
