import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aerograsp.anchors import (
    ANCHOR_ANGLES,
    AnchorGrid,
    EncodedParams,
    decode,
    encode,
    generate,
    generate_array,
    kmeans_shapes,
    kmeans_shapes_detailed,
    load_shapes,
    save_shapes,
)
from aerograsp.errors import InvalidInputError
from aerograsp.geometry import OrientedBox, angle_difference, corners

PI = math.pi
SHAPES = tuple((10.0 + 5 * i, 6.0 + 3 * i) for i in range(9))


def brute_force_kmeans_cost(wh_values, counts, k):
    """Best partition of the distinct shapes into k groups under mean-centroid, 1-IoU cost."""
    best = (math.inf, None)
    for assign in itertools.product(range(k), repeat=len(wh_values)):
        if len(set(assign)) != k:
            continue
        cents = []
        for c in range(k):
            idx = [i for i, a in enumerate(assign) if a == c]
            tw = sum(wh_values[i][0] * counts[i] for i in idx) / sum(counts[i] for i in idx)
            th = sum(wh_values[i][1] * counts[i] for i in idx) / sum(counts[i] for i in idx)
            cents.append((tw, th))
        cost = 0.0
        for (w, h), n in zip(wh_values, counts):
            cost += n * min(1 - (min(w, cw) * min(h, ch)) / (w * h + cw * ch - min(w, cw) * min(h, ch)) for cw, ch in cents)
        if cost < best[0]:
            best = (cost, sorted(cents))
    return best


# grid -----------------------------------------------------------------------

def test_angles_are_ninths_of_pi():
    assert ANCHOR_ANGLES == tuple(m * PI / 9 for m in range(9))


def test_single_position_81_anchors():
    anchors = generate(AnchorGrid(1, 1, 16.0, SHAPES))
    assert len(anchors) == 81
    assert all((a.cx, a.cy) == (8.0, 8.0) for a in anchors)


@pytest.mark.parametrize("fw, fh", [(2, 3), (1, 1), (7, 2)])
def test_anchor_count(fw, fh):
    grid = AnchorGrid(fw, fh, 8.0, SHAPES)
    assert len(generate(grid)) == fw * fh * 81 == len(grid)


def test_angle_multiset_per_position():
    anchors = generate(AnchorGrid(2, 2, 10.0, SHAPES))
    first = anchors[81:162]
    assert {(a.cx, a.cy) for a in first} == {(15.0, 5.0)}
    assert sorted(a.theta for a in first) == sorted(list(ANCHOR_ANGLES) * 9)
    assert sorted({(a.w, a.h) for a in first}) == sorted(SHAPES)


def test_ordering_row_column_shape_angle():
    anchors = generate(AnchorGrid(3, 2, 10.0, SHAPES))
    assert anchors[0] == OrientedBox(5, 5, *SHAPES[0], 0.0)
    assert anchors[1].theta == ANCHOR_ANGLES[1]
    assert (anchors[9].w, anchors[9].h) == SHAPES[1]
    assert (anchors[81].cx, anchors[81].cy) == (15.0, 5.0)
    assert (anchors[3 * 81].cx, anchors[3 * 81].cy) == (5.0, 15.0)


def test_array_form_matches_list():
    grid = AnchorGrid(4, 3, 12.0, SHAPES)
    arr = generate_array(grid)
    assert np.array_equal(arr, np.array([a.as_tuple() for a in generate(grid)]))


@pytest.mark.parametrize(
    "kwargs",
    [dict(fw=0, fh=1, stride=1.0, shapes=SHAPES), dict(fw=1, fh=1, stride=1.0, shapes=SHAPES[:8]),
     dict(fw=1, fh=1, stride=-1.0, shapes=SHAPES), dict(fw=1, fh=1, stride=1.0, shapes=((0, 1),) * 9)],
)
def test_invalid_grid(kwargs):
    with pytest.raises(InvalidInputError):
        AnchorGrid(**kwargs)


def test_grid_dict_roundtrip():
    g = AnchorGrid(3, 2, 16.0, SHAPES)
    assert AnchorGrid.from_dict(g.to_dict()) == g


# encode / decode ---------------------------------------------------------------

def test_encode_identity():
    a = OrientedBox(50, 40, 20, 10, 0.3)
    assert encode(a, a).as_tuple() == pytest.approx((0, 0, 0, 0, 0), abs=1e-15)


def test_encode_example():
    v = encode(OrientedBox(110, 105, 40, 10, PI / 2), OrientedBox(100, 100, 20, 10, 0))
    assert v.as_tuple() == pytest.approx((0.5, 0.5, math.log(2), 0.0, PI / 2), abs=1e-15)


def test_encode_period_pi():
    a = OrientedBox(0, 0, 4, 2, 2 * PI / 9)
    v = encode(OrientedBox(0, 0, 4, 2, a.theta + PI), a)
    assert v.vtheta == pytest.approx(0.0, abs=1e-12)


def test_decode_zero_is_anchor():
    a = OrientedBox(5, 6, 7, 8, 3.5)
    d = decode(EncodedParams(0, 0, 0, 0, 0), a)
    assert d.as_tuple() == pytest.approx((5, 6, 7, 8, 3.5 - PI))


def test_decode_example():
    d = decode(EncodedParams(0.5, 0.5, math.log(2), 0.0, PI / 2), OrientedBox(100, 100, 20, 10, 0))
    assert d.as_tuple() == pytest.approx((110, 105, 40, 10, PI / 2), abs=1e-12)


def test_non_finite_params_rejected():
    with pytest.raises(InvalidInputError):
        EncodedParams(0, 0, math.inf, 0, 0)


def test_roundtrip_seeded_1000():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        gt = OrientedBox(*rng.uniform(0, 400, 2), *rng.uniform(1, 200, 2), rng.uniform(0, PI))
        an = OrientedBox(*rng.uniform(0, 400, 2), *rng.uniform(1, 200, 2), ANCHOR_ANGLES[rng.integers(9)])
        back = decode(encode(gt, an), an)
        for f in ("cx", "cy", "w", "h"):
            assert abs(getattr(back, f) - getattr(gt, f)) < 1e-9
        assert angle_difference(back.theta, gt.theta) < 1e-9
        for p, q in zip(corners(back), corners(gt)):
            assert math.dist(p, q) < 1e-9


@given(
    st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(0.5, 300), st.floats(0.5, 300), st.floats(-10, 10),
    st.sampled_from(ANCHOR_ANGLES), st.floats(0.5, 300), st.floats(0.5, 300),
)
def test_roundtrip_property(cx, cy, w, h, th, ath, aw, ah):
    gt = OrientedBox(cx, cy, w, h, th)
    an = OrientedBox(0.0, 0.0, aw, ah, ath)
    back = decode(encode(gt, an), an)
    assert back.cx == pytest.approx(cx, abs=1e-9)
    assert back.cy == pytest.approx(cy, abs=1e-9)
    assert back.w == pytest.approx(w, rel=1e-12)
    assert back.h == pytest.approx(h, rel=1e-12)
    assert angle_difference(back.theta, th) < 1e-9
    assert 0.0 <= back.theta < PI


# k-means ----------------------------------------------------------------------

def test_kmeans_degenerate_all_same():
    boxes = [OrientedBox(i, i, 20, 10, 0.1 * i) for i in range(30)]
    assert kmeans_shapes(boxes, 9, seed=0) == [(20.0, 10.0)] * 9


def test_kmeans_single_box():
    assert kmeans_shapes([OrientedBox(0, 0, 13, 7)], 1, seed=4) == [(13.0, 7.0)]


def test_kmeans_two_clusters_matches_brute_force():
    boxes = [OrientedBox(0, 0, 10, 10)] * 50 + [OrientedBox(0, 0, 40, 40)] * 50
    cost, cents = brute_force_kmeans_cost([(10, 10), (40, 40)], [50, 50], 2)
    assert cents == [(10, 10), (40, 40)]
    for seed in range(5):
        assert kmeans_shapes(boxes, 2, seed=seed) == [(10.0, 10.0), (40.0, 40.0)]


def test_kmeans_separated_clusters_recovered():
    vals = [(8, 8), (30, 12), (11, 44)]
    boxes = [OrientedBox(0, 0, w, h) for w, h in vals for _ in range(10)]
    for seed in range(10):
        assert sorted(kmeans_shapes(boxes, 3, seed=seed)) == sorted(map(lambda v: (float(v[0]), float(v[1])), vals))


def test_kmeans_deterministic_and_monotone():
    rng = np.random.default_rng(5)
    boxes = [OrientedBox(0, 0, *rng.uniform(5, 120, 2)) for _ in range(400)]
    a = kmeans_shapes_detailed(boxes, 9, seed=17)
    b = kmeans_shapes_detailed(boxes, 9, seed=17)
    assert a.shapes == b.shapes
    assert len(a.shapes) == 9
    assert all(x >= y for x, y in zip(a.objective_history, a.objective_history[1:]))
    assert a.iterations <= 300


def test_kmeans_empty_input():
    with pytest.raises(InvalidInputError):
        kmeans_shapes([], 9)


def test_shapes_json_roundtrip(tmp_path):
    p = tmp_path / "shapes.json"
    save_shapes(list(SHAPES), p)
    assert load_shapes(p) == list(SHAPES)
