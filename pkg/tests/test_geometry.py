import numpy as np

from riskplan.geometry import (
    point_segment_distance,
    segment_box_clip,
    segment_box_overlap,
    segment_hits_many,
    segments_cross,
)


def test_proper_crossing():
    assert segments_cross((0, 0), (2, 2), (0, 2), (2, 0))


def test_parallel_disjoint():
    assert not segments_cross((0, 0), (1, 0), (0, 1), (1, 1))


def test_collinear_overlap():
    assert segments_cross((0, 0), (2, 0), (1, 0), (3, 0))


def test_collinear_disjoint():
    assert not segments_cross((0, 0), (1, 0), (2, 0), (3, 0))


def test_endpoint_touch():
    assert segments_cross((0, 0), (1, 1), (1, 1), (2, 0))


def test_t_touch():
    # endpoint of one segment in the interior of the other
    assert segments_cross((0, -1), (0, 1), (-1, 0), (0, 0))


def test_near_miss():
    assert not segments_cross((0, -1), (0, 1), (1e-6, 0), (1, 0))


def test_degenerate_point_on_segment():
    assert segments_cross((0, 0), (2, 0), (1, 0), (1, 0))
    assert not segments_cross((0, 0), (2, 0), (1, 1), (1, 1))


def test_vectorized_matches_scalar():
    rng = np.random.default_rng(7)
    for _ in range(300):
        p = tuple(rng.uniform(0, 10, 2))
        q = tuple(rng.uniform(0, 10, 2))
        a = rng.uniform(0, 10, (40, 2))
        b = rng.uniform(0, 10, (40, 2))
        got = segment_hits_many(p, q, a, b)
        want = np.array(
            [segments_cross(p, q, tuple(a[i]), tuple(b[i])) for i in range(40)]
        )
        assert np.array_equal(got, want)


def test_box_overlap_basic():
    assert segment_box_overlap((0, 0), (2, 2), (0.5, 0.5), (1.5, 1.5))
    assert not segment_box_overlap((0, 3), (2, 3), (0.5, 0.5), (1.5, 1.5))


def test_box_boundary_touch_counts():
    # segment running along the top face of the box
    assert segment_box_overlap((0, 1.5), (2, 1.5), (0.5, 0.5), (1.5, 1.5))
    # corner touch
    assert segment_box_overlap((0, 2), (1.5, 1.5), (0.5, 0.5), (1.5, 1.5))


def test_box_vertical_segment():
    assert segment_box_overlap((1, 0), (1, 3), (0.5, 0.5), (1.5, 1.5))
    assert not segment_box_overlap((2, 0), (2, 3), (0.5, 0.5), (1.5, 1.5))


def test_clip_agrees_with_overlap():
    rng = np.random.default_rng(11)
    for _ in range(500):
        p = tuple(rng.uniform(-2, 2, 2))
        q = tuple(rng.uniform(-2, 2, 2))
        lo = tuple(rng.uniform(-2, 0, 2))
        hi = (lo[0] + rng.uniform(0.2, 2), lo[1] + rng.uniform(0.2, 2))
        clip = segment_box_clip(p, q, lo, hi)
        assert (clip is not None) == segment_box_overlap(p, q, lo, hi)
        if clip is not None:
            t0, t1 = clip
            assert -1e-12 <= t0 <= t1 <= 1 + 1e-12


def test_point_segment_distance():
    assert abs(point_segment_distance(0, 1, -1, 0, 1, 0) - 1.0) < 1e-12
    assert abs(point_segment_distance(3, 0, -1, 0, 1, 0) - 2.0) < 1e-12
    assert abs(point_segment_distance(0, 0, 1, 1, 1, 1) - np.sqrt(2)) < 1e-12
