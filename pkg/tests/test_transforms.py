"""Geometry and invariance tests for the hull-conditioned transformation."""

import math
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from ppmoments.montecarlo import Window, sample_poisson
from ppmoments.transforms import (
    Box,
    Disk,
    TransformSpec,
    apply_tau,
    convex_hull,
    hull_frame,
    invariance_suite,
    orientation,
    poisson_count_gof,
    push_forward,
    region_from_config,
    regions_disjoint,
    rho_tau_check,
    verify_transform_condition,
)
from ppmoments.transforms import _apply_in_frame

BIG_WINDOW = Window(-1.2, 1.2, -1.2, 1.2)
SQUARE = frozenset([(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)])


def brute_force_extreme_points(points):
    """Oracle: p is extreme iff it lies in no triangle or segment spanned by
    other points (exact rational arithmetic)."""
    pts = [(Fraction(x), Fraction(y)) for x, y in points]
    extreme = []
    for idx, p in enumerate(pts):
        others = [q for j, q in enumerate(pts) if j != idx]
        inside = False
        for a, b, c in combinations(others, 3):
            if _in_triangle(p, a, b, c):
                inside = True
                break
        if not inside:
            for a, b in combinations(others, 2):
                if _on_segment(p, a, b):
                    inside = True
                    break
        if not inside:
            extreme.append(points[idx])
    return set(extreme)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _in_triangle(p, a, b, c):
    d1 = _cross(a, b, p)
    d2 = _cross(b, c, p)
    d3 = _cross(c, a, p)
    has_neg = d1 < 0 or d2 < 0 or d3 < 0
    has_pos = d1 > 0 or d2 > 0 or d3 > 0
    return not (has_neg and has_pos)


def _on_segment(p, a, b):
    if _cross(a, b, p) != 0:
        return False
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def test_orientation_signs_and_exact_fallback():
    assert orientation((0, 0), (1, 0), (0, 1)) == 1
    assert orientation((0, 0), (0, 1), (1, 0)) == -1
    assert orientation((0, 0), (1, 1), (2, 2)) == 0
    # nearly collinear: the float determinant is below the filter threshold,
    # so the rational fallback decides the sign exactly
    a = (0.0, 0.0)
    b = (1.0, 1.0)
    c = (2.0, 2.0 + 2.0**-51)
    assert orientation(a, b, c) == 1
    assert orientation(a, b, (2.0, 2.0 - 2.0**-51)) == -1


def test_convex_hull_drops_interior_and_collinear():
    square_plus = list(SQUARE) + [(0.0, 0.0), (0.0, -0.5)]
    hull = convex_hull(square_plus)
    assert set(hull) == set(SQUARE)
    assert len(hull) == 4


def test_convex_hull_matches_brute_force_oracle():
    rng = np.random.default_rng(4)
    for _ in range(20):
        n = int(rng.integers(3, 9))
        points = [tuple(map(float, rng.uniform(-1, 1, 2))) for _ in range(n)]
        hull = convex_hull(points)
        assert set(hull) == brute_force_extreme_points(points)


def test_convex_hull_ccw_orientation():
    hull = convex_hull(list(SQUARE) + [(0.1, 0.2)])
    area2 = 0.0
    for i in range(len(hull)):
        a = hull[i]
        b = hull[(i + 1) % len(hull)]
        area2 += a[0] * b[1] - a[1] * b[0]
    assert area2 > 0.0


def test_hull_frame_degenerate_cases():
    assert hull_frame(frozenset()) is None
    assert hull_frame(frozenset({(0.1, 0.1), (0.3, 0.3)})) is None
    collinear = frozenset({(0.0, 0.0), (0.2, 0.2), (0.4, 0.4)})
    assert hull_frame(collinear) is None
    outside = frozenset({(2.0, 0.0), (0.0, 2.0), (2.0, 2.0)})
    assert hull_frame(outside) is None


def test_hull_frame_restricted_to_unit_disk():
    config = SQUARE | {(3.0, 3.0), (-2.0, 1.0)}
    frame = hull_frame(config)
    assert frame is not None
    assert set(frame.extremal_vertices) == set(SQUARE)
    assert frame.total_area == pytest.approx(1.0)
    assert frame.anchor == pytest.approx((0.0, 0.0))


def test_hull_frame_boundary_radius():
    frame = hull_frame(SQUARE)
    # along the axes the square boundary sits at distance 0.5
    assert frame.boundary_radius(0.0) == pytest.approx(0.5)
    assert frame.boundary_radius(math.pi / 2) == pytest.approx(0.5)
    # at 45 degrees the corner is at distance sqrt(2)/2
    assert frame.boundary_radius(math.pi / 4) == pytest.approx(math.sqrt(2) / 2)


def test_apply_tau_offset_zero_is_identity():
    spec = TransformSpec(0.0)
    assert apply_tau(spec, (0.2, 0.1), SQUARE) == (0.2, 0.1)


def test_apply_tau_fixes_non_interior_points():
    spec = TransformSpec(0.41)
    assert apply_tau(spec, (0.9, 0.9), SQUARE) == (0.9, 0.9)
    for vertex in SQUARE:
        assert apply_tau(spec, vertex, SQUARE) == vertex
    assert apply_tau(spec, (0.0, 0.0), SQUARE) == (0.0, 0.0)  # anchor


def test_apply_tau_equilateral_triangle_is_rotation():
    triangle = [
        (math.cos(a), math.sin(a)) for a in (0.0, 2 * math.pi / 3, 4 * math.pi / 3)
    ]
    config = frozenset(triangle)
    spec = TransformSpec(1.0 / 3.0)
    frame = hull_frame(config)
    cos120, sin120 = math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3)
    rng = np.random.default_rng(9)
    checked = 0
    for _ in range(100):
        w = rng.dirichlet([1.0, 1.0, 1.0])
        x = (
            sum(wi * p[0] for wi, p in zip(w, triangle)),
            sum(wi * p[1] for wi, p in zip(w, triangle)),
        )
        if not frame.contains_interior(x):
            continue
        image = apply_tau(spec, x, config)
        expected = (cos120 * x[0] - sin120 * x[1], sin120 * x[0] + cos120 * x[1])
        assert image == pytest.approx(expected, abs=1e-9)
        checked += 1
    assert checked > 50


def test_apply_tau_preserves_area_on_random_boxes():
    frame = hull_frame(SQUARE)
    rng = np.random.default_rng(10)
    n = 60_000
    points = rng.random((n, 2)) - 0.5
    images = [
        _apply_in_frame(frame, 0.37, (float(x), float(y))) for x, y in points
    ]
    for _ in range(4):
        x0, y0 = rng.uniform(-0.45, 0.2, 2)
        w, h = rng.uniform(0.05, 0.25, 2)
        inside_before = sum(
            1 for x, y in points if x0 <= x <= x0 + w and y0 <= y <= y0 + h
        )
        inside_after = sum(
            1 for x, y in images if x0 <= x <= x0 + w and y0 <= y <= y0 + h
        )
        p = inside_before / n
        se = math.sqrt(2 * p * (1 - p) / n)
        assert abs(inside_after - inside_before) / n <= 5 * se


def test_apply_tau_depends_only_on_extremal_vertices():
    spec = TransformSpec(0.29)
    config = sample_poisson(BIG_WINDOW, 20.0, 15)
    frame = hull_frame(config)
    assert frame is not None
    reduced = frozenset(frame.extremal_vertices)
    for point in list(config)[:12]:
        assert apply_tau(spec, point, config) == apply_tau(spec, point, reduced)


def test_push_forward_identity_cases():
    spec = TransformSpec(0.0)
    config = sample_poisson(BIG_WINDOW, 10.0, 1)
    assert push_forward(spec, config) == config
    tiny = frozenset({(0.1, 0.1), (0.2, 0.3)})
    assert push_forward(TransformSpec(0.5), tiny) == tiny


def test_push_forward_preserves_cardinality():
    spec = TransformSpec(0.37)
    for seed in range(40):
        config = sample_poisson(BIG_WINDOW, 12.0, 100 + seed)
        assert len(push_forward(spec, config)) == len(config)


def test_tau_differences_vanish_when_hull_is_stable():
    # adding points inside the hull leaves the extremal vertices unchanged,
    # so tau(x, omega u eta) = tau(x, omega) exactly for every such eta
    spec = TransformSpec(0.52)
    config = SQUARE | {(0.2, 0.1)}
    interior_extras = [(0.05, -0.1), (-0.2, 0.2), (0.3, -0.3)]
    probes = [(0.2, 0.1), (0.05, -0.1), (0.9, 0.9)]
    for x in probes:
        base = apply_tau(spec, x, config)
        for k in range(1, len(interior_extras) + 1):
            augmented = config | frozenset(interior_extras[:k])
            assert apply_tau(spec, x, augmented) == base


def test_verify_transform_condition_sampled_instances():
    rng = np.random.default_rng(6)
    for seed in range(20):
        config = sample_poisson(BIG_WINDOW, 10.0, 300 + seed)
        length = int(rng.integers(1, 4))
        points = tuple(
            (float(x), float(y)) for x, y in rng.uniform(-1.1, 1.1, (length, 2))
        )
        offset = float(rng.uniform(0.0, 1.0))
        assert verify_transform_condition(TransformSpec(offset), config, points, 1e-9)


def test_verify_transform_condition_offset_zero_and_guard():
    config = sample_poisson(BIG_WINDOW, 8.0, 77)
    assert verify_transform_condition(
        TransformSpec(0.0), config, ((0.1, 0.1), (0.4, -0.2)), 1e-12
    )
    with pytest.raises(ValueError):
        verify_transform_condition(TransformSpec(0.1), config, ((0.0, 0.0),) * 4)


def test_transform_spec_validation():
    with pytest.raises(ValueError):
        TransformSpec(1.0)
    with pytest.raises(ValueError):
        TransformSpec(-0.1)


def test_region_helpers():
    box = Box(-0.5, 0.0, -0.5, 0.0)
    disk = Disk(0.4, 0.4, 0.2)
    assert box.area == pytest.approx(0.25)
    assert disk.area == pytest.approx(math.pi * 0.04)
    assert box.contains((-0.25, -0.25))
    assert not box.contains((0.1, -0.25))
    assert disk.contains((0.4, 0.5))
    assert regions_disjoint(box, disk)
    assert not regions_disjoint(box, Box(-0.6, -0.4, -0.6, -0.4))
    assert region_from_config(
        {"type": "box", "x_min": 0, "x_max": 1, "y_min": 0, "y_max": 1}
    ) == Box(0, 1, 0, 1)
    assert region_from_config({"type": "disk", "cx": 0, "cy": 0, "radius": 0.5}) == Disk(
        0, 0, 0.5
    )
    with pytest.raises(ValueError):
        region_from_config({"type": "square"})


def test_poisson_count_gof_calibration():
    rng = np.random.default_rng(123)
    counts = rng.poisson(5.0, size=20_000)
    stat, dof, p = poisson_count_gof(counts, 5.0)
    assert dof >= 2
    assert p > 1e-3
    # a clearly wrong mean is rejected
    _, _, p_bad = poisson_count_gof(counts, 7.0)
    assert p_bad < 1e-6


def test_invariance_suite_offset_zero_matches_poisson_exactly():
    regions = [Box(-0.6, -0.2, -0.2, 0.2), Box(0.2, 0.6, -0.2, 0.2)]
    report = invariance_suite(
        TransformSpec(0.0), Window(-1.05, 1.05, -1.05, 1.05), 30.0, regions, 800, 5
    )
    assert report.passed()
    payload = report.to_dict()
    assert len(payload["gof"]) == 2
    assert len(payload["covariances"]) == 1
    assert len(payload["moments"]) == 6


def test_invariance_suite_rotated_counts_stay_poisson():
    regions = [
        Box(-0.6, -0.2, -0.2, 0.2),
        Box(0.2, 0.6, -0.2, 0.2),
        Box(-0.2, 0.2, 0.3, 0.62),
    ]
    report = invariance_suite(
        TransformSpec(0.37), Window(-1.05, 1.05, -1.05, 1.05), 40.0, regions, 2000, 17
    )
    assert report.passed(), report.to_dict()


def test_invariance_suite_geometry_validation():
    window = Window(-1.05, 1.05, -1.05, 1.05)
    with pytest.raises(ValueError):
        invariance_suite(
            TransformSpec(0.1), Window(0, 1, 0, 1), 5.0, [Box(-0.1, 0.1, -0.1, 0.1)], 10, 0
        )
    with pytest.raises(ValueError):
        invariance_suite(TransformSpec(0.1), window, 5.0, [Box(0.8, 1.2, 0.8, 1.2)], 10, 0)
    with pytest.raises(ValueError):
        invariance_suite(
            TransformSpec(0.1), window, 5.0,
            [Box(-0.2, 0.2, -0.2, 0.2), Box(-0.1, 0.1, -0.1, 0.1)], 10, 0,
        )


def test_rho_tau_check_constant_correlation():
    report = rho_tau_check(
        TransformSpec(0.37), Window(-1.05, 1.05, -1.05, 1.05), 25.0, 1200, 19
    )
    assert report.passed(), report.to_dict()
    payload = report.to_dict()
    assert len(payload["first_moments"]) == 9
    assert len(payload["second_moments"]) == 36


def test_rho_tau_offset_zero_baseline():
    report = rho_tau_check(
        TransformSpec(0.0), Window(-1.05, 1.05, -1.05, 1.05), 20.0, 600, 23, grid_size=2
    )
    assert report.passed()
