import math

import numpy as np
import pytest

from cityforge.geometry import (
    DegeneratePolygon,
    InsetCollapse,
    Mesh,
    NonPositiveHeight,
    NonPositiveWidth,
    NonSimplePolygon,
    Point2,
    Polygon,
    Polyline,
    SplitFailed,
    convex_hull,
    extrude,
    inset,
    mesh_is_closed,
    mesh_volume,
    obb_split,
    point_in_polygon,
    ring_is_simple,
    signed_area,
    sweep_profile,
    triangulate,
    triangulate_indexed,
)

UNIT_SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1)]
L_SHAPE = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]


# --- independent oracles -----------------------------------------------------


def shoelace(points) -> float:
    s = 0.0
    n = len(points)
    for i in range(n):
        x0, y0 = points[i]
        x1, y1 = points[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return s / 2.0


def tet_volume(positions, triangles) -> float:
    v = 0.0
    for a, b, c in triangles:
        p0, p1, p2 = positions[a], positions[b], positions[c]
        v += np.dot(p0, np.cross(p1, p2)) / 6.0
    return v


def brute_force_obb_area(points, steps=20000) -> float:
    """Dense angle scan of the bounding-rectangle area (oracle for calipers)."""
    pts = np.asarray(points, dtype=float)
    best = math.inf
    for k in range(steps):
        t = math.pi / 2 * k / steps
        u = np.array([math.cos(t), math.sin(t)])
        v = np.array([-u[1], u[0]])
        su, sv = pts @ u, pts @ v
        best = min(best, (su.max() - su.min()) * (sv.max() - sv.min()))
    return best


def rasterized_area(mesh: Mesh, cell=0.05) -> float:
    """Count covered cells of a fine grid (oracle for ribbon area)."""
    xy = mesh.positions[:, :2]
    minx, miny = xy.min(axis=0) - cell
    maxx, maxy = xy.max(axis=0) + cell
    xs = np.arange(minx + cell / 2, maxx, cell)
    ys = np.arange(miny + cell / 2, maxy, cell)
    gx, gy = np.meshgrid(xs, ys)
    covered = np.zeros(gx.shape, dtype=bool)
    for tri in mesh.triangles:
        a, b, c = (xy[i] for i in tri)
        d1 = (b[0] - a[0]) * (gy - a[1]) - (b[1] - a[1]) * (gx - a[0])
        d2 = (c[0] - b[0]) * (gy - b[1]) - (c[1] - b[1]) * (gx - b[0])
        d3 = (a[0] - c[0]) * (gy - c[1]) - (a[1] - c[1]) * (gx - c[0])
        inside = ((d1 >= 0) & (d2 >= 0) & (d3 >= 0)) | ((d1 <= 0) & (d2 <= 0) & (d3 <= 0))
        covered |= inside
    return covered.sum() * cell * cell


def random_simple_polygon(rng: np.random.Generator, n=10, r_lo=0.5, r_hi=1.5):
    """Radial (star-shaped) polygon: angular gaps cover the full circle."""
    gaps = rng.uniform(0.2, 1.0, size=n)
    angles = 2 * math.pi * np.cumsum(gaps) / gaps.sum() + rng.uniform(0, 2 * math.pi)
    radii = rng.uniform(r_lo, r_hi, size=n)
    cx, cy = rng.uniform(-5, 5, size=2)
    pts = np.column_stack([cx + radii * np.cos(angles), cy + radii * np.sin(angles)])
    return Polygon(pts)


# --- construction ------------------------------------------------------------


def test_point_rejects_nan():
    with pytest.raises(Exception):
        Point2(float("nan"), 0.0)


def test_polyline_rejects_duplicate_neighbours():
    with pytest.raises(Exception):
        Polyline([(0, 0), (0, 0), (1, 1)])


def test_polygon_rejects_degenerate():
    with pytest.raises(DegeneratePolygon):
        Polygon([(0, 0), (1, 0), (2, 0)])


def test_polygon_drops_explicit_closure():
    p = Polygon([(0, 0), (1, 0), (1, 1), (0, 1), (0, 0)])
    assert len(p.outer) == 4


# --- signed_area -------------------------------------------------------------


def test_signed_area_unit_square_ccw():
    assert signed_area(Polygon(UNIT_SQUARE)) == pytest.approx(1.0, abs=1e-12)


def test_signed_area_reversed_ring():
    assert signed_area(Polygon(UNIT_SQUARE[::-1])) == pytest.approx(-1.0, abs=1e-12)


def test_signed_area_l_shape():
    assert signed_area(Polygon(L_SHAPE)) == pytest.approx(3.0, abs=1e-12)


def test_signed_area_hole_subtracts():
    outer = [(0, 0), (4, 0), (4, 4), (0, 4)]
    hole = [(1, 1), (1, 2), (2, 2), (2, 1)]  # clockwise
    assert signed_area(Polygon(outer, [hole])) == pytest.approx(15.0, abs=1e-12)


# --- triangulate -------------------------------------------------------------


def test_triangulate_unit_square():
    tris = triangulate(Polygon(UNIT_SQUARE))
    assert len(tris) == 2
    total = sum(abs(shoelace(t)) for t in tris)
    assert total == pytest.approx(1.0, rel=1e-12)


def test_triangulate_convex_pentagon():
    pts = [(math.cos(a), math.sin(a)) for a in np.linspace(0, 2 * math.pi, 6)[:-1]]
    assert len(triangulate(Polygon(pts))) == 3


def test_triangulate_count_matches_n_minus_2():
    rng = np.random.default_rng(7)
    for _ in range(50):
        poly = random_simple_polygon(rng, n=12)
        assert len(triangulate(poly)) == 10


def test_triangulate_random_polygons_conserve_area():
    rng = np.random.default_rng(42)
    for _ in range(200):
        poly = random_simple_polygon(rng, n=10)
        tris = triangulate(poly)
        total = sum(abs(shoelace(t)) for t in tris)
        expect = abs(shoelace(poly.outer))
        assert total == pytest.approx(expect, rel=1e-9)


def test_triangulate_polygon_with_hole():
    outer = [(0, 0), (6, 0), (6, 6), (0, 6)]
    hole = [(2, 2), (2, 4), (4, 4), (4, 2)]
    poly = Polygon(outer, [hole])
    tris = triangulate(poly)
    total = sum(abs(shoelace(t)) for t in tris)
    assert total == pytest.approx(32.0, rel=1e-9)
    # no triangle centroid may sit inside the hole
    for t in tris:
        cx, cy = t.mean(axis=0)
        assert not (2 < cx < 4 and 2 < cy < 4)


def test_triangulate_rejects_self_intersection():
    bowtie = Polygon([(0, 0), (4, 0), (1, 3), (3, 3)])
    with pytest.raises(NonSimplePolygon):
        triangulate(bowtie)


# --- inset -------------------------------------------------------------------


def test_inset_quarter_of_unit_square():
    out = inset(Polygon(UNIT_SQUARE), 0.25)
    assert abs(signed_area(out)) == pytest.approx(0.25, rel=1e-9)
    assert out.bounds() == pytest.approx((0.25, 0.25, 0.75, 0.75), abs=1e-9)


def test_inset_zero_is_identity():
    p = Polygon(UNIT_SQUARE)
    assert inset(p, 0.0) is p


def test_inset_collapse():
    with pytest.raises(InsetCollapse):
        inset(Polygon(UNIT_SQUARE), 0.6)


def test_inset_vertices_keep_distance():
    rng = np.random.default_rng(3)
    for _ in range(50):
        poly = random_simple_polygon(rng, n=8, r_lo=4.0, r_hi=6.0)
        try:
            res = inset(poly, 1.0)
        except InsetCollapse:
            continue
        ring = poly.outer
        for v in res.outer:
            d = min(
                _point_segment_distance(v, ring[i], ring[(i + 1) % len(ring)])
                for i in range(len(ring))
            )
            assert d >= 1.0 - 1e-6
            assert point_in_polygon(v, poly)


def _point_segment_distance(p, a, b):
    ab = b - a
    t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0, 1)
    return float(np.linalg.norm(a + t * ab - p))


# --- obb_split ---------------------------------------------------------------


def test_obb_split_2x1_rectangle():
    a, b = obb_split(Polygon([(0, 0), (2, 0), (2, 1), (0, 1)]))
    areas = sorted([abs(signed_area(a)), abs(signed_area(b))])
    assert areas == pytest.approx([1.0, 1.0], rel=1e-9)
    for half in (a, b):
        xs = half.outer[:, 0]
        assert xs.max() - xs.min() == pytest.approx(1.0, abs=1e-9)


def test_obb_split_tie_breaks_perpendicular_to_x():
    a, b = obb_split(Polygon(UNIT_SQUARE))
    # cut perpendicular to the x extent: halves are 0.5 wide, 1.0 tall
    for half in (a, b):
        xs, ys = half.outer[:, 0], half.outer[:, 1]
        assert xs.max() - xs.min() == pytest.approx(0.5, abs=1e-9)
        assert ys.max() - ys.min() == pytest.approx(1.0, abs=1e-9)


def test_obb_split_rotated_rectangle():
    base = np.array([(0, 0), (4, 0), (4, 2), (0, 2)], dtype=float)
    t = math.radians(45)
    rot = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    poly = Polygon(base @ rot.T + [10, -3])
    # oracle: dense angle scan agrees the min-area box is the rectangle itself
    assert brute_force_obb_area(poly.outer) == pytest.approx(8.0, rel=1e-4)
    a, b = obb_split(poly)
    assert abs(signed_area(a)) == pytest.approx(4.0, rel=1e-9)
    assert abs(signed_area(b)) == pytest.approx(4.0, rel=1e-9)


def test_obb_split_conserves_area_on_random_polygons():
    rng = np.random.default_rng(12345)
    for _ in range(200):
        poly = random_simple_polygon(rng, n=10, r_lo=0.8, r_hi=1.2)
        a, b = obb_split(poly)
        total = abs(signed_area(a)) + abs(signed_area(b))
        assert total == pytest.approx(abs(signed_area(poly)), rel=1e-9)
        # both halves stay inside the parent
        for p in np.vstack([a.outer, b.outer]):
            assert point_in_ring(p, poly.outer)


def point_in_ring(p, ring):
    from cityforge.geometry import point_in_ring as pir

    return pir(p, ring)


def test_obb_split_sliver_fails():
    thin = Polygon([(0, 0), (1e-3, 0), (1e-3, 1e-4), (0, 1e-4)])
    with pytest.raises((SplitFailed, DegeneratePolygon)):
        obb_split(thin)


# --- extrude -----------------------------------------------------------------


def test_extrude_unit_cube():
    mesh = extrude(Polygon(UNIT_SQUARE), 2.0)
    assert len(mesh.positions) == 8
    assert len(mesh.triangles) == 12
    assert mesh_volume(mesh) == pytest.approx(2.0, rel=1e-9)
    assert mesh_is_closed(mesh)


def test_extrude_rejects_zero_height():
    with pytest.raises(NonPositiveHeight):
        extrude(Polygon(UNIT_SQUARE), 0.0)


def test_extrude_l_shape_volume():
    mesh = extrude(Polygon(L_SHAPE), 1.0)
    assert tet_volume(mesh.positions, mesh.triangles) == pytest.approx(3.0, rel=1e-9)
    assert mesh_is_closed(mesh)


def test_extrude_random_volume_matches_area_times_height():
    rng = np.random.default_rng(99)
    for _ in range(200):
        poly = random_simple_polygon(rng, n=10)
        h = float(rng.uniform(0.5, 30.0))
        mesh = extrude(poly, h)
        expect = abs(shoelace(poly.outer)) * h
        assert mesh_volume(mesh) == pytest.approx(expect, rel=1e-9)
        assert mesh_is_closed(mesh)


def test_extrude_with_hole_is_closed():
    outer = [(0, 0), (6, 0), (6, 6), (0, 6)]
    hole = [(2, 2), (2, 4), (4, 4), (4, 2)]
    mesh = extrude(Polygon(outer, [hole]), 3.0)
    assert mesh_is_closed(mesh)
    assert mesh_volume(mesh) == pytest.approx(32.0 * 3.0, rel=1e-9)


def test_mesh_normals_are_unit():
    mesh = extrude(Polygon(L_SHAPE), 2.5)
    lens = np.linalg.norm(mesh.normals, axis=1)
    assert np.allclose(lens, 1.0, atol=1e-6)


# --- sweep_profile -----------------------------------------------------------


def test_sweep_straight_segment():
    mesh = sweep_profile(Polyline([(0, 0), (10, 0)]), 4.0)
    area = sum(abs(shoelace(mesh.positions[t][:, :2])) for t in mesh.triangles)
    assert area == pytest.approx(40.0, rel=1e-9)


def test_sweep_right_angle_area():
    mesh = sweep_profile(Polyline([(0, 0), (10, 0), (10, 10)]), 2.0)
    area = rasterized_area(mesh)
    assert area == pytest.approx(40.0, rel=0.05)


def test_sweep_rejects_zero_width():
    with pytest.raises(NonPositiveWidth):
        sweep_profile(Polyline([(0, 0), (1, 0)]), 0.0)


# --- misc helpers ------------------------------------------------------------


def test_convex_hull_square_with_interior_points():
    pts = np.array(UNIT_SQUARE + [(0.5, 0.5), (0.2, 0.7)])
    hull = convex_hull(pts)
    assert len(hull) == 4
    assert abs(shoelace(hull)) == pytest.approx(1.0, rel=1e-12)


def test_ring_is_simple_detects_bowtie():
    assert not ring_is_simple(np.array([(0, 0), (2, 2), (2, 0), (0, 2)], dtype=float))
    assert ring_is_simple(np.array(UNIT_SQUARE, dtype=float))


def test_determinism_bitwise():
    rng = np.random.default_rng(5)
    poly = random_simple_polygon(rng, n=9)
    t1 = triangulate(poly)
    t2 = triangulate(poly)
    assert all((a == b).all() for a, b in zip(t1, t2))
    m1 = extrude(poly, 4.0)
    m2 = extrude(poly, 4.0)
    assert (m1.positions == m2.positions).all()
    assert (m1.triangles == m2.triangles).all()
