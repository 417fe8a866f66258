import numpy as np
import pytest

from cityforge.geometry import Polygon, Polyline, point_in_ring, signed_area
from cityforge.layout import (
    CityLayout,
    EmptyInput,
    RoadGraph,
    assemble_layout,
    build_road_graph,
    check_layout_invariants,
    extract_blocks,
    generate_footprints,
    subdivide_block,
    trace_centerlines,
)
from cityforge.osm import classify_layers, parse_osm
from cityforge.raster import ClassGrid, Palette

PAL = Palette.default()


def road(points, cls="residential", width=8.0):
    return (Polyline(points), cls, width)


def brute_force_crossings(graph: RoadGraph) -> int:
    """Oracle: count strict interior crossings between graph edges."""
    segs = [(graph.vertices[a], graph.vertices[b]) for a, b, _, _ in graph.edges]
    count = 0
    for i in range(len(segs)):
        p1, p2 = segs[i]
        for j in range(i + 1, len(segs)):
            p3, p4 = segs[j]
            d1 = _cross(p3, p4, p1)
            d2 = _cross(p3, p4, p2)
            d3 = _cross(p1, p2, p3)
            d4 = _cross(p1, p2, p4)
            if ((d1 > 1e-9 and d2 < -1e-9) or (d1 < -1e-9 and d2 > 1e-9)) and (
                (d3 > 1e-9 and d4 < -1e-9) or (d3 < -1e-9 and d4 > 1e-9)
            ):
                count += 1
    return count


def _cross(a, b, p):
    return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])


# --- build_road_graph ---------------------------------------------------------


def test_crossing_segments_split():
    graph = build_road_graph(
        [road([(0, 5), (10, 5)]), road([(5, 0), (5, 10)])]
    )
    assert len(graph.vertices) == 5
    assert len(graph.edges) == 4


def test_single_segment_identity():
    graph = build_road_graph([road([(0, 0), (10, 0)])])
    assert len(graph.vertices) == 2
    assert len(graph.edges) == 1


def test_endpoint_snapping():
    graph = build_road_graph(
        [road([(0, 0), (10, 0)]), road([(10.005, 0.0), (20, 0)])]
    )
    assert len(graph.vertices) == 3


def test_random_segments_planar():
    rng = np.random.default_rng(8)
    roads = []
    for _ in range(50):
        p = rng.uniform(0, 100, size=2)
        q = rng.uniform(0, 100, size=2)
        if np.linalg.norm(p - q) > 1.0:
            roads.append(road([p, q]))
    graph = build_road_graph(roads)
    assert brute_force_crossings(graph) == 0


# --- extract_blocks -------------------------------------------------------------


def grid_roads(n=3, spacing=100.0, width=8.0):
    roads = []
    for i in range(n):
        roads.append(road([(0, i * spacing), ((n - 1) * spacing, i * spacing)], width=width))
        roads.append(road([(i * spacing, 0), (i * spacing, (n - 1) * spacing)], width=width))
    return roads


def test_grid_yields_four_blocks():
    graph = build_road_graph(grid_roads(3))
    blocks = extract_blocks(graph)
    assert len(blocks) == 4
    for b in blocks:
        # inset by half the 8 m road width: 100 -> 92 per side
        assert abs(signed_area(b)) == pytest.approx(92.0 * 92.0, rel=1e-9)


def test_single_segment_no_blocks():
    graph = build_road_graph([road([(0, 0), (10, 0)])])
    assert extract_blocks(graph) == []


def test_triangle_one_block():
    graph = build_road_graph(
        [road([(0, 0), (100, 0)]), road([(100, 0), (50, 80)]), road([(50, 80), (0, 0)])]
    )
    blocks = extract_blocks(graph)
    assert len(blocks) == 1


def test_dangling_spur_ignored():
    roads = grid_roads(3) + [road([(50, 50), (50, 150)])]
    graph = build_road_graph(roads)
    blocks = extract_blocks(graph)
    assert len(blocks) == 4


# --- subdivide_block ------------------------------------------------------------


def test_subdivide_quarters():
    block = Polygon([(0, 0), (4, 0), (4, 4), (0, 4)])
    parcels = subdivide_block(block, target_area=4.0)
    assert len(parcels) == 4
    for p in parcels:
        assert abs(signed_area(p)) == pytest.approx(4.0, rel=1e-9)


def test_subdivide_small_block_identity():
    block = Polygon([(0, 0), (10, 0), (10, 10), (0, 10)])
    parcels = subdivide_block(block, target_area=200.0)
    assert len(parcels) == 1
    assert abs(signed_area(parcels[0])) == pytest.approx(100.0)


def test_subdivide_conserves_area():
    rng = np.random.default_rng(31)
    for _ in range(50):
        n = 8
        gaps = rng.uniform(0.2, 1.0, size=n)
        angles = 2 * np.pi * np.cumsum(gaps) / gaps.sum()
        radii = rng.uniform(20, 40, size=n)
        pts = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
        block = Polygon(pts)
        parcels = subdivide_block(block, target_area=300.0)
        total = sum(abs(signed_area(p)) for p in parcels)
        assert total == pytest.approx(abs(signed_area(block)), rel=1e-9)
        for p in parcels:
            assert abs(signed_area(p)) <= 300.0 + 1e-6 or len(parcels) == 1


def test_subdivide_depth_cap():
    block = Polygon([(0, 0), (4096, 0), (4096, 4096), (0, 4096)])
    parcels = subdivide_block(block, target_area=1.0, max_depth=12)
    assert len(parcels) == 2**12


# --- generate_footprints --------------------------------------------------------


def test_footprint_inset_rule():
    parcel = Polygon([(0, 0), (20, 0), (20, 20), (0, 20)])
    fps = generate_footprints([(parcel, 0)], ["residential"], seed=1)
    assert len(fps) == 1
    assert abs(signed_area(fps[0].polygon)) == pytest.approx(14.0 * 14.0, rel=1e-9)


def test_footprint_collapse_skipped():
    parcel = Polygon([(0, 0), (5, 0), (5, 5), (0, 5)])
    assert generate_footprints([(parcel, 0)], ["residential"], seed=1) == []


def test_footprint_heights_deterministic():
    rng = np.random.default_rng(2)
    parcels = []
    for i in range(100):
        x, y = rng.uniform(0, 1000, size=2)
        parcels.append((Polygon([(x, y), (x + 20, y), (x + 20, y + 20), (x, y + 20)]), i))
    a = generate_footprints(parcels, ["residential"] * 100, seed=42)
    b = generate_footprints(parcels, ["residential"] * 100, seed=42)
    assert [f.height for f in a] == [f.height for f in b]
    c = generate_footprints(parcels, ["residential"] * 100, seed=43)
    assert [f.height for f in a] != [f.height for f in c]


def test_footprint_heights_quantized_and_clamped():
    parcels = [
        (Polygon([(30 * i, 0), (30 * i + 25, 0), (30 * i + 25, 25), (30 * i, 25)]), i)
        for i in range(200)
    ]
    fps = generate_footprints(parcels, ["commercial"] * 200, seed=7)
    for fp in fps:
        assert fp.height % 3.0 == pytest.approx(0.0, abs=1e-12)
        assert 3.0 <= fp.height <= 150.0


# --- assemble_layout ------------------------------------------------------------

OSM_SAMPLE = """<?xml version="1.0" encoding="UTF-8"?>
<osm version="0.6">
  <node id="1" lat="0.0" lon="0.0"/>
  <node id="2" lat="0.0" lon="0.004"/>
  <node id="3" lat="0.004" lon="0.004"/>
  <node id="4" lat="0.004" lon="0.0"/>
  <node id="5" lat="0.0008" lon="0.0008"/>
  <node id="6" lat="0.0008" lon="0.0012"/>
  <node id="7" lat="0.0012" lon="0.0012"/>
  <node id="8" lat="0.0012" lon="0.0008"/>
  <way id="11"><nd ref="1"/><nd ref="2"/><tag k="highway" v="residential"/></way>
  <way id="12"><nd ref="2"/><nd ref="3"/><tag k="highway" v="residential"/></way>
  <way id="13"><nd ref="3"/><nd ref="4"/><tag k="highway" v="residential"/></way>
  <way id="14"><nd ref="4"/><nd ref="1"/><tag k="highway" v="residential"/></way>
  <way id="20">
    <nd ref="5"/><nd ref="6"/><nd ref="7"/><nd ref="8"/><nd ref="5"/>
    <tag k="building" v="yes"/>
    <tag k="building:levels" v="4"/>
  </way>
</osm>
"""


def test_assemble_osm_declared_building_passthrough():
    doc = parse_osm(OSM_SAMPLE.encode())
    layers = classify_layers(doc, doc.bbox_center())
    layout = assemble_layout(layers, seed=0)
    declared = [fp for fp in layout.footprints if fp.parcel_index is None]
    assert len(declared) == 1
    assert declared[0].height == pytest.approx(12.0)


def test_assemble_semantic_no_roads():
    classes = np.full((16, 16), PAL.index_of("ground"), dtype=np.int16)
    classes[2:9, 2:9] = PAL.index_of("building")
    grid = ClassGrid(classes, 10.0, PAL)
    layout = assemble_layout(grid, seed=0)
    assert len(layout.roads.edges) == 0
    assert len(layout.blocks) == 1
    assert abs(signed_area(layout.blocks[0])) == pytest.approx(70.0 * 70.0, rel=1e-9)


def test_assemble_empty_input():
    with pytest.raises(EmptyInput):
        assemble_layout([])


def test_assemble_invariants_hold():
    doc = parse_osm(OSM_SAMPLE.encode())
    layers = classify_layers(doc, doc.bbox_center())
    layout = assemble_layout(layers, seed=0)
    assert check_layout_invariants(layout) == []
    assert len(layout.footprints) > 1


def test_assemble_deterministic():
    doc = parse_osm(OSM_SAMPLE.encode())
    layers = classify_layers(doc, doc.bbox_center())
    a = assemble_layout(layers, seed=5)
    b = assemble_layout(layers, seed=5)
    assert len(a.footprints) == len(b.footprints)
    for fa, fb in zip(a.footprints, b.footprints):
        assert (fa.polygon.outer == fb.polygon.outer).all()
        assert fa.height == fb.height


# --- centerlines ----------------------------------------------------------------


def test_trace_centerlines_straight_road():
    classes = np.full((9, 21), PAL.index_of("ground"), dtype=np.int16)
    classes[3:6, :] = PAL.index_of("road")
    grid = ClassGrid(classes, 2.0, PAL)
    lines = trace_centerlines(grid)
    assert len(lines) >= 1
    longest = max(lines, key=lambda l: l.length())
    assert longest.length() == pytest.approx(40.0, rel=0.2)
    ys = longest.points[:, 1]
    assert np.all(np.abs(ys - 9.0) < 3.0)  # near the band center (y = 4.5 rows * 2 m)
