"""Layout synthesis: road graph -> blocks -> parcels -> footprints.

The road graph is planarized (crossings split, nearby endpoints snapped),
blocks are the bounded faces of the planar subdivision inset by half the
bordering road width, parcels come from recursive oriented-bounding-box
splits, and footprints are parcel insets with seeded per-zone heights.
Everything is a pure function of (inputs, seed) with fixed iteration order,
so layouts are bit-stable across runs and platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.strtree import STRtree

from . import geometry as geo
from .geometry import (
    GeometryError,
    InsetCollapse,
    Polygon,
    Polyline,
    SplitFailed,
    inset,
    obb_split,
    ring_area,
    signed_area,
)
from .osm import LayerSet
from .raster import ClassGrid, HeightGrid, sample_height, vectorize_regions
from .rng import subsystem_seed

PARCEL_TARGET_AREA = 600.0  # m^2
FOOTPRINT_INSET = 3.0  # m
FLOOR_HEIGHT = 3.0  # m
HEIGHT_MEDIANS = {"residential": 9.0, "commercial": 21.0}
HEIGHT_SIGMA_LOG = 0.5
MIN_HEIGHT = 3.0
MAX_HEIGHT = 150.0
SNAP_TOLERANCE = 0.01  # m
OVERLAP_TOLERANCE = 1e-6  # m^2
GREEN_LANDUSE = {"grass", "forest", "meadow", "park", "greenfield", "recreation_ground", "village_green"}
COMMERCIAL_LANDUSE = {"commercial", "retail", "industrial"}


class LayoutError(ValueError):
    pass


class EmptyInput(LayoutError):
    pass


@dataclass
class RoadGraph:
    vertices: np.ndarray  # (n, 2) float64
    edges: list[tuple[int, int, str, float]]  # (a, b, highway class, width)

    def edge_polyline(self, i: int) -> Polyline:
        a, b, _, _ = self.edges[i]
        return Polyline([self.vertices[a], self.vertices[b]])

    @staticmethod
    def empty() -> "RoadGraph":
        return RoadGraph(np.zeros((0, 2)), [])


@dataclass
class Footprint:
    polygon: Polygon
    parcel_index: int | None
    height: float
    semantic_class: str = "building"
    base_z: float = 0.0


@dataclass
class CityLayout:
    roads: RoadGraph
    blocks: list[Polygon]
    parcels: list[tuple[Polygon, int]]  # (polygon, block index)
    footprints: list[Footprint]
    green: list[Polygon] = field(default_factory=list)
    water: list[Polygon] = field(default_factory=list)


# ---------------------------------------------------------------------------
# road graph


def _seg_intersection_params(p, r, q, s):
    """Parameters (t, u) where p + t*r crosses q + u*s, or None if parallel."""
    denom = r[0] * s[1] - r[1] * s[0]
    if abs(denom) < 1e-12:
        return None
    qp = (q[0] - p[0], q[1] - p[1])
    t = (qp[0] * s[1] - qp[1] * s[0]) / denom
    u = (qp[0] * r[1] - qp[1] * r[0]) / denom
    return t, u


def build_road_graph(roads: list[tuple[Polyline, str, float]]) -> RoadGraph:
    """Planarize road polylines: split crossings, snap nearby endpoints."""
    segs = []  # (p, q, class, width)
    for line, cls, width in roads:
        pts = line.points
        for i in range(len(pts) - 1):
            segs.append((pts[i].copy(), pts[i + 1].copy(), cls, width))

    # collect split parameters per segment (crossings and T-junctions)
    cuts: list[list[float]] = [[] for _ in segs]
    for i in range(len(segs)):
        p1, q1 = segs[i][0], segs[i][1]
        r = q1 - p1
        len_i = float(np.linalg.norm(r))
        for j in range(i + 1, len(segs)):
            p2, q2 = segs[j][0], segs[j][1]
            s = q2 - p2
            len_j = float(np.linalg.norm(s))
            params = _seg_intersection_params(p1, r, p2, s)
            if params is None:
                continue
            t, u = params
            eps_t = SNAP_TOLERANCE / max(len_i, 1e-9)
            eps_u = SNAP_TOLERANCE / max(len_j, 1e-9)
            if -eps_t <= t <= 1 + eps_t and -eps_u <= u <= 1 + eps_u:
                if eps_t < t < 1 - eps_t:
                    cuts[i].append(t)
                if eps_u < u < 1 - eps_u:
                    cuts[j].append(u)

    pieces = []
    for (p, q, cls, width), ts in zip(segs, cuts):
        params = sorted(set([0.0, 1.0] + [round(t, 12) for t in ts]))
        for a, b in zip(params[:-1], params[1:]):
            if b - a < 1e-12:
                continue
            pa = p + (q - p) * a
            pb = p + (q - p) * b
            pieces.append((pa, pb, cls, width))

    # snap endpoints within tolerance to a shared vertex (grid hash clusters)
    vertices: list[np.ndarray] = []
    cell: dict[tuple[int, int], list[int]] = {}

    def vertex_id(pt) -> int:
        cx, cy = int(math.floor(pt[0] / SNAP_TOLERANCE)), int(math.floor(pt[1] / SNAP_TOLERANCE))
        for gx in (cx - 1, cx, cx + 1):
            for gy in (cy - 1, cy, cy + 1):
                for vid in cell.get((gx, gy), ()):
                    if np.linalg.norm(vertices[vid] - pt) <= SNAP_TOLERANCE:
                        return vid
        vid = len(vertices)
        vertices.append(np.asarray(pt, dtype=np.float64))
        cell.setdefault((cx, cy), []).append(vid)
        return vid

    edges: list[tuple[int, int, str, float]] = []
    seen: set[tuple[int, int]] = set()
    for pa, pb, cls, width in pieces:
        a, b = vertex_id(pa), vertex_id(pb)
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        if key in seen:
            continue
        seen.add(key)
        edges.append((a, b, cls, width))
    verts = np.array(vertices, dtype=np.float64) if vertices else np.zeros((0, 2))
    return RoadGraph(verts, edges)


# ---------------------------------------------------------------------------
# block extraction (bounded faces of the planar subdivision)


def _trace_faces(graph: RoadGraph) -> list[list[int]]:
    """Walk half-edges, taking the clockwise-next edge at every vertex."""
    outgoing: dict[int, list[int]] = {}
    for a, b, _, _ in graph.edges:
        outgoing.setdefault(a, []).append(b)
        outgoing.setdefault(b, []).append(a)
    order: dict[int, list[int]] = {}
    for v, nbrs in outgoing.items():
        pv = graph.vertices[v]
        order[v] = sorted(
            set(nbrs), key=lambda w: math.atan2(*(graph.vertices[w] - pv)[::-1])
        )
    visited: set[tuple[int, int]] = set()
    faces = []
    for a, b, _, _ in graph.edges:
        for he in ((a, b), (b, a)):
            if he in visited:
                continue
            ring = []
            cur = he
            while cur not in visited:
                visited.add(cur)
                ring.append(cur[0])
                u, v = cur
                ring_v = order[v]
                i = ring_v.index(u)
                w = ring_v[(i - 1) % len(ring_v)]
                cur = (v, w)
            faces.append(ring)
    return faces


def _remove_spurs(ring: list[int]) -> list[int]:
    pts = list(ring)
    changed = True
    while changed and len(pts) >= 3:
        changed = False
        n = len(pts)
        for i in range(n):
            if pts[(i - 1) % n] == pts[(i + 1) % n]:
                kill = sorted({i, (i + 1) % n}, reverse=True)
                for k in kill:
                    del pts[k]
                changed = True
                break
        # collapse immediate duplicates
        dedup = [pts[0]] if pts else []
        for v in pts[1:]:
            if v != dedup[-1]:
                dedup.append(v)
        if len(dedup) >= 2 and dedup[0] == dedup[-1]:
            dedup.pop()
        if len(dedup) != len(pts):
            pts = dedup
            changed = True
    return pts


def extract_blocks(graph: RoadGraph) -> list[Polygon]:
    """Bounded faces of the road subdivision, inset by half the road width."""
    if not graph.edges:
        return []
    width_of: dict[tuple[int, int], float] = {}
    for a, b, _, w in graph.edges:
        width_of[(min(a, b), max(a, b))] = w
    blocks = []
    for ring in _trace_faces(graph):
        cleaned = _remove_spurs(ring)
        if len(cleaned) < 3 or len(set(cleaned)) != len(cleaned):
            continue
        pts = graph.vertices[cleaned]
        if ring_area(pts) <= 1e-6:
            continue
        if not geo.ring_is_simple(pts):
            continue
        border = max(
            width_of.get((min(u, v), max(u, v)), 0.0)
            for u, v in zip(cleaned, cleaned[1:] + cleaned[:1])
        )
        try:
            poly = Polygon(pts)
            blocks.append(inset(poly, border / 2.0) if border > 0 else poly)
        except (InsetCollapse, GeometryError):
            continue
    return blocks


# ---------------------------------------------------------------------------
# parcels and footprints


def _split_all_pieces(poly: Polygon) -> list[Polygon] | None:
    """OBB-center cut keeping every piece (fallback for pinched shapes)."""
    try:
        center, u, v, eu, ev = geo._min_area_obb(poly)
    except GeometryError:
        return None
    if abs(eu - ev) <= 1e-9 * max(eu, ev, 1.0):
        axis = u if abs(u[0]) >= abs(v[0]) else v
    else:
        axis = u if eu > ev else v
    side_a, side_b = geo.split_by_line(poly, center, axis)
    pieces = side_a + side_b
    return pieces if len(pieces) >= 2 else None


def subdivide_block(
    block: Polygon, target_area: float = PARCEL_TARGET_AREA, seed: int = 0, max_depth: int = 12
) -> list[Polygon]:
    """Recursive OBB splits until every parcel is at or below target_area.

    The cut itself is deterministic geometry; `seed` is accepted for
    interface stability. Unsplittable slivers are returned as-is.
    """
    if target_area <= 0:
        raise LayoutError("target_area must be > 0")
    out: list[Polygon] = []

    def recurse(poly: Polygon, depth: int):
        if abs(signed_area(poly)) <= target_area or depth >= max_depth:
            out.append(poly)
            return
        try:
            a, b = obb_split(poly)
            recurse(a, depth + 1)
            recurse(b, depth + 1)
            return
        except SplitFailed:
            pieces = _split_all_pieces(poly)
            if pieces and len(pieces) >= 2:
                for p in pieces:
                    recurse(p, depth + 1)
                return
        except GeometryError:
            pass
        out.append(poly)

    recurse(block.normalized(), 0)
    return out


def _quantized_height(rng: np.random.Generator, zone: str) -> float:
    median = HEIGHT_MEDIANS.get(zone, HEIGHT_MEDIANS["residential"])
    h = float(rng.lognormal(mean=math.log(median), sigma=HEIGHT_SIGMA_LOG))
    floors = max(1, int(h / FLOOR_HEIGHT + 0.5))
    return float(min(max(floors * FLOOR_HEIGHT, MIN_HEIGHT), MAX_HEIGHT))


def generate_footprints(
    parcels: list[tuple[Polygon, int]],
    zone_classes: list[str],
    seed: int = 0,
    inset_distance: float = FOOTPRINT_INSET,
) -> list[Footprint]:
    """Inset each parcel and draw a seeded lognormal height for it.

    Parcels that collapse under the inset yield no footprint. Heights are
    derived per parcel index, so footprints are independent of ordering.
    """
    out = []
    for i, (poly, _block) in enumerate(parcels):
        try:
            fp = inset(poly, inset_distance)
        except (InsetCollapse, GeometryError):
            continue
        zone = zone_classes[i] if i < len(zone_classes) else "residential"
        rng = np.random.default_rng(subsystem_seed(seed, "heights", i))
        out.append(Footprint(fp, i, _quantized_height(rng, zone), "building"))
    return out


# ---------------------------------------------------------------------------
# semantic-map road centerlines


def trace_centerlines(grid: ClassGrid, label: str = "road") -> list[Polyline]:
    """Skeletonize the class mask and walk the skeleton into polylines."""
    from skimage.morphology import skeletonize

    mask = grid.mask(label)
    if not mask.any():
        return []
    skel = skeletonize(mask)
    cs = grid.cell_size
    pix = {(int(r), int(c)) for r, c in np.argwhere(skel)}
    nbrs = {}
    for r, c in pix:
        ns = [
            (r + dr, c + dc)
            for dr in (-1, 0, 1)
            for dc in (-1, 0, 1)
            if (dr or dc) and (r + dr, c + dc) in pix
        ]
        nbrs[(r, c)] = ns
    endpoints = sorted(p for p, ns in nbrs.items() if len(ns) != 2)
    visited: set[tuple[tuple[int, int], tuple[int, int]]] = set()
    chains = []

    def walk(start, first):
        chain = [start, first]
        visited.add((start, first))
        visited.add((first, start))
        prev, cur = start, first
        while len(nbrs[cur]) == 2:
            nxt = next((n for n in nbrs[cur] if n != prev), None)
            if nxt is None or (cur, nxt) in visited:
                break
            visited.add((cur, nxt))
            visited.add((nxt, cur))
            prev, cur = cur, nxt
            chain.append(cur)
        return chain

    for p in endpoints:
        for n in sorted(nbrs[p]):
            if (p, n) not in visited:
                chains.append(walk(p, n))
    # leftover cycles
    for p in sorted(pix):
        for n in sorted(nbrs[p]):
            if (p, n) not in visited:
                chains.append(walk(p, n))

    lines = []
    for chain in chains:
        if len(chain) < 3:
            continue
        pts = np.array([[(c + 0.5) * cs, (r + 0.5) * cs] for r, c in chain])
        from .raster import _dp_simplify_open

        pts = _dp_simplify_open(pts, cs)
        if len(pts) >= 2:
            try:
                lines.append(Polyline(pts))
            except GeometryError:
                continue
    return lines


# ---------------------------------------------------------------------------
# assembly


def _to_shapely(poly: Polygon):
    return shapely.geometry.Polygon(poly.outer, poly.holes)


def _drop_overlapping(footprints: list[Footprint]) -> list[Footprint]:
    """Keep footprints in order, dropping any that overlaps an earlier one."""
    if not footprints:
        return []
    shapes = [_to_shapely(fp.polygon) for fp in footprints]
    tree = STRtree(shapes)
    dropped: set[int] = set()
    for i, sp in enumerate(shapes):
        if i in dropped:
            continue
        for j in tree.query(sp):
            j = int(j)
            if j < i and j not in dropped and sp.intersection(shapes[j]).area > OVERLAP_TOLERANCE:
                dropped.add(i)
                break
    return [fp for i, fp in enumerate(footprints) if i not in dropped]


def _zone_for_parcel(poly: Polygon, commercial_zones) -> str:
    if not commercial_zones:
        return "residential"
    c = poly.outer.mean(axis=0)
    for z in commercial_zones:
        if geo.point_in_polygon(c, z):
            return "commercial"
    return "residential"


def assemble_layout(
    source: LayerSet | ClassGrid | list,
    height_grid: HeightGrid | None = None,
    seed: int = 0,
    parcel_target: float = PARCEL_TARGET_AREA,
) -> CityLayout:
    """Unify a vector or raster source into a complete CityLayout.

    LayerSet input (the OSM path) keeps declared building footprints and
    heights and generates parcels/footprints elsewhere; ClassGrid or region
    lists (the semantic-map path) use road-class skeleton centerlines as
    roads and building-class regions as blocks.
    """
    if isinstance(source, LayerSet):
        return _assemble_from_layers(source, height_grid, seed, parcel_target)
    if isinstance(source, ClassGrid):
        regions = vectorize_regions(source)
        centerlines = trace_centerlines(source, "road")
        return _assemble_from_regions(regions, centerlines, height_grid, seed, parcel_target)
    if isinstance(source, list):
        if not source:
            raise EmptyInput("no regions supplied")
        return _assemble_from_regions(source, [], height_grid, seed, parcel_target)
    raise EmptyInput(f"unsupported layout source {type(source).__name__}")


def _assemble_from_layers(
    layers: LayerSet, height_grid, seed: int, parcel_target: float
) -> CityLayout:
    if not layers.roads and not layers.buildings:
        raise EmptyInput("layer set has neither roads nor buildings")
    graph = build_road_graph(layers.roads)
    blocks = extract_blocks(graph)
    commercial = [p for p, cls in layers.landuse if cls in COMMERCIAL_LANDUSE]
    green = [p for p, cls in layers.landuse if cls in GREEN_LANDUSE]

    parcels: list[tuple[Polygon, int]] = []
    for bi, block in enumerate(blocks):
        for parcel in subdivide_block(block, parcel_target, seed):
            parcels.append((parcel, bi))

    declared: list[Footprint] = []
    rng_declared = np.random.default_rng(subsystem_seed(seed, "declared-heights"))
    for poly, height in layers.buildings:
        if height is None:
            height = _quantized_height(rng_declared, "residential")
        declared.append(Footprint(poly, None, float(height), "building"))

    declared_shapes = [_to_shapely(fp.polygon) for fp in declared]
    tree = STRtree(declared_shapes) if declared_shapes else None
    zone_classes = [_zone_for_parcel(p, commercial) for p, _ in parcels]
    generated = generate_footprints(parcels, zone_classes, seed)
    if tree is not None:
        kept = []
        for fp in generated:
            sp = _to_shapely(fp.polygon)
            clash = any(
                sp.intersection(declared_shapes[int(i)]).area > OVERLAP_TOLERANCE
                for i in tree.query(sp)
            )
            if not clash:
                kept.append(fp)
        generated = kept
    footprints = _drop_overlapping(declared + generated)
    _apply_terrain(footprints, height_grid)
    return CityLayout(graph, blocks, parcels, footprints, green, list(layers.water))


def _assemble_from_regions(
    regions: list[tuple[Polygon, str]],
    centerlines: list[Polyline],
    height_grid,
    seed: int,
    parcel_target: float,
) -> CityLayout:
    if not regions and not centerlines:
        raise EmptyInput("no regions supplied")
    roads = [(line, "road", 8.0) for line in centerlines]
    graph = build_road_graph(roads) if roads else RoadGraph.empty()
    blocks = []
    for poly, label in regions:
        if label == "building":
            blocks.append(Polygon(poly.outer).normalized())  # holes dropped
    green = [p for p, lab in regions if lab == "green"]
    water = [p for p, lab in regions if lab == "water"]
    parcels: list[tuple[Polygon, int]] = []
    for bi, block in enumerate(blocks):
        for parcel in subdivide_block(block, parcel_target, seed):
            parcels.append((parcel, bi))
    zone_classes = ["residential"] * len(parcels)
    footprints = _drop_overlapping(generate_footprints(parcels, zone_classes, seed))
    _apply_terrain(footprints, height_grid)
    return CityLayout(graph, blocks, parcels, footprints, green, water)


def _apply_terrain(footprints: list[Footprint], height_grid: HeightGrid | None):
    if height_grid is None:
        return
    for fp in footprints:
        c = fp.polygon.outer.mean(axis=0)
        try:
            fp.base_z = sample_height(height_grid, float(c[0]), float(c[1]))
        except Exception:
            fp.base_z = 0.0


# ---------------------------------------------------------------------------
# invariant checking (used by tests and the evaluator)


def check_layout_invariants(layout: CityLayout, samples: int = 64) -> list[str]:
    """Return violation strings; empty means all containment and
    non-overlap invariants hold."""
    violations = []
    shapes = [_to_shapely(fp.polygon) for fp in layout.footprints]
    if shapes:
        tree = STRtree(shapes)
        for i, sp in enumerate(shapes):
            for j in tree.query(sp):
                j = int(j)
                if j <= i:
                    continue
                inter = sp.intersection(shapes[j]).area
                if inter > OVERLAP_TOLERANCE:
                    violations.append(f"footprints {i} and {j} overlap by {inter:.3g} m^2")
    for i, fp in enumerate(layout.footprints):
        if fp.parcel_index is None:
            continue
        parcel, block_i = layout.parcels[fp.parcel_index]
        if not _contained(fp.polygon, parcel, samples):
            violations.append(f"footprint {i} leaves parcel {fp.parcel_index}")
        if not _contained(parcel, layout.blocks[block_i], samples):
            violations.append(f"parcel {fp.parcel_index} leaves block {block_i}")
    return violations


def _contained(inner: Polygon, outer: Polygon, samples: int) -> bool:
    ring = inner.outer
    n = len(ring)
    idxs = np.linspace(0, n - 1, min(samples, n)).astype(int)
    for k in idxs:
        a, b = ring[k], ring[(k + 1) % n]
        for t in (0.0, 0.5):
            p = a + (b - a) * t
            if not geo.point_in_ring(p, outer.outer):
                return False
    return True
