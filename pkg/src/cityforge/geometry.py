"""2D/3D geometry kernel: polygons, triangulation, offsets, prisms, ribbons.

Coordinates are double-precision local meters. Exact comparisons use
EPS_EXACT (1e-9), geometric coincidence uses EPS_COINCIDENT (1e-6 m).
Every operation here is a pure function of its inputs: identical inputs
produce bit-identical outputs, so all of it is safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely.geometry as _sg

EPS_EXACT = 1e-9
EPS_COINCIDENT = 1e-6


class GeometryError(ValueError):
    """Base class for geometry construction and operation failures."""


class DegeneratePolygon(GeometryError):
    """Polygon area below the minimum meaningful threshold."""


class NonSimplePolygon(GeometryError):
    """A ring self-intersects."""


class InsetCollapse(GeometryError):
    """Inward offset consumed the entire polygon (parcel too small)."""


class SplitFailed(GeometryError):
    """A split produced a sliver or a disconnected half."""


class NonPositiveHeight(GeometryError):
    pass


class NonPositiveWidth(GeometryError):
    pass


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite point ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=np.float64)


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise GeometryError(f"expected (n, 2) points, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise GeometryError("non-finite coordinate")
    return pts


class Polyline:
    """Ordered open chain of 2D points (>= 2, consecutive points distinct)."""

    __slots__ = ("points",)

    def __init__(self, points):
        pts = _as_points(points)
        if len(pts) < 2:
            raise GeometryError("polyline needs at least 2 points")
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(seg <= EPS_EXACT):
            raise GeometryError("consecutive polyline points coincide")
        self.points = pts

    def __len__(self):
        return len(self.points)

    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())


def _clean_ring(points) -> np.ndarray:
    """Normalize a ring: drop explicit closure and duplicate neighbours."""
    pts = _as_points(points)
    if len(pts) >= 2 and np.linalg.norm(pts[0] - pts[-1]) <= EPS_EXACT:
        pts = pts[:-1]
    keep = [0]
    for i in range(1, len(pts)):
        if np.linalg.norm(pts[i] - pts[keep[-1]]) > EPS_EXACT:
            keep.append(i)
    pts = pts[keep]
    if len(pts) >= 2 and np.linalg.norm(pts[0] - pts[-1]) <= EPS_EXACT:
        pts = pts[:-1]
    return pts


class Polygon:
    """Simple polygon: one outer ring plus optional hole rings.

    Rings are stored unclosed (last point != first). Orientation is kept
    exactly as supplied; `normalized()` returns a copy with the outer ring
    counter-clockwise and holes clockwise, which the layout pipeline uses.
    """

    __slots__ = ("outer", "holes")

    def __init__(self, outer, holes=()):
        out = _clean_ring(outer)
        if len(out) < 3:
            raise GeometryError("outer ring needs at least 3 distinct points")
        if abs(ring_area(out)) <= EPS_EXACT:
            raise DegeneratePolygon("outer ring area below 1e-9")
        self.outer = out
        hs = []
        for h in holes:
            hr = _clean_ring(h)
            if len(hr) < 3:
                raise GeometryError("hole ring needs at least 3 distinct points")
            hs.append(hr)
        self.holes = hs

    def normalized(self) -> "Polygon":
        out = self.outer if ring_area(self.outer) > 0 else self.outer[::-1]
        holes = [h if ring_area(h) < 0 else h[::-1] for h in self.holes]
        return Polygon(out, holes)

    def bounds(self) -> tuple[float, float, float, float]:
        xs, ys = self.outer[:, 0], self.outer[:, 1]
        return float(xs.min()), float(ys.min()), float(xs.max()), float(ys.max())

    def translated(self, dx: float, dy: float) -> "Polygon":
        return Polygon(self.outer + [dx, dy], [h + [dx, dy] for h in self.holes])

    def __repr__(self):
        return f"Polygon({len(self.outer)} pts, {len(self.holes)} holes)"


@dataclass
class Mesh:
    """Indexed triangle mesh with per-vertex unit normals."""

    positions: np.ndarray  # (n, 3) float64
    triangles: np.ndarray  # (m, 3) int32
    normals: np.ndarray  # (n, 3) float64, unit length
    semantic_class: str = "generic"

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int32).reshape(-1, 3)
        self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
        n = len(self.positions)
        if len(self.normals) != n:
            raise GeometryError("normals count must equal positions count")
        if len(self.triangles) and self.triangles.max() >= n:
            raise GeometryError("triangle index out of range")
        if n:
            lens = np.linalg.norm(self.normals, axis=1)
            if np.any(np.abs(lens - 1.0) > 1e-6):
                raise GeometryError("normals must be unit length")


# ---------------------------------------------------------------------------
# scalar predicates and ring utilities


def ring_area(points) -> float:
    """Signed shoelace area of one ring (positive counter-clockwise)."""
    pts = np.asarray(points, dtype=np.float64)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def signed_area(poly: Polygon) -> float:
    """Signed area of the polygon: outer ring plus (opposing) hole rings."""
    return ring_area(poly.outer) + sum(ring_area(h) for h in poly.holes)


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def segments_intersect(p1, p2, p3, p4) -> bool:
    """Strict segment crossing test; shared endpoints do not count."""
    if (
        _close(p1, p3) or _close(p1, p4) or _close(p2, p3) or _close(p2, p4)
    ):
        return False
    o1 = _orient(p1, p2, p3)
    o2 = _orient(p1, p2, p4)
    o3 = _orient(p3, p4, p1)
    o4 = _orient(p3, p4, p2)
    if o1 == 0 and o2 == 0 and o3 == 0 and o4 == 0:
        return False
    return o1 * o2 < 0 and o3 * o4 < 0


def _close(a, b, eps: float = EPS_EXACT) -> bool:
    return abs(a[0] - b[0]) <= eps and abs(a[1] - b[1]) <= eps


def ring_is_simple(points) -> bool:
    """Brute-force non-adjacent edge crossing scan."""
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    for i in range(n):
        a1, a2 = pts[i], pts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if segments_intersect(a1, a2, pts[j], pts[(j + 1) % n]):
                return False
    return True


def point_in_ring(pt, ring) -> bool:
    """Even-odd ray cast; boundary points count as inside."""
    x, y = float(pt[0]), float(pt[1])
    inside = False
    n = len(ring)
    for i in range(n):
        x0, y0 = ring[i]
        x1, y1 = ring[(i + 1) % n]
        # on-edge check at coincidence tolerance
        if _point_on_segment(x, y, x0, y0, x1, y1):
            return True
        if (y0 > y) != (y1 > y):
            xint = (x1 - x0) * (y - y0) / (y1 - y0) + x0
            if x < xint:
                inside = not inside
    return inside


def _point_on_segment(x, y, x0, y0, x1, y1, eps: float = EPS_COINCIDENT) -> bool:
    dx, dy = x1 - x0, y1 - y0
    L2 = dx * dx + dy * dy
    if L2 == 0:
        return (x - x0) ** 2 + (y - y0) ** 2 <= eps * eps
    t = ((x - x0) * dx + (y - y0) * dy) / L2
    t = min(1.0, max(0.0, t))
    px, py = x0 + t * dx, y0 + t * dy
    return (x - px) ** 2 + (y - py) ** 2 <= eps * eps


def point_in_polygon(pt, poly: Polygon) -> bool:
    if not point_in_ring(pt, poly.outer):
        return False
    for h in poly.holes:
        if point_in_ring(pt, h) and not _on_ring_boundary(pt, h):
            return False
    return True


def _on_ring_boundary(pt, ring) -> bool:
    x, y = float(pt[0]), float(pt[1])
    n = len(ring)
    for i in range(n):
        x0, y0 = ring[i]
        x1, y1 = ring[(i + 1) % n]
        if _point_on_segment(x, y, x0, y0, x1, y1):
            return True
    return False


def convex_hull(points) -> np.ndarray:
    """Andrew monotone chain; returns hull points counter-clockwise."""
    pts = _as_points(points)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    uniq = [pts[0]]
    for p in pts[1:]:
        if not _close(p, uniq[-1], 1e-12):
            uniq.append(p)
    pts = np.array(uniq)
    if len(pts) < 3:
        return pts
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _orient(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in pts[::-1]:
        while len(upper) >= 2 and _orient(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


# ---------------------------------------------------------------------------
# triangulation (ear clipping, holes bridged at their max-x vertex)


def _bridge_holes(outer: np.ndarray, holes: list[np.ndarray]) -> np.ndarray:
    """Splice hole rings into the outer ring via max-x visibility bridges."""
    ring = [tuple(p) for p in outer]
    remaining = sorted(
        ([tuple(p) for p in h] for h in holes),
        key=lambda h: -max(p[0] for p in h),
    )
    for hole in remaining:
        m_i = max(range(len(hole)), key=lambda i: (hole[i][0], hole[i][1]))
        m = hole[m_i]
        # nearest outer edge crossed by the +x ray from m
        best_t, best_edge, best_pt = None, None, None
        n = len(ring)
        for i in range(n):
            a, b = ring[i], ring[(i + 1) % n]
            if (a[1] > m[1]) == (b[1] > m[1]):
                continue
            t = (m[1] - a[1]) / (b[1] - a[1])
            x = a[0] + t * (b[0] - a[0])
            if x >= m[0] - EPS_EXACT and (best_t is None or x < best_t):
                best_t, best_edge, best_pt = x, i, (x, m[1])
        if best_edge is None:
            raise NonSimplePolygon("hole outside outer ring")
        a, b = ring[best_edge], ring[(best_edge + 1) % len(ring)]
        # candidate visible vertex: edge endpoint with larger x, unless a
        # reflex vertex lies inside triangle (m, intersection, candidate)
        cand_i = best_edge if a[0] > b[0] else (best_edge + 1) % len(ring)
        cand = ring[cand_i]
        tri = (m, best_pt, cand)
        best = cand_i
        best_metric = None
        for j, p in enumerate(ring):
            if p == cand or p == m:
                continue
            if _strictly_inside_triangle(p, tri):
                # prefer the vertex minimizing angle with the +x ray, then distance
                dx, dy = p[0] - m[0], p[1] - m[1]
                metric = (abs(math.atan2(dy, max(dx, 1e-12))), dx * dx + dy * dy)
                if best_metric is None or metric < best_metric:
                    best_metric, best = metric, j
        # splice: ring[.. best] + [best, m..hole..m, best] + ring[best+1 ..]
        rotated = hole[m_i:] + hole[:m_i]
        ring = ring[: best + 1] + rotated + [m, ring[best]] + ring[best + 1 :]
    return np.array(ring, dtype=np.float64)


def _strictly_inside_triangle(p, tri, eps: float = 1e-12) -> bool:
    (ax, ay), (bx, by), (cx, cy) = tri
    d1 = _orient((ax, ay), (bx, by), p)
    d2 = _orient((bx, by), (cx, cy), p)
    d3 = _orient((cx, cy), (ax, ay), p)
    has_neg = (d1 < -eps) or (d2 < -eps) or (d3 < -eps)
    has_pos = (d1 > eps) or (d2 > eps) or (d3 > eps)
    return not (has_neg and has_pos) and (abs(d1) > eps and abs(d2) > eps and abs(d3) > eps)


def _earcut(ring: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Clip ears off a counter-clockwise ring; returns (points, index triples)."""
    n = len(ring)
    idx = list(range(n))
    tris: list[tuple[int, int, int]] = []

    def is_ear(k: int) -> bool:
        i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % len(idx)]
        a, b, c = ring[i0], ring[i1], ring[i2]
        if _orient(a, b, c) <= EPS_EXACT:
            return False
        for j in idx:
            if j in (i0, i1, i2):
                continue
            p = ring[j]
            if _close(p, a, 1e-12) or _close(p, b, 1e-12) or _close(p, c, 1e-12):
                continue
            if _strictly_inside_triangle(tuple(p), (tuple(a), tuple(b), tuple(c))):
                return False
        return True

    while len(idx) > 3:
        clipped = False
        for k in range(len(idx)):
            if is_ear(k):
                tris.append((idx[k - 1], idx[k], idx[(k + 1) % len(idx)]))
                del idx[k]
                clipped = True
                break
        if not clipped:
            # collinear fallback: remove the flattest convex-ish vertex
            best_k, best_a = None, None
            for k in range(len(idx)):
                i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % len(idx)]
                cr = _orient(ring[i0], ring[i1], ring[i2])
                if cr >= -EPS_EXACT and (best_a is None or abs(cr) < best_a):
                    best_a, best_k = abs(cr), k
            if best_k is None:
                raise NonSimplePolygon("no ear found; ring is not simple")
            k = best_k
            tris.append((idx[k - 1], idx[k], idx[(k + 1) % len(idx)]))
            del idx[k]
    tris.append((idx[0], idx[1], idx[2]))
    return ring, np.array(tris, dtype=np.int32)


def triangulate_indexed(poly: Polygon) -> tuple[np.ndarray, np.ndarray]:
    """Triangulate into (vertices, index triples); bridges holes first.

    Raises DegeneratePolygon when the usable area is below threshold and
    NonSimplePolygon when a ring self-intersects.
    """
    if abs(signed_area(poly)) <= EPS_EXACT:
        raise DegeneratePolygon("polygon area below 1e-9")
    norm = poly.normalized()
    if not ring_is_simple(norm.outer):
        raise NonSimplePolygon("outer ring self-intersects")
    for h in norm.holes:
        if not ring_is_simple(h):
            raise NonSimplePolygon("hole ring self-intersects")
    if norm.holes:
        ring = _bridge_holes(norm.outer, norm.holes)
    else:
        ring = norm.outer
    pts, tris = _earcut(ring)
    # merge duplicated bridge vertices so shared edges stay shared
    uniq: dict[tuple[float, float], int] = {}
    remap = np.empty(len(pts), dtype=np.int32)
    out_pts = []
    for i, p in enumerate(pts):
        key = (float(p[0]), float(p[1]))
        if key not in uniq:
            uniq[key] = len(out_pts)
            out_pts.append(p)
        remap[i] = uniq[key]
    tris = remap[tris]
    tris = tris[~((tris[:, 0] == tris[:, 1]) | (tris[:, 1] == tris[:, 2]) | (tris[:, 0] == tris[:, 2]))]
    return np.array(out_pts, dtype=np.float64), tris


def triangulate(poly: Polygon) -> list[np.ndarray]:
    """Ear-clip into a list of (3, 2) triangles covering the polygon."""
    pts, tris = triangulate_indexed(poly)
    return [pts[t] for t in tris]


# ---------------------------------------------------------------------------
# offsets and splits


def _to_shapely(poly: Polygon) -> _sg.Polygon:
    return _sg.Polygon(poly.outer, [h for h in poly.holes])


def _from_shapely(sp) -> Polygon:
    return Polygon(
        np.asarray(sp.exterior.coords, dtype=np.float64),
        [np.asarray(r.coords, dtype=np.float64) for r in sp.interiors],
    )


def _largest_polygon(geom):
    if geom.is_empty:
        return None
    if geom.geom_type == "Polygon":
        return geom
    if geom.geom_type in ("MultiPolygon", "GeometryCollection"):
        polys = [g for g in geom.geoms if g.geom_type == "Polygon" and g.area > EPS_EXACT]
        if not polys:
            return None
        return max(polys, key=lambda g: g.area)
    return None


def inset(poly: Polygon, d: float) -> Polygon:
    """Inward offset by d meters (mitered edges, largest ring kept).

    Every vertex of the result lies at distance >= d - 1e-6 from the source
    boundary. Raises InsetCollapse when nothing remains.
    """
    if d < 0:
        raise GeometryError("inset distance must be >= 0")
    if d == 0:
        return poly
    eroded = _to_shapely(poly.normalized()).buffer(-d, join_style="mitre", mitre_limit=8.0)
    best = _largest_polygon(eroded)
    if best is None or best.area <= EPS_EXACT:
        raise InsetCollapse(f"inset by {d} m consumed the polygon")
    return _from_shapely(best)


def _min_area_obb(poly: Polygon):
    """Rotating calipers over the convex hull: (center, axis_u, axis_v, eu, ev)."""
    hull = convex_hull(poly.outer)
    if len(hull) < 3:
        raise DegeneratePolygon("hull degenerate")
    best = None
    for i in range(len(hull)):
        e = hull[(i + 1) % len(hull)] - hull[i]
        L = np.linalg.norm(e)
        if L <= EPS_EXACT:
            continue
        u = e / L
        v = np.array([-u[1], u[0]])
        su = hull @ u
        sv = hull @ v
        eu, ev = su.max() - su.min(), sv.max() - sv.min()
        area = eu * ev
        if best is None or area < best[0] - EPS_EXACT:
            cu, cv = (su.max() + su.min()) / 2, (sv.max() + sv.min()) / 2
            center = cu * u + cv * v
            best = (area, center, u, v, eu, ev)
    _, center, u, v, eu, ev = best
    return center, u, v, eu, ev


def _halfplane_boxes(center, axis, reach):
    """Two rectangles covering s<=0 and s>=0 along `axis` from `center`."""
    q = np.array([-axis[1], axis[0]])
    a = _sg.Polygon(
        [
            center - axis * reach - q * reach,
            center - q * reach,
            center + q * reach,
            center - axis * reach + q * reach,
        ]
    )
    b = _sg.Polygon(
        [
            center - q * reach,
            center + axis * reach - q * reach,
            center + axis * reach + q * reach,
            center + q * reach,
        ]
    )
    return a, b


def split_by_line(poly: Polygon, center, axis) -> tuple[list[Polygon], list[Polygon]]:
    """Cut along the line through `center` perpendicular to `axis`.

    Returns the pieces on the negative and positive sides of `axis`.
    """
    sp = _to_shapely(poly.normalized())
    minx, miny, maxx, maxy = sp.bounds
    reach = 2.0 * max(maxx - minx, maxy - miny, 1.0)
    box_a, box_b = _halfplane_boxes(np.asarray(center, dtype=np.float64), np.asarray(axis, dtype=np.float64), reach)

    def pieces(geom):
        out = []
        if geom.is_empty:
            return out
        geoms = geom.geoms if hasattr(geom, "geoms") else [geom]
        for g in geoms:
            if g.geom_type == "Polygon" and g.area > 1e-9:
                out.append(_from_shapely(g))
        return sorted(out, key=lambda p: -abs(signed_area(p)))

    return pieces(sp.intersection(box_a)), pieces(sp.intersection(box_b))


def obb_split(poly: Polygon) -> tuple[Polygon, Polygon]:
    """Split through the center of the minimum-area oriented bounding box.

    The cut is perpendicular to the longer box axis; on a tie the axis
    closest to the x direction is treated as the long one. Raises
    SplitFailed for slivers or when a half comes out disconnected.
    """
    if poly.holes:
        raise GeometryError("obb_split requires a hole-free polygon")
    center, u, v, eu, ev = _min_area_obb(poly)
    if abs(eu - ev) <= EPS_EXACT * max(eu, ev, 1.0):
        axis = u if abs(u[0]) >= abs(v[0]) else v
    else:
        axis = u if eu > ev else v
    side_a, side_b = split_by_line(poly, center, axis)
    if len(side_a) != 1 or len(side_b) != 1:
        raise SplitFailed("cut produced a disconnected half")
    a, b = side_a[0], side_b[0]
    if abs(signed_area(a)) < 1e-6 or abs(signed_area(b)) < 1e-6:
        raise SplitFailed("cut produced a sliver half")
    return a, b


# ---------------------------------------------------------------------------
# meshing


def _vertex_normals(positions: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    normals = np.zeros_like(positions)
    for t in triangles:
        p0, p1, p2 = positions[t]
        fn = np.cross(p1 - p0, p2 - p0)  # area-weighted
        normals[t] += fn
    lens = np.linalg.norm(normals, axis=1)
    flat = lens <= 1e-12
    normals[flat] = (0.0, 0.0, 1.0)
    normals[~flat] /= lens[~flat, None]
    return normals


def extrude(poly: Polygon, height: float, semantic_class: str = "building") -> Mesh:
    """Extrude into a watertight prism (bottom cap down, top cap up)."""
    if height <= 0:
        raise NonPositiveHeight(f"height must be > 0, got {height}")
    norm = poly.normalized()
    pts2, cap = triangulate_indexed(norm)
    n = len(pts2)
    bottom = np.column_stack([pts2, np.zeros(n)])
    top = np.column_stack([pts2, np.full(n, float(height))])
    positions = np.vstack([bottom, top])
    tris = []
    for a, b, c in cap:
        tris.append((a, c, b))            # bottom, wound to face -z
        tris.append((n + a, n + b, n + c))  # top, faces +z
    index_of = {(float(p[0]), float(p[1])): i for i, p in enumerate(pts2)}
    for ring in [norm.outer, *norm.holes]:
        m = len(ring)
        for i in range(m):
            a2, b2 = ring[i], ring[(i + 1) % m]
            ia = index_of[(float(a2[0]), float(a2[1]))]
            ib = index_of[(float(b2[0]), float(b2[1]))]
            tris.append((ia, ib, n + ib))
            tris.append((ia, n + ib, n + ia))
    triangles = np.array(tris, dtype=np.int32)
    return Mesh(positions, triangles, _vertex_normals(positions, triangles), semantic_class)


def sweep_profile(line: Polyline, width: float, semantic_class: str = "road") -> Mesh:
    """Flat ribbon centered on the polyline with mitered joints."""
    if width <= 0:
        raise NonPositiveWidth(f"width must be > 0, got {width}")
    pts = line.points
    n = len(pts)
    dirs = np.diff(pts, axis=0)
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    perps = np.column_stack([-dirs[:, 1], dirs[:, 0]])
    half = width / 2.0
    left, right = [], []
    for i in range(n):
        if i == 0:
            off = perps[0] * half
        elif i == n - 1:
            off = perps[-1] * half
        else:
            m = perps[i - 1] + perps[i]
            L = np.linalg.norm(m)
            if L <= 1e-9:  # 180-degree reversal: fall back to the incoming side
                off = perps[i - 1] * half
            else:
                m /= L
                scale = half / max(np.dot(m, perps[i]), 0.25)  # miter limit 4
                off = m * scale
        left.append(pts[i] + off)
        right.append(pts[i] - off)
    left = np.array(left)
    right = np.array(right)
    positions = np.column_stack([np.vstack([right, left]), np.zeros(2 * n)])
    tris = []
    for i in range(n - 1):
        r0, r1 = i, i + 1
        l0, l1 = n + i, n + i + 1
        tris.append((r0, r1, l1))
        tris.append((r0, l1, l0))
    triangles = np.array(tris, dtype=np.int32)
    return Mesh(positions, triangles, _vertex_normals(positions, triangles), semantic_class)


def mesh_volume(mesh: Mesh) -> float:
    """Signed tetrahedron sum; positive for outward-wound closed meshes."""
    p = mesh.positions
    t = mesh.triangles
    if len(t) == 0:
        return 0.0
    v0, v1, v2 = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    return float(np.einsum("ij,ij->i", v0, np.cross(v1, v2)).sum() / 6.0)


def mesh_area(mesh: Mesh) -> float:
    p = mesh.positions
    t = mesh.triangles
    if len(t) == 0:
        return 0.0
    v0, v1, v2 = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    return float(np.linalg.norm(np.cross(v1 - v0, v2 - v0), axis=1).sum() / 2.0)


def mesh_is_closed(mesh: Mesh) -> bool:
    """True when every undirected edge is shared by exactly two triangles."""
    counts: dict[tuple[int, int], int] = {}
    for a, b, c in mesh.triangles:
        for e in ((a, b), (b, c), (c, a)):
            key = (min(e), max(e))
            counts[key] = counts.get(key, 0) + 1
    return bool(counts) and all(v == 2 for v in counts.values())
