"""OSM XML ingest: parse nodes/ways/relations, project, classify layers.

Supports the OSM XML v0.6 subset: <node id lat lon>, <way id> with <nd ref/>
and <tag k v/>, and <relation> with <member type role ref/>. Parsing is
lossless for elements and tags; classification is total (every way is
either classified into a layer or reported as skipped).
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

import numpy as np

from .geometry import Polygon, Polyline

EARTH_RADIUS_M = 6378137.0

# widths per highway class; anything unlisted rides on the default
HIGHWAY_WIDTHS = {
    "motorway": 24.0,
    "primary": 16.0,
    "secondary": 12.0,
    "residential": 8.0,
    "footway": 2.5,
}
DEFAULT_HIGHWAY_WIDTH = 8.0
METERS_PER_LEVEL = 3.0

GREEN_LANDUSE = {"grass", "forest", "meadow", "park", "greenfield", "recreation_ground", "village_green"}
COMMERCIAL_LANDUSE = {"commercial", "retail", "industrial"}


class OsmError(ValueError):
    pass


class XmlSyntax(OsmError):
    def __init__(self, line: int, col: int, detail: str = ""):
        super().__init__(f"XML syntax error at line {line}, column {col}: {detail}")
        self.line = line
        self.col = col


class DanglingNodeRef(OsmError):
    def __init__(self, way_id: int, node_id: int):
        super().__init__(f"way {way_id} references missing node {node_id}")
        self.way_id = way_id
        self.node_id = node_id


class MissingLatLon(OsmError):
    def __init__(self, node_id):
        super().__init__(f"node {node_id} lacks lat/lon")
        self.node_id = node_id


class OutOfRange(OsmError):
    pass


@dataclass
class OsmNode:
    lat: float
    lon: float
    tags: dict[str, str] = field(default_factory=dict)


@dataclass
class OsmWay:
    node_ids: list[int]
    tags: dict[str, str] = field(default_factory=dict)

    def is_closed(self) -> bool:
        return len(self.node_ids) >= 4 and self.node_ids[0] == self.node_ids[-1]


@dataclass
class OsmRelation:
    members: list[tuple[str, str, int]]  # (type, role, ref)
    tags: dict[str, str] = field(default_factory=dict)


@dataclass
class OsmDocument:
    nodes: dict[int, OsmNode]
    ways: dict[int, OsmWay]
    relations: dict[int, OsmRelation]

    def bbox_center(self) -> tuple[float, float]:
        lats = [n.lat for n in self.nodes.values()]
        lons = [n.lon for n in self.nodes.values()]
        if not lats:
            return 0.0, 0.0
        return (min(lats) + max(lats)) / 2, (min(lons) + max(lons)) / 2


@dataclass
class LayerSet:
    """Projected vector layers in local meters."""

    roads: list[tuple[Polyline, str, float]] = field(default_factory=list)
    buildings: list[tuple[Polygon, float | None]] = field(default_factory=list)
    water: list[Polygon] = field(default_factory=list)
    landuse: list[tuple[Polygon, str]] = field(default_factory=list)
    skipped: list[tuple[int, str]] = field(default_factory=list)  # (way id, reason)


def _tags_of(elem) -> dict[str, str]:
    return {t.get("k"): t.get("v") for t in elem.findall("tag")}


def parse_osm(xml_bytes: bytes) -> OsmDocument:
    """Parse OSM XML bytes into a typed document.

    Raises XmlSyntax on malformed XML, MissingLatLon on a coordinate-less
    node and DanglingNodeRef when a way references an absent node.
    """
    if isinstance(xml_bytes, str):
        xml_bytes = xml_bytes.encode("utf-8")
    try:
        root = ET.fromstring(xml_bytes)
    except ET.ParseError as e:
        line, col = e.position
        raise XmlSyntax(line, col, str(e)) from e
    nodes: dict[int, OsmNode] = {}
    ways: dict[int, OsmWay] = {}
    relations: dict[int, OsmRelation] = {}
    for el in root.findall("node"):
        nid = int(el.get("id"))
        lat, lon = el.get("lat"), el.get("lon")
        if lat is None or lon is None:
            raise MissingLatLon(nid)
        nodes[nid] = OsmNode(float(lat), float(lon), _tags_of(el))
    for el in root.findall("way"):
        wid = int(el.get("id"))
        refs = [int(nd.get("ref")) for nd in el.findall("nd")]
        for r in refs:
            if r not in nodes:
                raise DanglingNodeRef(wid, r)
        ways[wid] = OsmWay(refs, _tags_of(el))
    for el in root.findall("relation"):
        rid = int(el.get("id"))
        members = [
            (m.get("type", ""), m.get("role", ""), int(m.get("ref")))
            for m in el.findall("member")
        ]
        relations[rid] = OsmRelation(members, _tags_of(el))
    return OsmDocument(nodes, ways, relations)


def project(lat: float, lon: float, origin: tuple[float, float]) -> tuple[float, float]:
    """Equirectangular projection to local meters around `origin`."""
    if abs(lat) > 90 or abs(lon) > 180:
        raise OutOfRange(f"lat/lon out of range: {lat}, {lon}")
    lat0, lon0 = origin
    x = EARTH_RADIUS_M * (lon - lon0) * math.cos(math.radians(lat0)) * math.pi / 180.0
    y = EARTH_RADIUS_M * (lat - lat0) * math.pi / 180.0
    return x, y


def unproject(x: float, y: float, origin: tuple[float, float]) -> tuple[float, float]:
    lat0, lon0 = origin
    lon = lon0 + x / (EARTH_RADIUS_M * math.cos(math.radians(lat0))) * 180.0 / math.pi
    lat = lat0 + y / EARTH_RADIUS_M * 180.0 / math.pi
    return lat, lon


def _way_points(doc: OsmDocument, way: OsmWay, origin) -> np.ndarray:
    pts = [project(doc.nodes[r].lat, doc.nodes[r].lon, origin) for r in way.node_ids]
    return np.asarray(pts, dtype=np.float64)


def parse_height_tags(tags: dict[str, str]) -> float | None:
    """Declared height in meters from height= or building:levels= tags."""
    h = tags.get("height")
    if h:
        try:
            return float(h.strip().removesuffix("m").strip())
        except ValueError:
            pass
    levels = tags.get("building:levels")
    if levels:
        try:
            return float(levels) * METERS_PER_LEVEL
        except ValueError:
            pass
    return None


def _dedupe_ring(pts: np.ndarray) -> np.ndarray | None:
    """Drop repeated closing point and near-duplicate neighbours."""
    if len(pts) >= 2 and np.allclose(pts[0], pts[-1]):
        pts = pts[:-1]
    keep = [0]
    for i in range(1, len(pts)):
        if np.linalg.norm(pts[i] - pts[keep[-1]]) > 1e-9:
            keep.append(i)
    pts = pts[keep]
    return pts if len(pts) >= 3 else None


def _assemble_relation_rings(doc: OsmDocument, rel: OsmRelation, origin):
    """Stitch member ways into closed rings, grouped by outer/inner role."""
    groups: dict[str, list[list[int]]] = {"outer": [], "inner": []}
    for mtype, role, ref in rel.members:
        if mtype != "way" or ref not in doc.ways:
            continue
        role = role if role in ("outer", "inner") else "outer"
        groups[role].append(list(doc.ways[ref].node_ids))
    rings: dict[str, list[np.ndarray]] = {"outer": [], "inner": []}
    for role, chains in groups.items():
        pending = [c for c in chains if len(c) >= 2]
        while pending:
            ring = pending.pop(0)
            progressed = True
            while ring[0] != ring[-1] and progressed:
                progressed = False
                for i, c in enumerate(pending):
                    if c[0] == ring[-1]:
                        ring.extend(c[1:])
                    elif c[-1] == ring[-1]:
                        ring.extend(list(reversed(c))[1:])
                    elif c[-1] == ring[0]:
                        ring = c[:-1] + ring
                    elif c[0] == ring[0]:
                        ring = list(reversed(c))[:-1] + ring
                    else:
                        continue
                    pending.pop(i)
                    progressed = True
                    break
            if ring[0] == ring[-1] and len(ring) >= 4:
                pts = np.asarray(
                    [project(doc.nodes[r].lat, doc.nodes[r].lon, origin) for r in ring]
                )
                cleaned = _dedupe_ring(pts)
                if cleaned is not None:
                    rings[role].append(cleaned)
    return rings["outer"], rings["inner"]


def classify_layers(doc: OsmDocument, origin: tuple[float, float]) -> LayerSet:
    """Split the document into road/building/water/landuse layers.

    Ways that match no rule are recorded in `skipped` with a reason, so
    classified + skipped always covers every way in the document.
    """
    layers = LayerSet()
    member_way_ids = set()
    for rel in doc.relations.values():
        if rel.tags.get("type") == "multipolygon" and (
            "building" in rel.tags or rel.tags.get("natural") == "water"
        ):
            for mtype, _role, ref in rel.members:
                if mtype == "way":
                    member_way_ids.add(ref)

    for wid, way in sorted(doc.ways.items()):
        tags = way.tags
        if wid in member_way_ids:
            layers.skipped.append((wid, "multipolygon member"))
            continue
        if "highway" in tags and len(way.node_ids) >= 2:
            cls = tags["highway"]
            width = HIGHWAY_WIDTHS.get(cls, DEFAULT_HIGHWAY_WIDTH)
            pts = _way_points(doc, way, origin)
            keep = [0]
            for i in range(1, len(pts)):
                if np.linalg.norm(pts[i] - pts[keep[-1]]) > 1e-9:
                    keep.append(i)
            if len(keep) >= 2:
                layers.roads.append((Polyline(pts[keep]), cls, width))
            else:
                layers.skipped.append((wid, "degenerate highway"))
            continue
        if tags.get("building") and tags["building"] != "no" and way.is_closed():
            ring = _dedupe_ring(_way_points(doc, way, origin))
            if ring is None:
                layers.skipped.append((wid, "degenerate building ring"))
                continue
            try:
                poly = Polygon(ring).normalized()
            except ValueError:
                layers.skipped.append((wid, "invalid building ring"))
                continue
            layers.buildings.append((poly, parse_height_tags(tags)))
            continue
        if (tags.get("natural") == "water" or "waterway" in tags) and way.is_closed():
            ring = _dedupe_ring(_way_points(doc, way, origin))
            if ring is not None:
                try:
                    layers.water.append(Polygon(ring).normalized())
                    continue
                except ValueError:
                    pass
            layers.skipped.append((wid, "degenerate water ring"))
            continue
        if "landuse" in tags and way.is_closed():
            ring = _dedupe_ring(_way_points(doc, way, origin))
            if ring is not None:
                try:
                    layers.landuse.append((Polygon(ring).normalized(), tags["landuse"]))
                    continue
                except ValueError:
                    pass
            layers.skipped.append((wid, "degenerate landuse ring"))
            continue
        layers.skipped.append((wid, "unclassified"))

    for rid, rel in sorted(doc.relations.items()):
        if rel.tags.get("type") != "multipolygon":
            continue
        is_building = "building" in rel.tags and rel.tags["building"] != "no"
        is_water = rel.tags.get("natural") == "water"
        if not (is_building or is_water):
            continue
        outers, inners = _assemble_relation_rings(doc, rel, origin)
        for outer in outers:
            holes = [h for h in inners if _ring_inside(h, outer)]
            try:
                poly = Polygon(outer, holes).normalized()
            except ValueError:
                continue
            if is_building:
                layers.buildings.append((poly, parse_height_tags(rel.tags)))
            else:
                layers.water.append(poly)
    return layers


def _ring_inside(inner: np.ndarray, outer: np.ndarray) -> bool:
    from .geometry import point_in_ring

    c = inner.mean(axis=0)
    return point_in_ring(c, outer)
