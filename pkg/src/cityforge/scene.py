"""Scene assembly and deterministic export.

A SceneState is a named collection of objects (local-frame mesh plus TRS
transform, material and semantic class) with scene-level ambient keys for
style and weather. Exports are byte-stable: identical states produce
identical glTF binary containers and OBJ text. The export convention is
Y-up: layout x maps to x, layout y to -z, height to y.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .assets import AssetLibrary
from .geometry import Mesh, Polygon, Polyline, extrude, sweep_profile, triangulate_indexed
from .layout import CityLayout
from .rng import subsystem_seed

TREE_SPACING = 6.0  # m, Poisson-disk radius for scattering

STYLE_PRESETS = {
    "modern": {
        "palette": {"building": (0.66, 0.68, 0.72), "roof": (0.4, 0.45, 0.5)},
        "roughness": 0.35,
        "ambient": {},
    },
    "traditional": {
        "palette": {"building": (0.69, 0.48, 0.36), "roof": (0.45, 0.3, 0.22)},
        "roughness": 0.8,
        "ambient": {},
    },
    "night": {
        "palette": {"building": (0.16, 0.17, 0.22), "roof": (0.1, 0.1, 0.14)},
        "roughness": 0.5,
        "ambient": {"sun_elevation": -10.0, "emissive_windows": 1.0},
    },
}

WEATHER_PRESETS = {
    "clear": {"sun_elevation": 45.0, "fog_density": 0.0},
    "overcast": {"sun_elevation": 30.0, "fog_density": 0.1},
    "rain": {"sun_elevation": 25.0, "fog_density": 0.25},
    "fog": {"sun_elevation": 20.0, "fog_density": 0.6},
    "snow": {"sun_elevation": 15.0, "fog_density": 0.35},
}

CLASS_MATERIALS = {
    "road": ((0.32, 0.32, 0.34), 0.9),
    "water": ((0.1, 0.3, 0.65), 0.1),
    "green": ((0.2, 0.5, 0.2), 0.95),
}


def match_style(text: str) -> tuple[str, dict]:
    t = (text or "").lower()
    for name in STYLE_PRESETS:
        if name in t:
            return name, STYLE_PRESETS[name]
    return "modern", STYLE_PRESETS["modern"]


def match_weather(text: str) -> tuple[str, dict]:
    t = (text or "").lower()
    for name in WEATHER_PRESETS:
        if name in t:
            return name, WEATHER_PRESETS[name]
    return "clear", WEATHER_PRESETS["clear"]


@dataclass
class SceneObject:
    name: str
    mesh: Mesh
    translation: np.ndarray  # (3,)
    scale: np.ndarray  # (3,)
    material: tuple[tuple[float, float, float], float]
    semantic_class: str
    footprint: Polygon | None = None  # local frame, scaled/translated with the object

    def world_footprint(self) -> Polygon | None:
        if self.footprint is None:
            return None
        s = self.scale[:2]
        t = self.translation[:2]
        return Polygon(
            self.footprint.outer * s + t,
            [h * s + t for h in self.footprint.holes],
        )

    def world_height(self) -> float:
        z = self.mesh.positions[:, 2]
        return float((z.max() - z.min()) * self.scale[2]) if len(z) else 0.0


@dataclass
class SceneState:
    revision: int = 0
    objects: dict[str, SceneObject] = field(default_factory=dict)
    available_formats: set = field(default_factory=set)
    ambient: dict = field(default_factory=dict)
    bounds: tuple[float, float, float, float] | None = None

    def add_object(self, obj: SceneObject) -> SceneObject:
        if obj.name in self.objects:
            raise ValueError(f"duplicate object name '{obj.name}'")
        self.objects[obj.name] = obj
        return obj

    def snapshot(self) -> "SceneState":
        import copy

        return copy.deepcopy(self)


# ---------------------------------------------------------------------------
# instantiation


def _local_frame(poly: Polygon) -> tuple[Polygon, np.ndarray]:
    """Recenter a polygon at its centroid; returns (local polygon, centroid)."""
    c = poly.outer.mean(axis=0)
    local = Polygon(poly.outer - c, [h - c for h in poly.holes])
    return local, c


def _flat_mesh(poly: Polygon, semantic_class: str, z: float = 0.0) -> Mesh:
    pts2, tris = triangulate_indexed(poly)
    positions = np.column_stack([pts2, np.full(len(pts2), z)])
    normals = np.tile([0.0, 0.0, 1.0], (len(pts2), 1))
    return Mesh(positions, tris, normals, semantic_class)


def _poisson_points(poly: Polygon, spacing: float, seed: int) -> list[np.ndarray]:
    """Seeded dart throwing: uniform candidates, keep those spacing apart."""
    from .geometry import point_in_polygon, signed_area

    minx, miny, maxx, maxy = poly.bounds()
    area = abs(signed_area(poly))
    attempts = max(4, int(area / (spacing * spacing) * 4))
    rng = np.random.default_rng(seed)
    accepted: list[np.ndarray] = []
    for _ in range(attempts):
        p = rng.uniform((minx, miny), (maxx, maxy))
        if not point_in_polygon(p, poly):
            continue
        if all(np.linalg.norm(p - q) >= spacing for q in accepted):
            accepted.append(p)
    return accepted


def instantiate(
    layout: CityLayout,
    library: AssetLibrary,
    style: str = "modern",
    weather: str = "clear",
    seed: int = 0,
) -> SceneState:
    """Build the object scene for a layout: buildings, roads, ground
    patches, scattered trees, and ambient style/weather keys."""
    state = SceneState()
    style_name, style_preset = match_style(style)
    weather_name, weather_preset = match_weather(weather)
    state.ambient = {
        "style": style_name,
        "weather": weather_name,
        **weather_preset,
        **style_preset["ambient"],
    }

    xs, ys = [], []

    def track(poly: Polygon):
        minx, miny, maxx, maxy = poly.bounds()
        xs.extend((minx, maxx))
        ys.extend((miny, maxy))

    tint_rng = np.random.default_rng(subsystem_seed(seed, "tints"))
    base_color = style_preset["palette"]["building"]
    for i, fp in enumerate(layout.footprints):
        local, c = _local_frame(fp.polygon)
        mesh = extrude(local, fp.height, "building")
        tint = 1.0 + float(tint_rng.uniform(-0.08, 0.08))
        color = tuple(min(1.0, max(0.0, v * tint)) for v in base_color)
        state.add_object(
            SceneObject(
                name=f"bldg_{i:04d}",
                mesh=mesh,
                translation=np.array([c[0], c[1], fp.base_z]),
                scale=np.ones(3),
                material=(color, style_preset["roughness"]),
                semantic_class="building",
                footprint=local,
            )
        )
        track(fp.polygon)

    for i, (a, b, cls, width) in enumerate(layout.roads.edges):
        pa, pb = layout.roads.vertices[a], layout.roads.vertices[b]
        line = Polyline([pa, pb])
        mesh = sweep_profile(line, width, "road")
        ribbon = Polygon(np.vstack([mesh.positions[: len(line.points), :2],
                                    mesh.positions[len(line.points):, :2][::-1]]))
        state.add_object(
            SceneObject(
                name=f"road_{i:04d}",
                mesh=mesh,
                translation=np.zeros(3),
                scale=np.ones(3),
                material=CLASS_MATERIALS["road"],
                semantic_class="road",
                footprint=ribbon,
            )
        )
        track(ribbon)

    for kind, polys in (("water", layout.water), ("green", layout.green)):
        for i, poly in enumerate(polys):
            local, c = _local_frame(poly.normalized())
            state.add_object(
                SceneObject(
                    name=f"{kind}_{i:04d}",
                    mesh=_flat_mesh(local, kind),
                    translation=np.array([c[0], c[1], 0.0]),
                    scale=np.ones(3),
                    material=CLASS_MATERIALS[kind],
                    semantic_class=kind,
                    footprint=local,
                )
            )
            track(poly)

    tree_count = 0
    if len(library):
        for gi, green in enumerate(layout.green):
            pts = _poisson_points(green, TREE_SPACING, subsystem_seed(seed, "trees", gi))
            for p in pts:
                rec = library.retrieve("tree", seed=subsystem_seed(seed, "tree-pick", tree_count))
                state.add_object(
                    SceneObject(
                        name=f"tree_{tree_count:04d}",
                        mesh=rec.mesh,
                        translation=np.array([p[0], p[1], 0.0]),
                        scale=np.ones(3),
                        material=rec.material,
                        semantic_class="green",
                        footprint=None,
                    )
                )
                tree_count += 1

    if xs:
        margin = 50.0
        state.bounds = (min(xs) - margin, min(ys) - margin, max(xs) + margin, max(ys) + margin)
    return state


# ---------------------------------------------------------------------------
# glTF 2.0 binary export


GLB_MAGIC = 0x46546C67
CHUNK_JSON = 0x4E4F534A
CHUNK_BIN = 0x004E4942

_YUP = "layout plane maps x->x, y->-z; height is +y"


def _to_yup(positions: np.ndarray) -> np.ndarray:
    out = np.empty_like(positions)
    out[:, 0] = positions[:, 0]
    out[:, 1] = positions[:, 2]
    out[:, 2] = -positions[:, 1]
    return out


@dataclass
class ExportBundle:
    data: bytes
    object_count: int
    triangle_count: int

    @property
    def byte_length(self) -> int:
        return len(self.data)


def export_gltf(state: SceneState) -> ExportBundle:
    """Serialize to a single glTF 2.0 binary container (.glb bytes)."""
    names = sorted(state.objects)
    binary = bytearray()
    accessors, buffer_views, meshes, nodes, materials = [], [], [], [], []
    material_index: dict[tuple, int] = {}
    triangle_count = 0

    def add_view(raw: bytes) -> int:
        while len(binary) % 4:
            binary.append(0)
        offset = len(binary)
        binary.extend(raw)
        buffer_views.append({"buffer": 0, "byteOffset": offset, "byteLength": len(raw)})
        return len(buffer_views) - 1

    def add_accessor(view: int, ctype: int, count: int, atype: str, amin=None, amax=None) -> int:
        acc = {"bufferView": view, "byteOffset": 0, "componentType": ctype, "count": count, "type": atype}
        if amin is not None:
            acc["min"] = amin
            acc["max"] = amax
        accessors.append(acc)
        return len(accessors) - 1

    root_children = []
    for name in names:
        obj = state.objects[name]
        pos = _to_yup(obj.mesh.positions).astype("<f4")
        nrm = _to_yup(obj.mesh.normals).astype("<f4")
        lens = np.linalg.norm(nrm.astype(np.float64), axis=1)
        lens[lens == 0] = 1.0
        nrm = (nrm / lens[:, None]).astype("<f4")
        idx = obj.mesh.triangles.astype("<u4")  # axis map is a pure rotation, winding kept
        triangle_count += len(obj.mesh.triangles)

        pv = add_view(pos.tobytes())
        pa = add_accessor(
            pv, 5126, len(pos), "VEC3",
            [float(v) for v in pos.min(axis=0)] if len(pos) else [0.0, 0.0, 0.0],
            [float(v) for v in pos.max(axis=0)] if len(pos) else [0.0, 0.0, 0.0],
        )
        nv = add_view(nrm.tobytes())
        na = add_accessor(nv, 5126, len(nrm), "VEC3")
        iv = add_view(idx.tobytes())
        ia = add_accessor(iv, 5125, idx.size, "SCALAR")

        mat_key = (tuple(round(c, 6) for c in obj.material[0]), round(obj.material[1], 6))
        if mat_key not in material_index:
            material_index[mat_key] = len(materials)
            materials.append(
                {
                    "name": f"mat_{len(materials):03d}",
                    "pbrMetallicRoughness": {
                        "baseColorFactor": [*mat_key[0], 1.0],
                        "metallicFactor": 0.0,
                        "roughnessFactor": mat_key[1],
                    },
                }
            )
        meshes.append(
            {
                "name": name,
                "primitives": [
                    {
                        "attributes": {"POSITION": pa, "NORMAL": na},
                        "indices": ia,
                        "material": material_index[mat_key],
                        "mode": 4,
                    }
                ],
            }
        )
        t = obj.translation
        s = obj.scale
        node = {
            "name": name,
            "mesh": len(meshes) - 1,
            "extras": {"semantic_class": obj.semantic_class},
        }
        if not np.allclose(t, 0.0):
            node["translation"] = [float(t[0]), float(t[2]), float(-t[1])]
        if not np.allclose(s, 1.0):
            node["scale"] = [float(s[0]), float(s[2]), float(s[1])]
        nodes.append(node)
        root_children.append(len(nodes) - 1)

    root = {"name": "scene"}
    if root_children:
        root["children"] = [c + 1 for c in root_children]  # root is inserted at index 0
    nodes = [root] + nodes

    doc = {
        "asset": {"version": "2.0", "generator": "cityforge"},
        "scene": 0,
        "scenes": [
            {
                "nodes": [0],
                "extras": {k: state.ambient[k] for k in sorted(state.ambient)},
            }
        ],
        "nodes": nodes,
    }
    if meshes:
        doc["meshes"] = meshes
        doc["materials"] = materials
        doc["accessors"] = accessors
        doc["bufferViews"] = buffer_views
    while len(binary) % 4:
        binary.append(0)
    if binary:
        doc["buffers"] = [{"byteLength": len(binary)}]

    payload = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
    while len(payload) % 4:
        payload += b" "
    total = 12 + 8 + len(payload) + ((8 + len(binary)) if binary else 0)
    out = bytearray()
    out += struct.pack("<III", GLB_MAGIC, 2, total)
    out += struct.pack("<II", len(payload), CHUNK_JSON)
    out += payload
    if binary:
        out += struct.pack("<II", len(binary), CHUNK_BIN)
        out += binary
    return ExportBundle(bytes(out), len(names), triangle_count)


def export_obj(state: SceneState) -> str:
    """ASCII OBJ with one `o` group per object, global 1-based indices."""
    lines = ["# cityforge OBJ export", f"# objects: {len(state.objects)}"]
    offset = 1
    for name in sorted(state.objects):
        obj = state.objects[name]
        lines.append(f"o {name}")
        world = _to_yup(obj.mesh.positions * obj.scale + obj.translation)
        for p in world:
            lines.append(f"v {p[0]:.6f} {p[1]:.6f} {p[2]:.6f}")
        for a, b, c in obj.mesh.triangles:
            lines.append(f"f {offset + a} {offset + b} {offset + c}")
        offset += len(world)
    return "\n".join(lines) + "\n"
