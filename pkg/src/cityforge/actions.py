"""Action implementations behind the registry.

Builtin conversion interfaces operate on the session's typed value store;
engine actions cover layout assembly, scene population and the refinement
edits (scale, raise, recolor, remove, style, weather). Every implementation
takes the running session first and its manifest parameters as keywords,
and is deterministic given the session seed.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import shapely.geometry as sg
from shapely.strtree import STRtree

from .agents import ActionFailed, Session
from .assets import AssetLibrary, AssetRecord
from .geometry import Mesh, Polygon, Polyline, convex_hull, extrude
from .layout import CityLayout, assemble_layout, generate_footprints
from .osm import classify_layers, parse_osm
from .protocol import ActionManifest, ActionRegistry, DataFormat, ManifestInput, builtin_conversions
from .raster import SemanticPointCloud, vectorize_regions
from .rng import subsystem_seed
from .scene import SceneObject, SceneState, instantiate, match_style, match_weather

_F = DataFormat

_NAME_PREFIXES = {
    "building": "bldg",
    "buildings": "bldg",
    "bldg": "bldg",
    "road": "road",
    "roads": "road",
    "tree": "tree",
    "trees": "tree",
    "water": "water",
    "green": "green",
    "cube": "cube",
    "cubes": "cube",
    "asset": "place",
    "assets": "place",
}


def resolve_objects(state: SceneState, selector: str) -> list[str]:
    """Resolve a selector to object names: exact name first, else the
    class-word prefix (buildings -> bldg_*). Raises ActionFailed on none."""
    tokens = selector.split()
    for tok in tokens:
        if tok in state.objects:
            return [tok]
    prefixes = {
        _NAME_PREFIXES[t.lower()] for t in tokens if t.lower() in _NAME_PREFIXES
    }
    names = sorted(n for n in state.objects if any(n.startswith(p + "_") for p in prefixes))
    if not names:
        raise ActionFailed("resolve", f"object not found for '{selector}'")
    return names


def _object_counter(state: SceneState, prefix: str) -> int:
    return sum(1 for n in state.objects if n.startswith(prefix + "_"))


def _free_spot(s: Session, clearance: float = 2.0) -> tuple[float, float]:
    """First grid point (row-major scan) clear of building footprints."""
    if s.state.bounds:
        minx, miny, maxx, maxy = s.state.bounds
    else:
        minx, miny, maxx, maxy = -50.0, -50.0, 50.0, 50.0
    shapes = []
    for name in sorted(s.state.objects):
        obj = s.state.objects[name]
        fp = obj.world_footprint()
        if fp is not None:
            shapes.append(sg.Polygon(fp.outer, fp.holes))
    tree = STRtree(shapes) if shapes else None
    step = 10.0
    y = miny + clearance + step
    while y < maxy - clearance:
        x = minx + clearance + step
        while x < maxx - clearance:
            pt = sg.Point(x, y)
            if tree is None:
                return x, y
            clear = True
            for idx in tree.query(pt.buffer(clearance)):
                if shapes[int(idx)].distance(pt) < clearance:
                    clear = False
                    break
            if clear:
                return x, y
            x += step
        y += step
    return minx + clearance, miny + clearance


# ---------------------------------------------------------------------------
# builtin conversion implementations


def impl_point_to_face_conversion(s: Session, points):
    if isinstance(points, SemanticPointCloud):
        return vectorize_regions(points.grid)
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) < 3:
        raise ActionFailed("point_to_face_conversion", "need at least 3 points")
    return [(Polygon(convex_hull(pts)), "building")]


def impl_cube_generation(s: Session, size):
    e = float(size)
    if e <= 0:
        raise ActionFailed("cube_generation", "edge must be positive")
    half = e / 2.0
    mesh = extrude(Polygon([(-half, -half), (half, -half), (half, half), (-half, half)]), e, "building")
    name = f"cube_{_object_counter(s.state, 'cube'):04d}"
    s.state.add_object(
        SceneObject(
            name=name,
            mesh=mesh,
            translation=np.zeros(3),
            scale=np.ones(3),
            material=((0.7, 0.7, 0.7), 0.6),
            semantic_class="building",
            footprint=Polygon([(-half, -half), (half, -half), (half, half), (-half, half)]),
        )
    )
    return mesh


def impl_point_generation(s: Session, count):
    n = max(1, int(count))
    rng = np.random.default_rng(subsystem_seed(s.seed, "point-gen", len(s.pool.entries())))
    if s.state.bounds:
        minx, miny, maxx, maxy = s.state.bounds
    else:
        minx, miny, maxx, maxy = 0.0, 0.0, 100.0, 100.0
    return rng.uniform((minx, miny), (maxx, maxy), size=(n, 2))


def impl_line_generation(s: Session, count):
    pts = impl_point_generation(s, max(2, int(count) * 2))
    return [Polyline(pts[i : i + 2]) for i in range(0, len(pts) - 1, 2)]


def impl_face_generation(s: Session, count):
    n = max(1, int(count))
    rng = np.random.default_rng(subsystem_seed(s.seed, "face-gen", len(s.pool.entries())))
    out = []
    for _ in range(n):
        c = rng.uniform(0, 100, size=2)
        r = rng.uniform(5, 15)
        k = int(rng.integers(5, 9))
        ang = np.sort(rng.uniform(0, 2 * np.pi, size=k))
        pts = np.column_stack([c[0] + r * np.cos(ang), c[1] + r * np.sin(ang)])
        try:
            out.append((Polygon(convex_hull(pts)), "building"))
        except ValueError:
            continue
    if not out:
        raise ActionFailed("face_generation", "no valid faces generated")
    return out


def impl_line_to_face_conversion(s: Session, lines):
    out = []
    for line in lines if isinstance(lines, (list, tuple)) else [lines]:
        pts = line.points if isinstance(line, Polyline) else np.asarray(line)
        try:
            out.append((Polygon(pts), "building"))
        except ValueError:
            continue
    if not out:
        raise ActionFailed("line_to_face_conversion", "no loop could be closed")
    return out


def impl_asset_placement(s: Session, asset, layout, position=None):
    if isinstance(asset, AssetRecord):
        mesh, material = asset.mesh, asset.material
    elif isinstance(asset, Mesh):
        mesh, material = asset, ((0.6, 0.6, 0.6), 0.6)
    elif isinstance(asset, list) and asset and isinstance(asset[0], Mesh):
        mesh, material = asset[0], ((0.6, 0.6, 0.6), 0.6)
    else:
        raise ActionFailed("asset_placement", f"cannot place a {type(asset).__name__}")
    x, y = position if position is not None else _free_spot(s)
    name = f"place_{_object_counter(s.state, 'place'):04d}"
    state = layout if isinstance(layout, SceneState) else s.state
    state.add_object(
        SceneObject(
            name=name,
            mesh=mesh,
            translation=np.array([float(x), float(y), 0.0]),
            scale=np.ones(3),
            material=material,
            semantic_class=mesh.semantic_class,
            footprint=None,
        )
    )
    return state


def impl_point_to_line_conversion(s: Session, points):
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) < 2:
        raise ActionFailed("point_to_line_conversion", "need at least 2 points")
    return [Polyline(pts)]


def impl_osm_file_retrieval(s: Session, query):
    data = s.inputs.get("osm")
    if data is None and isinstance(query, str):
        p = Path(query)
        if p.exists():
            data = p.read_bytes()
    if data is None:
        raise ActionFailed("osm_file_retrieval", "no OSM source available")
    doc = parse_osm(data)
    return classify_layers(doc, doc.bbox_center())


def impl_object_meshing(s: Session, faces, height: float = 9.0):
    meshes = []
    for item in faces:
        poly = item[0] if isinstance(item, tuple) else item
        try:
            meshes.append(extrude(poly, height, "building"))
        except ValueError:
            continue
    if not meshes:
        raise ActionFailed("object_meshing", "no face could be meshed")
    return meshes


def impl_texture_information_extraction(s: Session, material):
    (r, g, b), rough = material
    return f"base color #{int(r * 255):02x}{int(g * 255):02x}{int(b * 255):02x}, roughness {rough:.2f}"


def impl_asset_material_retrieval(s: Session, query):
    if s.library is None or not len(s.library):
        raise ActionFailed("asset_material_retrieval", "asset library is empty")
    rec = s.library.retrieve(str(query), seed=subsystem_seed(s.seed, "material-pick", len(s.pool.entries())))
    return rec.material


def impl_asset_mesh_retrieval(s: Session, query):
    if s.library is None or not len(s.library):
        raise ActionFailed("asset_mesh_retrieval", "asset library is empty")
    return s.library.retrieve(str(query), seed=subsystem_seed(s.seed, "mesh-pick", len(s.pool.entries())))


def impl_scene_object_information_extraction(s: Session, layout):
    if isinstance(layout, SceneState):
        parts = [
            f"{n}:{layout.objects[n].semantic_class}" for n in sorted(layout.objects)
        ]
        return f"{len(parts)} objects; " + ", ".join(parts[:40])
    if isinstance(layout, CityLayout):
        return (
            f"layout with {len(layout.footprints)} footprints, "
            f"{len(layout.roads.edges)} road edges, {len(layout.blocks)} blocks"
        )
    return str(layout)


# ---------------------------------------------------------------------------
# engine actions


def impl_layout_from_geodata(s: Session, geodata):
    return assemble_layout(geodata, s.inputs.get("height_grid"), s.seed)


def impl_layout_from_regions(s: Session, faces):
    grid = s.inputs.get("semantic_grid")
    if grid is not None:
        return assemble_layout(grid, s.inputs.get("height_grid"), s.seed)
    return assemble_layout(list(faces), s.inputs.get("height_grid"), s.seed)


def impl_scene_population(s: Session, layout):
    if isinstance(layout, SceneState):
        return layout  # already populated
    if not isinstance(layout, CityLayout):
        raise ActionFailed("scene_population", f"cannot populate from {type(layout).__name__}")
    populated = instantiate(layout, s.library or AssetLibrary(), s.style, s.weather, s.seed)
    st = s.state
    st.objects = populated.objects
    st.ambient = populated.ambient
    st.bounds = populated.bounds
    return st


def impl_building_generation(s: Session, faces):
    parcels = []
    for item in faces:
        poly, label = item if isinstance(item, tuple) else (item, "building")
        if label == "building":
            parcels.append((Polygon(poly.outer).normalized(), len(parcels)))
    if not parcels:
        raise ActionFailed("building_generation", "no building faces supplied")
    fps = generate_footprints(parcels, ["residential"] * len(parcels), subsystem_seed(s.seed, "gen-buildings"))
    if not fps:
        raise ActionFailed("building_generation", "all faces collapsed under inset")
    meshes = []
    base = _object_counter(s.state, "bldg")
    for k, fp in enumerate(fps):
        c = fp.polygon.outer.mean(axis=0)
        local = Polygon(fp.polygon.outer - c, [h - c for h in fp.polygon.holes])
        mesh = extrude(local, fp.height, "building")
        s.state.add_object(
            SceneObject(
                name=f"bldg_{base + k:04d}",
                mesh=mesh,
                translation=np.array([c[0], c[1], fp.base_z]),
                scale=np.ones(3),
                material=((0.66, 0.68, 0.72), 0.5),
                semantic_class="building",
                footprint=local,
            )
        )
        meshes.append(mesh)
    return meshes


def impl_scale_object(s: Session, scale_factor, scaled_obj_name):
    try:
        factor = np.asarray(scale_factor, dtype=np.float64).reshape(3)
    except Exception:
        raise ActionFailed("scale_object", f"bad scale factor {scale_factor!r}") from None
    if np.any(factor <= 0):
        raise ActionFailed("scale_object", "scale factor must be positive")
    try:
        names = resolve_objects(s.state, str(scaled_obj_name))
    except ActionFailed:
        raise ActionFailed("scale_object", "object not found") from None
    for name in names:
        s.state.objects[name].scale = s.state.objects[name].scale * factor
    return s.state


def impl_raise_object(s: Session, factor, object_name, target_height=None):
    try:
        names = resolve_objects(s.state, str(object_name))
    except ActionFailed:
        raise ActionFailed("raise_object", "object not found") from None
    for name in names:
        obj = s.state.objects[name]
        if target_height is not None:
            h = obj.world_height()
            if h <= 0:
                continue
            obj.scale = obj.scale * np.array([1.0, 1.0, float(target_height) / h])
        else:
            f = float(factor)
            if f <= 0:
                raise ActionFailed("raise_object", "factor must be positive")
            obj.scale = obj.scale * np.array([1.0, 1.0, f])
    return s.state


def impl_recolor_object(s: Session, color, object_name):
    try:
        rgb = tuple(float(c) for c in color)
    except Exception:
        raise ActionFailed("recolor_object", f"bad color {color!r}") from None
    if len(rgb) != 3 or any(not (0.0 <= c <= 1.0) for c in rgb):
        raise ActionFailed("recolor_object", f"bad color {color!r}")
    try:
        names = resolve_objects(s.state, str(object_name))
    except ActionFailed:
        raise ActionFailed("recolor_object", "object not found") from None
    for name in names:
        obj = s.state.objects[name]
        obj.material = (rgb, obj.material[1])
    return s.state


def impl_remove_object(s: Session, object_name):
    try:
        names = resolve_objects(s.state, str(object_name))
    except ActionFailed:
        raise ActionFailed("remove_object", "object not found") from None
    for name in names:
        del s.state.objects[name]
    return s.state


def impl_set_style(s: Session, style):
    name, preset = match_style(str(style))
    s.style = name
    base = preset["palette"]["building"]
    for obj_name in sorted(s.state.objects):
        obj = s.state.objects[obj_name]
        if obj.semantic_class == "building":
            obj.material = (base, preset["roughness"])
    s.state.ambient["style"] = name
    s.state.ambient.update(preset["ambient"])
    return s.state


def impl_set_weather(s: Session, weather):
    name, preset = match_weather(str(weather))
    s.weather = name
    s.state.ambient["weather"] = name
    s.state.ambient.update(preset)
    return s.state


# ---------------------------------------------------------------------------
# registry assembly

# (classname, description, inputs, output, limitation, impl, chainable)
_ENGINE_SPECS = [
    (
        "layout_from_geodata",
        "Assembling a scene layout from geographic information data.",
        [("geodata", _F.GEOGRAPHIC_INFORMATION_DATA, "classified vector layers")],
        _F.SCENE_LAYOUT,
        "Needs roads or declared buildings in the layers.",
        impl_layout_from_geodata,
        True,
    ),
    (
        "layout_from_regions",
        "Assembling a scene layout from labeled faces.",
        [("faces", _F.SURFACE, "labeled region polygons")],
        _F.SCENE_LAYOUT,
        "Building-class faces become blocks.",
        impl_layout_from_regions,
        True,
    ),
    (
        "scene_population",
        "Populating the scene layout with generated objects and retrieved assets.",
        [("layout", _F.SCENE_LAYOUT, "layout to populate")],
        _F.SCENE_LAYOUT,
        "Replaces the current scene objects.",
        impl_scene_population,
        False,
    ),
    (
        "building_generation",
        "Generating buildings from footprint faces.",
        [("faces", _F.SURFACE, "building faces")],
        _F.COMPLEX_GEOMETRY,
        "Faces shrink by the footprint setback before extrusion.",
        impl_building_generation,
        False,
    ),
    (
        "scale_object",
        "Scale an object",
        [
            ("scale_factor", _F.POINT, "scale factor"),
            ("scaled_obj_name", _F.STRING_INFORMATION, "scaled object name"),
        ],
        _F.SCENE_LAYOUT,
        "Scales about the object origin.",
        impl_scale_object,
        False,
    ),
    (
        "raise_object",
        "Raising the height of an object or class.",
        [
            ("factor", _F.RANDOM_NUMBER, "height multiplier"),
            ("object_name", _F.STRING_INFORMATION, "object or class to raise"),
        ],
        _F.SCENE_LAYOUT,
        "Only the vertical scale changes.",
        impl_raise_object,
        False,
    ),
    (
        "recolor_object",
        "Recoloring an object or class.",
        [
            ("color", _F.COLOR, "target base color"),
            ("object_name", _F.STRING_INFORMATION, "object or class to recolor"),
        ],
        _F.SCENE_LAYOUT,
        "Roughness is preserved.",
        impl_recolor_object,
        False,
    ),
    (
        "remove_object",
        "Removing an object or class from the scene.",
        [("object_name", _F.STRING_INFORMATION, "object or class to remove")],
        _F.SCENE_LAYOUT,
        "Removal is permanent within the revision.",
        impl_remove_object,
        False,
    ),
    (
        "set_style",
        "Setting the scene style preset.",
        [("style", _F.STRING_INFORMATION, "style preset name")],
        _F.SCENE_LAYOUT,
        "Unknown styles fall back to the modern preset.",
        impl_set_style,
        False,
    ),
    (
        "set_weather",
        "Setting the scene weather preset.",
        [("weather", _F.STRING_INFORMATION, "weather preset name")],
        _F.SCENE_LAYOUT,
        "Unknown weather falls back to the clear preset.",
        impl_set_weather,
        False,
    ),
]

_BUILTIN_IMPLS = {
    "point_to_face_conversion": impl_point_to_face_conversion,
    "cube_generation": impl_cube_generation,
    "point_generation": impl_point_generation,
    "line_generation": impl_line_generation,
    "face_generation": impl_face_generation,
    "line_to_face_conversion": impl_line_to_face_conversion,
    "asset_placement": impl_asset_placement,
    "point_to_line_conversion": impl_point_to_line_conversion,
    "osm_file_retrieval": impl_osm_file_retrieval,
    "object_meshing": impl_object_meshing,
    "texture_information_extraction": impl_texture_information_extraction,
    "asset_material_retrieval": impl_asset_material_retrieval,
    "asset_mesh_retrieval": impl_asset_mesh_retrieval,
    "scene_object_information_extraction": impl_scene_object_information_extraction,
}


def build_registry(include_engine_actions: bool = True) -> ActionRegistry:
    """Registry with the 14 builtin conversions plus the engine actions."""
    registry = ActionRegistry()
    for manifest in builtin_conversions():
        registry.register(manifest, _BUILTIN_IMPLS[manifest.classname])
    if include_engine_actions:
        for name, desc, inputs, output, limitation, impl, chainable in _ENGINE_SPECS:
            registry.register(
                ActionManifest(
                    classname=name,
                    description=desc,
                    inputs=[ManifestInput(n, f, d) for n, f, d in inputs],
                    limitation=limitation,
                    run=name,
                    output=output,
                ),
                impl,
                chainable=chainable,
            )
    return registry
