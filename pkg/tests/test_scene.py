import json
import struct

import numpy as np
import pytest

from cityforge.assets import default_library
from cityforge.geometry import Mesh, Polygon, Polyline, extrude
from cityforge.layout import CityLayout, Footprint, RoadGraph
from cityforge.scene import (
    SceneObject,
    SceneState,
    export_gltf,
    export_obj,
    instantiate,
    match_style,
    match_weather,
)

GLB_MAGIC = 0x46546C67


# --- glb structural oracle (reused by the acceptance suite) ---------------------


def parse_glb(data: bytes):
    assert data[:4] == b"glTF", "bad magic"
    magic, version, total = struct.unpack_from("<III", data, 0)
    assert magic == GLB_MAGIC
    assert version == 2
    assert total == len(data), "declared length != file size"
    offset = 12
    chunks = []
    while offset < len(data):
        length, ctype = struct.unpack_from("<II", data, offset)
        offset += 8
        chunks.append((ctype, data[offset : offset + length]))
        assert length % 4 == 0, "chunk not 4-byte aligned"
        offset += length
    assert chunks[0][0] == 0x4E4F534A, "first chunk must be JSON"
    doc = json.loads(chunks[0][1].decode("utf-8"))
    binary = b""
    if len(chunks) > 1:
        assert chunks[1][0] == 0x004E4942, "second chunk must be BIN"
        binary = chunks[1][1]
    return doc, binary


COMPONENT_SIZE = {5120: 1, 5121: 1, 5122: 2, 5123: 2, 5125: 4, 5126: 4}
TYPE_COUNT = {"SCALAR": 1, "VEC2": 2, "VEC3": 3, "VEC4": 4, "MAT4": 16}


def check_glb_consistency(data: bytes):
    doc, binary = parse_glb(data)
    buffers = doc.get("buffers", [])
    if buffers:
        declared = buffers[0]["byteLength"]
        assert declared <= len(binary) <= declared + 3, "binary chunk vs buffer byteLength"
    views = doc.get("bufferViews", [])
    for v in views:
        assert v["byteOffset"] % 4 == 0, "bufferView offset not aligned"
        assert v["byteOffset"] + v["byteLength"] <= buffers[0]["byteLength"]
    for a in doc.get("accessors", []):
        v = views[a["bufferView"]]
        need = a["count"] * COMPONENT_SIZE[a["componentType"]] * TYPE_COUNT[a["type"]]
        assert a.get("byteOffset", 0) + need <= v["byteLength"], "accessor overflows view"
    return doc, binary


def one_cube_state() -> SceneState:
    state = SceneState()
    mesh = extrude(Polygon([(0, 0), (1, 0), (1, 1), (0, 1)]), 1.0)
    state.add_object(
        SceneObject(
            name="cube",
            mesh=mesh,
            translation=np.zeros(3),
            scale=np.ones(3),
            material=((0.5, 0.5, 0.5), 0.5),
            semantic_class="building",
            footprint=None,
        )
    )
    return state


# --- instantiate ---------------------------------------------------------------


def small_layout(with_green=False) -> CityLayout:
    fps = [
        Footprint(Polygon([(i * 30, 0), (i * 30 + 20, 0), (i * 30 + 20, 20), (i * 30, 20)]), i, 9.0 + 3 * i)
        for i in range(3)
    ]
    verts = np.array([(0.0, 40.0), (100.0, 40.0), (100.0, 80.0)])
    roads = RoadGraph(verts, [(0, 1, "residential", 8.0), (1, 2, "residential", 8.0)])
    green = [Polygon([(0, 100), (60, 100), (60, 140), (0, 140)])] if with_green else []
    parcels = [(fp.polygon, 0) for fp in fps]
    return CityLayout(roads, [], parcels, fps, green=green, water=[])


def test_instantiate_object_count_no_green():
    state = instantiate(small_layout(), default_library(0), seed=0)
    assert len(state.objects) == 5  # 3 footprints + 2 road edges


def test_instantiate_night_style_sun_elevation():
    state = instantiate(small_layout(), default_library(0), style="night city", seed=0)
    assert state.ambient["sun_elevation"] == -10.0
    assert state.ambient["style"] == "night"


def test_instantiate_trees_on_green():
    state = instantiate(small_layout(with_green=True), default_library(0), seed=0)
    trees = [n for n in state.objects if n.startswith("tree_")]
    assert trees
    # spacing respected
    pts = [state.objects[n].translation[:2] for n in trees]
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            assert np.linalg.norm(pts[i] - pts[j]) >= 6.0 - 1e-9


def test_instantiate_deterministic():
    a = instantiate(small_layout(True), default_library(0), seed=4)
    b = instantiate(small_layout(True), default_library(0), seed=4)
    assert sorted(a.objects) == sorted(b.objects)
    for name in a.objects:
        assert (a.objects[name].translation == b.objects[name].translation).all()
        assert (a.objects[name].scale == b.objects[name].scale).all()


def test_match_presets():
    assert match_style("traditional brick town")[0] == "traditional"
    assert match_style("unknown words")[0] == "modern"
    assert match_weather("heavy rain")[0] == "rain"


# --- export_gltf ----------------------------------------------------------------


def test_gltf_empty_scene():
    bundle = export_gltf(SceneState())
    assert bundle.data[:4] == b"glTF"
    doc, binary = check_glb_consistency(bundle.data)
    assert len(doc.get("meshes", [])) == 0
    assert len(doc["nodes"]) == 1  # the root scene node
    assert bundle.object_count == 0


def test_gltf_unit_cube_counts():
    bundle = export_gltf(one_cube_state())
    doc, binary = check_glb_consistency(bundle.data)
    mesh_nodes = [n for n in doc["nodes"] if "mesh" in n]
    assert len(mesh_nodes) == 1
    prim = doc["meshes"][0]["primitives"][0]
    pos_acc = doc["accessors"][prim["attributes"]["POSITION"]]
    idx_acc = doc["accessors"][prim["indices"]]
    assert pos_acc["count"] == 8
    assert idx_acc["count"] == 36
    assert bundle.triangle_count == 12


def test_gltf_accessor_minmax_matches_buffer():
    state = one_cube_state()
    bundle = export_gltf(state)
    doc, binary = check_glb_consistency(bundle.data)
    prim = doc["meshes"][0]["primitives"][0]
    acc = doc["accessors"][prim["attributes"]["POSITION"]]
    view = doc["bufferViews"][acc["bufferView"]]
    raw = binary[view["byteOffset"] : view["byteOffset"] + view["byteLength"]]
    arr = np.frombuffer(raw, dtype="<f4").reshape(-1, 3)
    assert list(arr.min(axis=0)) == acc["min"]
    assert list(arr.max(axis=0)) == acc["max"]


def test_gltf_repeat_export_byte_identical():
    state = instantiate(small_layout(True), default_library(0), seed=9)
    a = export_gltf(state)
    b = export_gltf(state)
    assert a.data == b.data


def test_gltf_triangle_count_conserved():
    state = instantiate(small_layout(True), default_library(0), seed=1)
    bundle = export_gltf(state)
    expect = sum(len(o.mesh.triangles) for o in state.objects.values())
    assert bundle.triangle_count == expect
    doc, _ = check_glb_consistency(bundle.data)
    total = 0
    for m in doc["meshes"]:
        for p in m["primitives"]:
            total += doc["accessors"][p["indices"]]["count"] // 3
    assert total == expect


def test_gltf_nodes_sorted_by_name():
    state = instantiate(small_layout(True), default_library(0), seed=1)
    doc, _ = check_glb_consistency(export_gltf(state).data)
    mesh_node_names = [n["name"] for n in doc["nodes"] if "mesh" in n]
    assert mesh_node_names == sorted(mesh_node_names)


def test_gltf_scene_extras_carry_ambient():
    state = instantiate(small_layout(), default_library(0), style="night", weather="fog", seed=0)
    doc, _ = check_glb_consistency(export_gltf(state).data)
    extras = doc["scenes"][0]["extras"]
    assert extras["weather"] == "fog"
    assert extras["sun_elevation"] == -10.0  # night style overrides the weather sun


# --- export_obj -----------------------------------------------------------------


def parse_obj(text: str):
    verts, faces, objects = 0, 0, []
    for line in text.splitlines():
        if line.startswith("v "):
            verts += 1
        elif line.startswith("f "):
            faces += 1
        elif line.startswith("o "):
            objects.append(line[2:])
    return verts, faces, objects


def test_obj_single_triangle():
    state = SceneState()
    mesh = Mesh(
        np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float),
        np.array([[0, 1, 2]], dtype=np.int32),
        np.tile([0.0, 0.0, 1.0], (3, 1)),
    )
    state.add_object(
        SceneObject("tri", mesh, np.zeros(3), np.ones(3), ((1, 1, 1), 0.5), "generic", None)
    )
    verts, faces, objects = parse_obj(export_obj(state))
    assert (verts, faces, objects) == (3, 1, ["tri"])


def test_obj_empty_scene_header_only():
    text = export_obj(SceneState())
    assert all(l.startswith("#") or not l for l in text.splitlines())


def test_obj_reimport_counts():
    state = instantiate(small_layout(True), default_library(0), seed=2)
    verts, faces, objects = parse_obj(export_obj(state))
    assert verts == sum(len(o.mesh.positions) for o in state.objects.values())
    assert faces == sum(len(o.mesh.triangles) for o in state.objects.values())
    assert len(objects) == len(state.objects)


def test_obj_indices_global_and_one_based():
    state = one_cube_state()
    text = export_obj(state)
    idx = [
        int(tok)
        for line in text.splitlines()
        if line.startswith("f ")
        for tok in line.split()[1:]
    ]
    assert min(idx) == 1
    assert max(idx) == 8
