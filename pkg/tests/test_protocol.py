import json

import pytest

from cityforge.protocol import (
    ActionManifest,
    ActionRegistry,
    BadClassname,
    DataFormat,
    DuplicateClassname,
    ManifestInput,
    MissingField,
    UnknownAction,
    UnknownField,
    UnknownFormat,
    action_doc,
    builtin_conversions,
    dump_manifest,
    load_manifest,
    manifest_to_document,
    validate_manifest,
)

EXPECTED_BUILTINS = [
    "point_to_face_conversion",
    "cube_generation",
    "point_generation",
    "line_generation",
    "face_generation",
    "line_to_face_conversion",
    "asset_placement",
    "point_to_line_conversion",
    "osm_file_retrieval",
    "object_meshing",
    "texture_information_extraction",
    "asset_material_retrieval",
    "asset_mesh_retrieval",
    "scene_object_information_extraction",
]


def scale_object_manifest() -> ActionManifest:
    return ActionManifest(
        classname="scale_object",
        description="Scale an object",
        inputs=[
            ManifestInput("scale_factor", DataFormat.POINT, "scale factor"),
            ManifestInput("scaled_obj_name", DataFormat.STRING_INFORMATION, "scaled object name"),
        ],
        limitation="Scales about the object origin.",
        run="scale_object",
    )


# --- validate_manifest ---------------------------------------------------------


def test_validate_accepts_action_doc_shape():
    doc = {
        "name": "scale_object",
        "description": "Scale an object",
        "parameters": {
            "scale_factor": {"type": "tuple", "description": "scale factor"},
            "scaled_obj_name": {"type": "str", "description": "scaled object name"},
        },
    }
    m = validate_manifest(doc)
    assert m.classname == "scale_object"
    assert len(m.inputs) == 2
    assert m.inputs[0].format is DataFormat.POINT
    assert m.inputs[1].format is DataFormat.STRING_INFORMATION


def test_validate_missing_description():
    with pytest.raises(MissingField) as ei:
        validate_manifest({"classname": "foo", "inputs": []})
    assert ei.value.field == "description"


def test_validate_unknown_format():
    doc = {
        "classname": "foo",
        "description": "does things",
        "inputs": [{"name": "x", "format": "Blob"}],
    }
    with pytest.raises(UnknownFormat) as ei:
        validate_manifest(doc)
    assert ei.value.label == "Blob"


def test_validate_rejects_unknown_fields():
    with pytest.raises(UnknownField):
        validate_manifest({"classname": "foo", "description": "ok", "bogus": 1})


def test_validate_bad_classname():
    with pytest.raises(BadClassname):
        validate_manifest({"classname": "Foo-Bar", "description": "ok"})


def test_full_schema_roundtrip():
    m = scale_object_manifest()
    again = validate_manifest(manifest_to_document(m))
    assert again.classname == m.classname
    assert again.description == m.description
    assert again.inputs == m.inputs
    assert again.limitation == m.limitation
    assert again.run == m.run


def test_json_roundtrip():
    m = scale_object_manifest()
    again = load_manifest(dump_manifest(m))
    assert again.classname == m.classname
    assert again.inputs == m.inputs


# --- action_doc ----------------------------------------------------------------


def test_action_doc_matches_executor_shape():
    doc = action_doc(scale_object_manifest())
    assert set(doc.keys()) == {"name", "description", "parameters"}
    assert doc["name"] == "scale_object"
    assert doc["description"] == "Scale an object"
    assert doc["parameters"]["scale_factor"]["type"] == "tuple"
    assert doc["parameters"]["scale_factor"]["description"] == "scale factor"
    assert doc["parameters"]["scaled_obj_name"]["type"] == "str"


def test_action_doc_empty_parameters():
    m = ActionManifest(classname="noop", description="Do nothing")
    assert action_doc(m)["parameters"] == {}


def test_action_doc_roundtrip_reproduces_manifest():
    m = scale_object_manifest()
    again = validate_manifest(action_doc(m))
    assert again.classname == m.classname
    assert again.description == m.description
    assert again.inputs == m.inputs


# --- builtins ------------------------------------------------------------------


def test_builtin_count_is_14():
    assert len(builtin_conversions()) == 14


def test_builtin_names_exact():
    names = [m.classname for m in builtin_conversions()]
    assert sorted(names) == sorted(EXPECTED_BUILTINS)


def test_point_to_face_signature():
    m = {m.classname: m for m in builtin_conversions()}["point_to_face_conversion"]
    assert m.input_formats() == {DataFormat.POINT}
    assert m.output is DataFormat.SURFACE


def test_asset_placement_signature():
    m = {m.classname: m for m in builtin_conversions()}["asset_placement"]
    assert m.input_formats() == {DataFormat.COMPLEX_GEOMETRY, DataFormat.SCENE_LAYOUT}
    assert m.output is DataFormat.SCENE_LAYOUT


def test_builtins_all_valid_documents():
    for m in builtin_conversions():
        again = validate_manifest(json.loads(dump_manifest(m)))
        assert again.classname == m.classname
        assert again.output == m.output


# --- registry ------------------------------------------------------------------


def make_registry() -> ActionRegistry:
    reg = ActionRegistry()
    for m in builtin_conversions():
        reg.register(m, lambda **kw: None)
    return reg


def test_registry_lookup_total():
    reg = make_registry()
    for name in EXPECTED_BUILTINS:
        assert reg.manifest(name).classname == name
        assert callable(reg.implementation(name))


def test_registry_unknown_action_fails_loudly():
    reg = make_registry()
    with pytest.raises(UnknownAction):
        reg.manifest("frobnicate")


def test_registry_duplicate_rejected():
    reg = make_registry()
    with pytest.raises(DuplicateClassname):
        reg.register(builtin_conversions()[0], lambda **kw: None)


def test_format_serialized_labels():
    assert DataFormat.SCENE_LAYOUT.value == "SceneLayout"
    assert DataFormat.GEOGRAPHIC_INFORMATION_DATA.value == "GeographicInformationData"
    assert len(DataFormat) == 14
