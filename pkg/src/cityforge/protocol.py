"""Action protocol: data formats, structured action manifests, registry.

Every executable action is described by a manifest carrying its classname
(the registry index), a description, typed inputs, a limitation note and
the run symbol. The format taxonomy is a closed set of 14 labels; the
builtin conversion registry provides the 14 interfaces that bridge them.
Manifests serialize to JSON both in the full file schema and in the compact
action-doc shape used by the executor.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum


class DataFormat(str, Enum):
    SCENE_LAYOUT = "SceneLayout"
    NOISE_FUNCTION = "NoiseFunction"
    IMAGE = "Image"
    TEXTURE_MATERIAL = "TextureMaterial"
    GEOGRAPHIC_INFORMATION_DATA = "GeographicInformationData"
    POINT = "Point"
    BOOLEAN_VALUE = "BooleanValue"
    COMPLEX_GEOMETRY = "ComplexGeometry"
    COLOR = "Color"
    BASIC_GEOMETRY = "BasicGeometry"
    STRING_INFORMATION = "StringInformation"
    SURFACE = "Surface"
    LINE = "Line"
    RANDOM_NUMBER = "RandomNumber"


# bijective format <-> parameter type label used in action docs
TYPE_LABELS: dict[DataFormat, str] = {
    DataFormat.POINT: "tuple",
    DataFormat.STRING_INFORMATION: "str",
    DataFormat.BOOLEAN_VALUE: "bool",
    DataFormat.RANDOM_NUMBER: "float",
    DataFormat.COLOR: "color",
    DataFormat.IMAGE: "image",
    DataFormat.SURFACE: "surface",
    DataFormat.LINE: "line",
    DataFormat.SCENE_LAYOUT: "scene_layout",
    DataFormat.NOISE_FUNCTION: "noise",
    DataFormat.TEXTURE_MATERIAL: "material",
    DataFormat.GEOGRAPHIC_INFORMATION_DATA: "geodata",
    DataFormat.COMPLEX_GEOMETRY: "mesh",
    DataFormat.BASIC_GEOMETRY: "geometry",
}
LABEL_TO_FORMAT = {v: k for k, v in TYPE_LABELS.items()}

_CLASSNAME_RE = re.compile(r"^[a-z][a-z0-9_]*$")


class ManifestError(ValueError):
    pass


class MissingField(ManifestError):
    def __init__(self, name: str):
        super().__init__(f"manifest is missing required field '{name}'")
        self.field = name


class UnknownFormat(ManifestError):
    def __init__(self, label: str):
        super().__init__(f"'{label}' is not one of the 14 data formats")
        self.label = label


class UnknownField(ManifestError):
    def __init__(self, name: str):
        super().__init__(f"manifest carries unknown field '{name}'")
        self.field = name


class BadClassname(ManifestError):
    def __init__(self, name: str):
        super().__init__(f"classname '{name}' must match [a-z][a-z0-9_]*")
        self.name = name


class DuplicateClassname(ManifestError):
    def __init__(self, name: str):
        super().__init__(f"classname '{name}' already registered")
        self.name = name


class UnknownAction(KeyError):
    def __init__(self, name: str):
        super().__init__(f"no action registered under '{name}'")
        self.name = name


@dataclass(frozen=True)
class ManifestInput:
    name: str
    format: DataFormat
    description: str = ""


@dataclass
class ActionManifest:
    classname: str
    description: str
    inputs: list[ManifestInput] = field(default_factory=list)
    limitation: str = ""
    run: str = ""
    output: DataFormat | None = None
    tags: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not _CLASSNAME_RE.match(self.classname or ""):
            raise BadClassname(self.classname)
        if not (self.description or "").strip():
            raise MissingField("description")
        if not self.run:
            self.run = self.classname

    def input_formats(self) -> set[DataFormat]:
        return {i.format for i in self.inputs}


def _parse_format(label) -> DataFormat:
    if isinstance(label, DataFormat):
        return label
    try:
        return DataFormat(label)
    except ValueError:
        pass
    if label in LABEL_TO_FORMAT:
        return LABEL_TO_FORMAT[label]
    raise UnknownFormat(str(label))


def validate_manifest(document: dict) -> ActionManifest:
    """Check a manifest document and return the typed manifest.

    Accepts both the full file schema {classname, description, inputs,
    limitation, run[, output]} and the compact action-doc shape
    {name, description, parameters}. Unknown fields are rejected.
    """
    if not isinstance(document, dict):
        raise ManifestError("manifest document must be an object")
    if "parameters" in document or ("name" in document and "classname" not in document):
        allowed = {"name", "description", "parameters", "output"}
        for key in document:
            if key not in allowed:
                raise UnknownField(key)
        if "name" not in document:
            raise MissingField("name")
        if "description" not in document or not str(document["description"]).strip():
            raise MissingField("description")
        inputs = []
        for pname, spec in (document.get("parameters") or {}).items():
            if "type" not in spec:
                raise MissingField(f"parameters.{pname}.type")
            inputs.append(
                ManifestInput(pname, _parse_format(spec["type"]), spec.get("description", ""))
            )
        output = _parse_format(document["output"]) if document.get("output") else None
        return ActionManifest(document["name"], document["description"], inputs, output=output)

    allowed = {"classname", "description", "inputs", "limitation", "run", "output", "tags"}
    for key in document:
        if key not in allowed:
            raise UnknownField(key)
    for required in ("classname", "description"):
        if required not in document or not str(document[required]).strip():
            raise MissingField(required)
    inputs = []
    for item in document.get("inputs", []):
        if "name" not in item:
            raise MissingField("inputs[].name")
        if "format" not in item:
            raise MissingField("inputs[].format")
        inputs.append(ManifestInput(item["name"], _parse_format(item["format"]), item.get("description", "")))
    output = _parse_format(document["output"]) if document.get("output") else None
    return ActionManifest(
        document["classname"],
        document["description"],
        inputs,
        document.get("limitation", ""),
        document.get("run", ""),
        output,
        list(document.get("tags", [])),
    )


def manifest_to_document(m: ActionManifest) -> dict:
    """Full manifest file schema (the inverse of validate_manifest)."""
    return {
        "classname": m.classname,
        "description": m.description,
        "inputs": [
            {"name": i.name, "format": i.format.value, "description": i.description}
            for i in m.inputs
        ],
        "limitation": m.limitation,
        "run": m.run,
        "output": m.output.value if m.output else None,
        "tags": list(m.tags),
    }


def action_doc(m: ActionManifest) -> dict:
    """Compact executor-facing document: name, description, parameters."""
    return {
        "name": m.classname,
        "description": m.description,
        "parameters": {
            i.name: {"type": TYPE_LABELS[i.format], "description": i.description}
            for i in m.inputs
        },
    }


def load_manifest(text: str | bytes) -> ActionManifest:
    return validate_manifest(json.loads(text))


def dump_manifest(m: ActionManifest) -> str:
    return json.dumps(manifest_to_document(m), indent=2, sort_keys=True)


class ActionRegistry:
    """Immutable-after-build mapping of classname to (manifest, callable).

    Actions registered as chainable form the edges of the conversion graph
    the planner searches; edit and goal actions register non-chainable so
    the search never routes through them.
    """

    def __init__(self):
        self._manifests: dict[str, ActionManifest] = {}
        self._impls: dict[str, object] = {}
        self._chainable: set[str] = set()

    def register(self, manifest: ActionManifest, implementation, chainable: bool = True) -> None:
        if manifest.classname in self._manifests:
            raise DuplicateClassname(manifest.classname)
        if implementation is None:
            raise ManifestError(f"action '{manifest.classname}' lacks an implementation")
        self._manifests[manifest.classname] = manifest
        self._impls[manifest.classname] = implementation
        if chainable and manifest.output is not None:
            self._chainable.add(manifest.classname)

    def conversions(self) -> list[ActionManifest]:
        """Manifests usable as conversion-graph edges, by classname."""
        return [self._manifests[n] for n in sorted(self._chainable)]

    def manifest(self, classname: str) -> ActionManifest:
        try:
            return self._manifests[classname]
        except KeyError:
            raise UnknownAction(classname) from None

    def implementation(self, classname: str):
        try:
            return self._impls[classname]
        except KeyError:
            raise UnknownAction(classname) from None

    def __contains__(self, classname: str) -> bool:
        return classname in self._manifests

    def classnames(self) -> list[str]:
        return list(self._manifests)

    def manifests(self) -> list[ActionManifest]:
        return list(self._manifests.values())

    def __len__(self):
        return len(self._manifests)


_F = DataFormat

# (classname, description, inputs, output, limitation)
_BUILTIN_SPECS = [
    (
        "point_to_face_conversion",
        "Converting points to faces.",
        [("points", _F.POINT, "labeled point set to trace")],
        _F.SURFACE,
        "Points must carry class labels on a uniform grid.",
    ),
    (
        "cube_generation",
        "Generating cubes.",
        [("size", _F.RANDOM_NUMBER, "edge length in meters")],
        _F.BASIC_GEOMETRY,
        "Axis-aligned cubes only.",
    ),
    (
        "point_generation",
        "Generating points.",
        [("count", _F.RANDOM_NUMBER, "number of points")],
        _F.POINT,
        "Points are sampled inside the active scene bounds.",
    ),
    (
        "line_generation",
        "Generating lines.",
        [("count", _F.RANDOM_NUMBER, "number of segments")],
        _F.LINE,
        "Segments are sampled inside the active scene bounds.",
    ),
    (
        "face_generation",
        "Generating faces.",
        [("count", _F.RANDOM_NUMBER, "number of faces")],
        _F.SURFACE,
        "Faces are convex and lie in the ground plane.",
    ),
    (
        "line_to_face_conversion",
        "Converting lines to faces.",
        [("lines", _F.LINE, "closed line loops")],
        _F.SURFACE,
        "Open chains are closed with a final segment.",
    ),
    (
        "asset_placement",
        "Placing assets within a scene or environment.",
        [
            ("asset", _F.COMPLEX_GEOMETRY, "mesh to place"),
            ("layout", _F.SCENE_LAYOUT, "scene receiving the asset"),
        ],
        _F.SCENE_LAYOUT,
        "Placement keeps assets inside the scene bounds.",
    ),
    (
        "point_to_line_conversion",
        "Converting points to lines.",
        [("points", _F.POINT, "ordered point chain")],
        _F.LINE,
        "Points are chained in their given order.",
    ),
    (
        "osm_file_retrieval",
        "Retrieving OpenStreetMap (OSM) files.",
        [("query", _F.STRING_INFORMATION, "path or identifier of the OSM file")],
        _F.GEOGRAPHIC_INFORMATION_DATA,
        "Reads OSM XML v0.6 documents only.",
    ),
    (
        "object_meshing",
        "Meshing objects.",
        [("faces", _F.SURFACE, "footprint faces to mesh")],
        _F.COMPLEX_GEOMETRY,
        "Faces are extruded along the vertical axis.",
    ),
    (
        "texture_information_extraction",
        "Extracting texture information.",
        [("material", _F.TEXTURE_MATERIAL, "material to describe")],
        _F.STRING_INFORMATION,
        "Reports base color and roughness only.",
    ),
    (
        "asset_material_retrieval",
        "Retrieving material data for assets.",
        [("query", _F.STRING_INFORMATION, "material description")],
        _F.TEXTURE_MATERIAL,
        "Retrieval is text-based over the library descriptions.",
    ),
    (
        "asset_mesh_retrieval",
        "Retrieving mesh data for assets.",
        [("query", _F.STRING_INFORMATION, "asset description")],
        _F.COMPLEX_GEOMETRY,
        "Retrieval is text-based over the library descriptions.",
    ),
    (
        "scene_object_information_extraction",
        "Extracting scene object information.",
        [("layout", _F.SCENE_LAYOUT, "scene to inspect")],
        _F.STRING_INFORMATION,
        "Reports object names, classes and bounds.",
    ),
]


def builtin_conversions() -> list[ActionManifest]:
    """The 14 conversion interfaces with their format signatures."""
    return [
        ActionManifest(
            classname=name,
            description=desc,
            inputs=[ManifestInput(n, f, d) for n, f, d in inputs],
            limitation=limitation,
            run=name,
            output=output,
        )
        for name, desc, inputs, output, limitation in _BUILTIN_SPECS
    ]
