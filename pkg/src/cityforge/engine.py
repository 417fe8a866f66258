"""Engine facade: wires ingest, registry, sessions and exports together.

The engine owns the long-lived pieces (action registry, asset library,
palette, guidance docs) and mints sessions. A session bootstrapped from
input files exposes them to the planner as typed values: an OSM file as a
string reference the retrieval action resolves, a semantic map as a
labeled point cloud, a height field as terrain for layout assembly.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .actions import build_registry
from .agents import GuidanceDoc, RemoteLanguageClient, Session
from .assets import AssetLibrary, default_library
from .osm import parse_osm
from .protocol import DataFormat
from .raster import (
    HeightGrid,
    Palette,
    SemanticPointCloud,
    load_height_map,
    load_semantic_map,
)

GENERATE_INSTRUCTION = "generate city from inputs"

_DEFAULT_GUIDANCE = {
    "annotator": "Label every action with the concepts its description mentions.",
    "planner": "Close format gaps with the shortest conversion chain; prefer "
    "alphabetically earlier actions on ties.",
    "executor": "Bind arguments from the instruction, then the message pool, "
    "then the action document defaults.",
    "evaluator": "Render the scene top-down, compare class coverage against the "
    "reference, and reject scenes with overlapping buildings or "
    "out-of-bounds objects.",
}


def load_guidance(directory: str | Path | None) -> dict[str, GuidanceDoc]:
    docs = {name: GuidanceDoc(text) for name, text in _DEFAULT_GUIDANCE.items()}
    if directory:
        for path in sorted(Path(directory).glob("*.txt")):
            text = path.read_text(encoding="utf-8").strip()
            if text:
                docs[path.stem] = GuidanceDoc(text)
    return docs


def bundled_data(name: str) -> bytes:
    """Read a file bundled with the package (sample inputs, corpus)."""
    return resources.files("cityforge").joinpath("data").joinpath(name).read_bytes()


class Engine:
    def __init__(
        self,
        seed: int = 0,
        palette: Palette | None = None,
        style: str = "modern",
        weather: str = "clear",
        guidance_dir: str | Path | None = None,
        library: AssetLibrary | None = None,
        model_endpoint: str | None = None,
    ):
        self.seed = seed
        self.palette = palette or Palette.default()
        self.style = style
        self.weather = weather
        self.guidance = load_guidance(guidance_dir)
        self.registry = build_registry()
        self.library = library if library is not None else default_library(seed)
        self.interpreter = RemoteLanguageClient(model_endpoint) if model_endpoint else None

    def new_session(
        self,
        osm: bytes | None = None,
        semantic: bytes | None = None,
        height: bytes | None = None,
        seed: int | None = None,
        style: str | None = None,
        weather: str | None = None,
        height_cell_size: float = 4.0,
        semantic_cell_size: float = 4.0,
    ) -> Session:
        """Session bootstrapped from raw input files."""
        inputs: dict = {}
        values: dict = {}
        dead: set[str] = set()
        reference = None
        if osm is not None:
            parse_osm(osm)  # reject malformed input before any planning
            inputs["osm"] = osm
            values[DataFormat.STRING_INFORMATION] = "<osm input>"
        else:
            dead.add("osm_file_retrieval")
        if semantic is not None:
            grid = load_semantic_map(semantic, self.palette, semantic_cell_size)
            inputs["semantic_grid"] = grid
            values[DataFormat.POINT] = SemanticPointCloud(grid)
            reference = grid
        if height is not None:
            inputs["height_grid"] = load_height_map(height, height_cell_size)
        session = Session(
            self.registry,
            self.library,
            seed=self.seed if seed is None else seed,
            palette=self.palette,
            style=style or self.style,
            weather=weather or self.weather,
            guidance=self.guidance,
            reference=reference,
            inputs=inputs,
            dead_actions=dead,
            interpreter=self.interpreter,
        )
        session.values.update(values)
        return session

    def create_scene(self, osm=None, semantic=None, height=None, seed=None, style=None, weather=None):
        """Run the full generation pipeline; returns (session, result)."""
        if osm is None and semantic is None:
            raise ValueError("need at least one of osm or semantic inputs")
        session = self.new_session(osm, semantic, height, seed, style, weather)
        result = session.run_instruction(GENERATE_INSTRUCTION)
        return session, result
