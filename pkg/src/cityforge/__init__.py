"""cityforge: procedural city generation from OSM, semantic maps and text.

The package is organized around a typed action protocol (``protocol``), a
four-stage agent loop (``agents``), geometry and layout synthesis
(``geometry``, ``layout``), multimodal ingest (``osm``, ``raster``), an
asset library (``assets``), scene assembly and export (``scene``), a metric
harness (``metrics``), and an HTTP service plus CLI (``service``, ``cli``).

Typical use::

    from cityforge import Engine, bundled_data, export_gltf

    engine = Engine(seed=0)
    session, result = engine.create_scene(osm=bundled_data("sample.osm"))
    open("city.glb", "wb").write(export_gltf(session.state).data)
"""

from .agents import (
    ActionFailed,
    ActionStep,
    EvalReport,
    GuidanceDoc,
    Instruction,
    MessagePool,
    Session,
    Uninterpretable,
    Unsatisfiable,
    Workflow,
    annotate,
    evaluate,
    next_action,
    parse_instruction,
    plan_workflow,
    rasterize_scene,
    shortest_chain,
)
from .assets import AssetLibrary, AssetRecord, default_library, embed_text
from .engine import Engine, bundled_data
from .geometry import (
    Mesh,
    Point2,
    Polygon,
    Polyline,
    extrude,
    inset,
    mesh_volume,
    obb_split,
    signed_area,
    sweep_profile,
    triangulate,
)
from .layout import (
    CityLayout,
    Footprint,
    RoadGraph,
    assemble_layout,
    build_road_graph,
    extract_blocks,
    generate_footprints,
    subdivide_block,
)
from .metrics import RunLog, er_at_1, run_corpus, sr_at_1
from .osm import LayerSet, OsmDocument, classify_layers, parse_osm, project
from .protocol import (
    ActionManifest,
    ActionRegistry,
    DataFormat,
    action_doc,
    builtin_conversions,
    validate_manifest,
)
from .raster import (
    ClassGrid,
    HeightGrid,
    Palette,
    load_height_map,
    load_semantic_map,
    quantize_satellite,
    sample_height,
    vectorize_regions,
)
from .scene import SceneObject, SceneState, export_gltf, export_obj, instantiate

__version__ = "0.1.0"
