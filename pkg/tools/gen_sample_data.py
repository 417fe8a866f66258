"""Regenerate the bundled sample inputs under src/cityforge/data/.

Run from the repository root:  python3 tools/gen_sample_data.py
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

DATA = Path(__file__).resolve().parent.parent / "src" / "cityforge" / "data"

# 1 km x 1 km: 0.009 degrees at the equator is ~1002 m
DEG = 0.00225  # 250 m grid spacing in degrees
GRID_N = 5  # 5 grid lines -> 4x4 cells


def osm_sample() -> str:
    nodes = []
    ways = []
    node_id = 0
    way_id = 1000

    def add_node(lat, lon):
        nonlocal node_id
        node_id += 1
        nodes.append(f'  <node id="{node_id}" lat="{lat:.7f}" lon="{lon:.7f}"/>')
        return node_id

    def add_way(refs, tags):
        nonlocal way_id
        way_id += 1
        nd = "".join(f'<nd ref="{r}"/>' for r in refs)
        tg = "".join(f'<tag k="{k}" v="{v}"/>' for k, v in tags.items())
        ways.append(f'  <way id="{way_id}">{nd}{tg}</way>')
        return way_id

    # road grid: horizontal and vertical residential streets, one primary
    grid_ids = {}
    for i in range(GRID_N):
        for j in range(GRID_N):
            grid_ids[(i, j)] = add_node(i * DEG, j * DEG)
    for i in range(GRID_N):
        refs = [grid_ids[(i, j)] for j in range(GRID_N)]
        add_way(refs, {"highway": "primary" if i == 2 else "residential", "name": f"ew_{i}"})
    for j in range(GRID_N):
        refs = [grid_ids[(i, j)] for i in range(GRID_N)]
        add_way(refs, {"highway": "residential", "name": f"ns_{j}"})

    def rect(lat0, lon0, dlat, dlon):
        a = add_node(lat0, lon0)
        b = add_node(lat0, lon0 + dlon)
        c = add_node(lat0 + dlat, lon0 + dlon)
        d = add_node(lat0 + dlat, lon0)
        return [a, b, c, d, a]

    # declared buildings with explicit levels, placed inside grid cells
    declared = [
        (0.00030, 0.00030, 4),
        (0.00030, 0.00260, 6),
        (0.00260, 0.00030, 3),
        (0.00480, 0.00480, 8),
        (0.00480, 0.00030, 5),
        (0.00030, 0.00480, 10),
        (0.00710, 0.00710, 4),
        (0.00710, 0.00260, 7),
        (0.00260, 0.00710, 5),
        (0.00710, 0.00030, 3),
        (0.00030, 0.00710, 6),
        (0.00480, 0.00710, 4),
    ]
    bsize_lat = 0.00022  # ~24 m
    bsize_lon = 0.00030  # ~33 m
    for lat0, lon0, levels in declared:
        add_way(rect(lat0, lon0, bsize_lat, bsize_lon), {"building": "yes", "building:levels": str(levels)})

    # one explicit-height building
    add_way(rect(0.00260, 0.00480, bsize_lat, bsize_lon), {"building": "yes", "height": "21"})

    # a pond in cell (3, 1)
    add_way(rect(0.00700, 0.00300, 0.00060, 0.00080), {"natural": "water", "name": "pond"})
    # a park in cell (1, 3) -> trees scatter here
    add_way(rect(0.00300, 0.00700, 0.00055, 0.00075), {"landuse": "grass", "name": "park"})
    # a commercial zone covering cell (2..3, 2..3)
    add_way(rect(0.00460, 0.00460, 0.00180, 0.00180), {"landuse": "commercial"})
    # something deliberately unclassified
    n1 = add_node(-0.0002, -0.0002)
    n2 = add_node(-0.0002, 0.0004)
    add_way([n1, n2], {"railway": "rail"})

    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n<osm version="0.6" generator="cityforge-sample">\n'
        + "\n".join(nodes)
        + "\n"
        + "\n".join(ways)
        + "\n</osm>\n"
    )


def semantic_sample() -> bytes:
    import sys

    sys.path.insert(0, str(DATA.parent.parent))
    from cityforge.raster import ClassGrid, Palette, grid_to_image

    pal = Palette.default()
    g = np.full((256, 256), pal.index_of("ground"), dtype=np.int16)
    road = pal.index_of("road")
    bldg = pal.index_of("building")
    water = pal.index_of("water")
    green = pal.index_of("green")
    # road cross: 3-px bands (12 m at 4 m/px)
    g[126:129, :] = road
    g[:, 126:129] = road
    # building quarters with margins
    g[24:112, 24:112] = bldg
    g[24:104, 144:232] = bldg
    g[144:232, 32:112] = bldg
    # water pond and a park in the last quadrant
    g[150:200, 150:190] = water
    g[204:244, 196:240] = green
    return grid_to_image(ClassGrid(g, 4.0, pal))


CORPUS = [
    "set-style modern",
    "set-style traditional",
    "set-style night",
    "set-style modern glass",
    "set-style traditional brick",
    "set-style night lights",
    "set-style modern downtown",
    "set-style traditional old town",
    "set-weather clear",
    "set-weather overcast",
    "set-weather rain",
    "set-weather fog",
    "set-weather snow",
    "set-weather clear skies",
    "set-weather light rain",
    "set-weather heavy fog",
    "set-weather winter snow",
    "recolor bldg_0003 to red",
    "recolor bldg_0004 to gray",
    "recolor bldg_0005 to #8a6f4d",
    "recolor buildings to white",
    "recolor bldg_0006 to brown",
    "recolor bldg_0007 to #334455",
    "recolor roads to black",
    "recolor bldg_0008 to orange",
    "scale bldg_0002 by 4%",
    "scale bldg_0003 by 3%",
    "scale bldg_0004 by 2%",
    "scale bldg_0005 by 5%",
    "scale bldg_0010 by 1%",
    "scale bldg_0011 by 4%",
    "scale bldg_0012 by 2%",
    "raise bldg_0002 by 10%",
    "raise bldg_0003 by 8%",
    "raise bldg_0004 by 12%",
    "raise buildings by 5%",
    "raise bldg_0005 to 27",
    "raise bldg_0006 to 36",
    "remove bldg_0009",
    "remove bldg_0010",
    "remove tree_0000",
    "remove tree_0001",
    "place tree",
    "place streetlamp",
    "place oak tree",
    "place tall tree",
    "set-style night city",
    "set-weather morning fog",
    "recolor bldg_0011 to yellow",
    "raise bldg_0007 by 6%",
]


GUIDANCE = {
    "annotator": (
        "Summarize the registered actions into consistent concepts, then tag every\n"
        "action with each concept its description mentions. Publish the labels to\n"
        "the common message pool."
    ),
    "planner": (
        "Translate the user's intent into an ordered workflow of registered actions.\n"
        "When a step's input format is missing, close the gap with the shortest\n"
        "conversion chain; break ties by alphabetical action name."
    ),
    "executor": (
        "Bind each action argument from the instruction parameters first, the\n"
        "message pool second, and the action document defaults last. Record every\n"
        "execution in the trace."
    ),
    "evaluator": (
        "Render the scene top-down in semantic colors and compare per-class\n"
        "coverage with the reference layout. Reject scenes with overlapping\n"
        "buildings or objects outside the scene bounds."
    ),
}


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "sample.osm").write_text(osm_sample(), encoding="utf-8")
    (DATA / "semantic_256.png").write_bytes(semantic_sample())
    (DATA / "corpus.txt").write_text("\n".join(CORPUS) + "\n", encoding="utf-8")

    import sys

    sys.path.insert(0, str(DATA.parent.parent))
    from cityforge.raster import Palette
    from cityforge.scene import STYLE_PRESETS, WEATHER_PRESETS

    (DATA / "palette.json").write_text(Palette.default().to_json() + "\n")
    (DATA / "presets.json").write_text(
        json.dumps({"styles": STYLE_PRESETS, "weather": WEATHER_PRESETS}, indent=2, sort_keys=True)
        + "\n"
    )
    gdir = DATA / "guidance"
    gdir.mkdir(exist_ok=True)
    for name, text in GUIDANCE.items():
        (gdir / f"{name}.txt").write_text(text + "\n", encoding="utf-8")
    print(f"wrote sample data to {DATA}")


if __name__ == "__main__":
    main()
