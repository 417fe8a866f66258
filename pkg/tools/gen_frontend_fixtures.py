"""Capture real service responses as frontend test fixtures.

Creates a small scene through the HTTP API, applies the canonical
"raise all buildings by 10%" edit, and stores the raw GLB bytes and
report JSON under frontend/tests/fixtures/.

Run from the repository root:  python3 tools/gen_frontend_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi.testclient import TestClient

from cityforge.engine import Engine
from cityforge.service import create_app

FIXTURES = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"

SMALL_OSM = """<?xml version="1.0" encoding="UTF-8"?>
<osm version="0.6">
  <node id="1" lat="0.0" lon="0.0"/>
  <node id="2" lat="0.0" lon="0.0018"/>
  <node id="3" lat="0.0018" lon="0.0018"/>
  <node id="4" lat="0.0018" lon="0.0"/>
  <node id="5" lat="0.0004" lon="0.0004"/>
  <node id="6" lat="0.0004" lon="0.0007"/>
  <node id="7" lat="0.0007" lon="0.0007"/>
  <node id="8" lat="0.0007" lon="0.0004"/>
  <way id="11"><nd ref="1"/><nd ref="2"/><tag k="highway" v="residential"/></way>
  <way id="12"><nd ref="2"/><nd ref="3"/><tag k="highway" v="residential"/></way>
  <way id="13"><nd ref="3"/><nd ref="4"/><tag k="highway" v="residential"/></way>
  <way id="14"><nd ref="4"/><nd ref="1"/><tag k="highway" v="residential"/></way>
  <way id="20">
    <nd ref="5"/><nd ref="6"/><nd ref="7"/><nd ref="8"/><nd ref="5"/>
    <tag k="building" v="yes"/><tag k="building:levels" v="4"/>
  </way>
</osm>
"""


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    app = create_app(Engine(seed=0))
    with TestClient(app) as client:
        created = client.post(
            "/api/v1/scenes",
            files={"osm": ("small.osm", SMALL_OSM.encode(), "application/xml")},
            data={"seed": "0"},
        )
        created.raise_for_status()
        scene_id = created.json()["scene_id"]

        model0 = client.get(f"/api/v1/scenes/{scene_id}/model.glb?rev=0")
        (FIXTURES / "scene_rev0.glb").write_bytes(model0.content)
        report0 = client.get(f"/api/v1/scenes/{scene_id}/report")
        (FIXTURES / "report_rev0.json").write_text(json.dumps(report0.json(), indent=2))

        edit = client.post(
            f"/api/v1/scenes/{scene_id}/edits",
            json={"instruction": "raise all buildings by 10%"},
        )
        edit.raise_for_status()
        payload = edit.json()
        assert payload["applied"] is True, payload
        (FIXTURES / "edit_response.json").write_text(json.dumps(payload, indent=2))

        model1 = client.get(f"/api/v1/scenes/{scene_id}/model.glb?rev=1")
        (FIXTURES / "scene_rev1.glb").write_bytes(model1.content)
        report1 = client.get(f"/api/v1/scenes/{scene_id}/report")
        (FIXTURES / "report_rev1.json").write_text(json.dumps(report1.json(), indent=2))

        bad = client.post(
            f"/api/v1/scenes/{scene_id}/edits", json={"instruction": "remove bldg_9999"}
        )
        (FIXTURES / "edit_rejected.json").write_text(json.dumps(bad.json(), indent=2))
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
