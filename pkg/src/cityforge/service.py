"""HTTP service for generation, refinement edits and scene retrieval.

REST over HTTP/1.1 under /api/v1: POST /scenes (multipart inputs),
POST /scenes/{id}/edits, GET /scenes/{id}/model.glb?rev=, and
GET /scenes/{id}/report. Sessions are kept in memory (optionally mirrored
to a directory); revision history is append-only and immutable, edits to
one scene never touch another, and per-scene edits are serialized by an
exclusive lock while reads serve stored snapshots.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Form, HTTPException, Request, Response, UploadFile
from fastapi.responses import HTMLResponse, JSONResponse

from .agents import EvalReport, Session, Uninterpretable, Unsatisfiable
from .engine import Engine
from .metrics import format_rates
from .osm import OsmError
from .raster import RasterError
from .scene import export_gltf


@dataclass
class Revision:
    index: int
    instruction: str
    report: dict
    glb: bytes
    min_iou: float | None = None


@dataclass
class SceneRecord:
    scene_id: str
    session: Session
    revisions: list[Revision] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    def __init__(self, state_dir: str | Path | None = None):
        self._scenes: dict[str, SceneRecord] = {}
        self._lock = threading.Lock()
        self._counter = 0
        self.state_dir = Path(state_dir) if state_dir else None

    def new_id(self) -> str:
        with self._lock:
            scene_id = f"scene_{self._counter:04d}"
            self._counter += 1
            return scene_id

    def put(self, record: SceneRecord):
        with self._lock:
            self._scenes[record.scene_id] = record

    def get(self, scene_id: str) -> SceneRecord:
        with self._lock:
            rec = self._scenes.get(scene_id)
        if rec is None:
            raise HTTPException(status_code=404, detail=f"unknown scene '{scene_id}'")
        return rec

    def persist(self, record: SceneRecord, revision: Revision):
        if self.state_dir is None:
            return
        scene_dir = self.state_dir / record.scene_id
        scene_dir.mkdir(parents=True, exist_ok=True)
        (scene_dir / f"rev_{revision.index:03d}.glb").write_bytes(revision.glb)
        (scene_dir / f"rev_{revision.index:03d}.report.json").write_text(
            json.dumps({"instruction": revision.instruction, "report": revision.report}, indent=2)
        )


def _commit_revision(store: SessionStore, record: SceneRecord, instruction: str, report: EvalReport):
    bundle = export_gltf(record.session.state)
    rev = Revision(
        index=len(record.revisions),
        instruction=instruction,
        report=report.to_json(),
        glb=bundle.data,
        min_iou=report.min_iou(),
    )
    record.revisions.append(rev)
    store.persist(record, rev)
    return rev


def _edit_acceptable(record: SceneRecord, report: EvalReport) -> bool:
    """An edit commits unless it introduces violations or degrades IoU."""
    if report.violations:
        return False
    mi = report.min_iou()
    prev = record.revisions[-1].min_iou if record.revisions else None
    if mi is None or prev is None:
        return True
    return mi >= prev - 1e-12


def create_app(engine: Engine | None = None, state_dir: str | Path | None = None) -> FastAPI:
    engine = engine or Engine()
    store = SessionStore(state_dir)
    app = FastAPI(title="cityforge", version="0.1.0")
    app.state.engine = engine
    app.state.store = store

    @app.post("/api/v1/scenes", status_code=201)
    async def create_scene(
        osm: UploadFile | None = None,
        semantic: UploadFile | None = None,
        height: UploadFile | None = None,
        seed: int = Form(default=None),
        style: str = Form(default=None),
        weather: str = Form(default=None),
    ):
        osm_bytes = await osm.read() if osm else None
        semantic_bytes = await semantic.read() if semantic else None
        height_bytes = await height.read() if height else None
        if not osm_bytes and not semantic_bytes:
            raise HTTPException(status_code=400, detail="need an osm or semantic input file")
        try:
            session, result = engine.create_scene(
                osm=osm_bytes,
                semantic=semantic_bytes,
                height=height_bytes,
                seed=seed,
                style=style,
                weather=weather,
            )
        except (OsmError, RasterError, ValueError) as e:
            raise HTTPException(status_code=400, detail=str(e)) from e
        except (Unsatisfiable, Uninterpretable) as e:
            raise HTTPException(status_code=422, detail=str(e)) from e
        record = SceneRecord(store.new_id(), session)
        _commit_revision(store, record, result.instruction, result.report)
        store.put(record)
        return {
            "scene_id": record.scene_id,
            "revision": 0,
            "report": record.revisions[0].report,
        }

    @app.post("/api/v1/scenes/{scene_id}/edits")
    async def apply_edit(scene_id: str, request: Request):
        record = store.get(scene_id)
        body = await request.json()
        instruction = (body or {}).get("instruction", "")
        with record.lock:
            fork = record.session.fork()
            try:
                result = fork.run_instruction(instruction)
            except Uninterpretable as e:
                raise HTTPException(status_code=422, detail=str(e)) from e
            except Unsatisfiable as e:
                raise HTTPException(status_code=422, detail=str(e)) from e
            executed_all = result.failure is None and result.executed > 0
            if executed_all and _edit_acceptable(record, result.report):
                for key in ("proposed", "executed", "correct"):
                    fork.counters[key] += record.session.counters[key]
                record.session = fork
                rev = _commit_revision(store, record, instruction, result.report)
                return {"scene_id": scene_id, "revision": rev.index, "applied": True,
                        "report": rev.report}
            for key, value in (
                ("proposed", result.proposed),
                ("executed", result.executed),
                ("correct", result.correct),
            ):
                record.session.counters[key] += value
            return {
                "scene_id": scene_id,
                "revision": len(record.revisions) - 1,
                "applied": False,
                "report": result.report.to_json(),
            }

    @app.get("/api/v1/scenes/{scene_id}/model.glb")
    async def get_model(scene_id: str, rev: int | None = None):
        record = store.get(scene_id)
        revisions = record.revisions
        index = len(revisions) - 1 if rev is None else rev
        if not (0 <= index < len(revisions)):
            raise HTTPException(status_code=404, detail=f"unknown revision {rev}")
        return Response(
            content=revisions[index].glb,
            media_type="model/gltf-binary",
            headers={"X-Revision": str(index)},
        )

    @app.get("/api/v1/scenes/{scene_id}/report")
    async def get_report(scene_id: str):
        record = store.get(scene_id)
        session = record.session
        counters = session.counters
        traces = [
            {"seq": e.seq, "producer": e.producer, **e.payload}
            for e in session.pool.entries("trace")
        ]
        failures = [
            {"seq": e.seq, "producer": e.producer, **e.payload}
            for e in session.pool.entries("failures")
        ]
        body = {
            "scene_id": scene_id,
            "object_count": len(session.state.objects),
            "revisions": [
                {"revision": r.index, "instruction": r.instruction, "report": r.report}
                for r in record.revisions
            ],
            "traces": traces,
            "failures": failures,
            "counters": dict(counters),
        }
        if counters["proposed"] > 0:
            body["er_at_1"] = counters["executed"] / counters["proposed"]
        if counters["executed"] > 0:
            body["sr_at_1"] = counters["correct"] / counters["executed"]
        return JSONResponse(body)

    @app.get("/", response_class=HTMLResponse)
    async def index():
        return (
            "<html><body><h1>cityforge</h1>"
            "<p>POST /api/v1/scenes, POST /api/v1/scenes/{id}/edits, "
            "GET /api/v1/scenes/{id}/model.glb, GET /api/v1/scenes/{id}/report</p>"
            "</body></html>"
        )

    return app
