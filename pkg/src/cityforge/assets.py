"""Asset library: procedural generators plus embedding-based text retrieval.

Assets carry an auto-composed description embedded as a normalized
768-dimensional vector. Retrieval ranks the library by cosine similarity,
keeps the ten closest records and picks one uniformly with the caller's
seed. The default embedding client hashes character 3-grams, so tests and
offline runs never need model weights; a remote client can plug in through
the same interface.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import Mesh, Polygon, extrude
from .rng import subsystem_seed

EMBED_DIM = 768
TOP_K = 10


class AssetError(ValueError):
    pass


class EmptyText(AssetError):
    pass


class EmptyLibrary(AssetError):
    pass


class BadParams(AssetError):
    pass


@dataclass
class AssetRecord:
    id: str
    description: str
    mesh: Mesh
    material: tuple[tuple[float, float, float], float]  # (rgb in 0..1, roughness)
    embedding: np.ndarray  # (768,) unit vector


class HashingEmbeddingClient:
    """Character 3-gram feature hashing into 768 buckets, L2-normalized."""

    dim = EMBED_DIM

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise EmptyText("cannot embed empty text")
        t = text.lower()
        grams = [t[i : i + 3] for i in range(len(t) - 2)] or [t]
        vec = np.zeros(self.dim, dtype=np.float64)
        for g in grams:
            digest = hashlib.blake2b(g.encode("utf-8"), digest_size=8).digest()
            bucket = int.from_bytes(digest, "little") % self.dim
            vec[bucket] += 1.0
        return vec / np.linalg.norm(vec)


_DEFAULT_CLIENT = HashingEmbeddingClient()


def embed_text(text: str, client=None) -> np.ndarray:
    return (client or _DEFAULT_CLIENT).embed(text)


# ---------------------------------------------------------------------------
# procedural asset meshes


def _disk_fan(center_idx: int, ring: range, flip: bool) -> list[tuple[int, int, int]]:
    tris = []
    ring = list(ring)
    n = len(ring)
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        tris.append((center_idx, b, a) if flip else (center_idx, a, b))
    return tris


def _cylinder(radius: float, height: float, segments: int = 24, z0: float = 0.0) -> tuple[np.ndarray, list]:
    ang = np.linspace(0, 2 * math.pi, segments, endpoint=False)
    ring = np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])
    bottom = np.column_stack([ring, np.full(segments, z0)])
    top = np.column_stack([ring, np.full(segments, z0 + height)])
    verts = np.vstack([bottom, top, [[0, 0, z0]], [[0, 0, z0 + height]]])
    cb, ct = 2 * segments, 2 * segments + 1
    tris = _disk_fan(cb, range(segments), flip=True)
    tris += _disk_fan(ct, range(segments, 2 * segments), flip=False)
    for i in range(segments):
        j = (i + 1) % segments
        tris.append((i, j, segments + j))
        tris.append((i, segments + j, segments + i))
    return verts, tris


def _cone(radius: float, height: float, segments: int = 32, z0: float = 0.0) -> tuple[np.ndarray, list]:
    ang = np.linspace(0, 2 * math.pi, segments, endpoint=False)
    ring = np.column_stack([radius * np.cos(ang), radius * np.sin(ang), np.full(segments, z0)])
    verts = np.vstack([ring, [[0, 0, z0]], [[0, 0, z0 + height]]])
    base_c, apex = segments, segments + 1
    tris = _disk_fan(base_c, range(segments), flip=True)
    for i in range(segments):
        j = (i + 1) % segments
        tris.append((i, j, apex))
    return verts, tris


def _merge_parts(parts: list[tuple[np.ndarray, list]], semantic_class: str) -> Mesh:
    positions = []
    triangles = []
    offset = 0
    for verts, tris in parts:
        positions.append(verts)
        triangles.extend((a + offset, b + offset, c + offset) for a, b, c in tris)
        offset += len(verts)
    pos = np.vstack(positions)
    tri = np.array(triangles, dtype=np.int32)
    from .geometry import _vertex_normals

    return Mesh(pos, tri, _vertex_normals(pos, tri), semantic_class)


def _building_mesh(params: dict) -> Mesh:
    w = float(params.get("width", 10.0))
    d = float(params.get("depth", 10.0))
    h = float(params.get("height", 12.0))
    roof = params.get("roof", "flat")
    if w <= 0 or d <= 0 or h <= 0:
        raise BadParams(f"building dimensions must be positive: {w}x{d}x{h}")
    if roof not in ("flat", "gabled"):
        raise BadParams(f"unknown roof kind '{roof}'")
    footprint = Polygon([(0, 0), (w, 0), (w, d), (0, d)])
    if roof == "flat":
        mesh = extrude(footprint, h, "building")
        return mesh
    rh = float(params.get("roof_height", 0.3 * h))
    if rh <= 0:
        raise BadParams("roof_height must be positive")
    verts = np.array(
        [
            (0, 0, 0), (w, 0, 0), (w, d, 0), (0, d, 0),
            (0, 0, h), (w, 0, h), (w, d, h), (0, d, h),
            (0, d / 2, h + rh), (w, d / 2, h + rh),
        ],
        dtype=np.float64,
    )
    tris = [
        (0, 2, 1), (0, 3, 2),  # floor, facing down
        (0, 1, 5), (0, 5, 4),  # front wall
        (1, 2, 6), (1, 6, 5),  # right wall
        (2, 3, 7), (2, 7, 6),  # back wall
        (3, 0, 4), (3, 4, 7),  # left wall
        (4, 5, 9), (4, 9, 8),  # front roof slope
        (6, 7, 8), (6, 8, 9),  # back roof slope
        (5, 6, 9),             # right gable
        (7, 4, 8),             # left gable
    ]
    return _merge_parts([(verts, tris)], "building")


def _tree_mesh(params: dict) -> Mesh:
    cr = float(params.get("canopy_radius", 2.0))
    ch = float(params.get("canopy_height", 3.0))
    tr = float(params.get("trunk_radius", 0.25))
    th = float(params.get("trunk_height", 2.0))
    if min(cr, ch, tr, th) <= 0:
        raise BadParams("tree dimensions must be positive")
    return _merge_parts(
        [_cylinder(tr, th, 16), _cone(cr, ch, 32, z0=th)],
        "green",
    )


def _streetlamp_mesh(params: dict) -> Mesh:
    ph = float(params.get("post_height", 5.0))
    pr = float(params.get("post_radius", 0.08))
    arm = float(params.get("arm_length", 1.0))
    if min(ph, pr, arm) <= 0:
        raise BadParams("streetlamp dimensions must be positive")
    post = _cylinder(pr, ph, 12)
    arm_part = _cylinder(pr * 0.8, arm, 8)
    # rotate the arm to horizontal and attach at the post top
    av, at = arm_part
    av = av[:, [2, 1, 0]] * np.array([1.0, 1.0, 1.0])
    av[:, 2] += ph - pr
    at = [(a, c, b) for a, b, c in at]  # restore outward winding after axis swap
    head = _cylinder(pr * 2.5, 0.3, 12)
    hv, ht = head
    hv[:, 0] += arm
    hv[:, 2] += ph - 0.35
    return _merge_parts([post, (av, at), (hv, ht)], "generic")


_GENERATORS = {
    "building": _building_mesh,
    "tree": _tree_mesh,
    "streetlamp": _streetlamp_mesh,
}

_KIND_MATERIALS = {
    "building": ((0.62, 0.60, 0.58), 0.8),
    "tree": ((0.13, 0.42, 0.15), 0.9),
    "streetlamp": ((0.15, 0.15, 0.17), 0.4),
}


def _describe(kind: str, params: dict) -> str:
    if kind == "building":
        return (
            f"building {params.get('width', 10.0):g}x{params.get('depth', 10.0):g} m, "
            f"{params.get('height', 12.0):g} m tall, {params.get('roof', 'flat')} roof"
        )
    if kind == "tree":
        return (
            f"tree with canopy radius {params.get('canopy_radius', 2.0):g} m, "
            f"canopy height {params.get('canopy_height', 3.0):g} m"
        )
    return f"streetlamp {params.get('post_height', 5.0):g} m tall"


class AssetLibrary:
    """Append-only asset store with cosine retrieval over descriptions."""

    def __init__(self, client=None):
        self.client = client or _DEFAULT_CLIENT
        self.records: list[AssetRecord] = []
        self._by_id: dict[str, AssetRecord] = {}

    def __len__(self):
        return len(self.records)

    def add(self, record: AssetRecord) -> AssetRecord:
        if record.id in self._by_id:
            raise AssetError(f"duplicate asset id '{record.id}'")
        n = float(np.linalg.norm(record.embedding))
        if abs(n - 1.0) > 1e-9:
            raise AssetError(f"embedding of '{record.id}' is not unit length")
        self.records.append(record)
        self._by_id[record.id] = record
        return record

    def get(self, asset_id: str) -> AssetRecord:
        return self._by_id[asset_id]

    def generate_asset(self, kind: str, params: dict | None = None, seed: int = 0) -> AssetRecord:
        """Build one procedural asset, embed its description, add it."""
        if kind not in _GENERATORS:
            raise BadParams(f"unknown asset kind '{kind}'")
        params = dict(params or {})
        mesh = _GENERATORS[kind](params)
        description = _describe(kind, params)
        asset_id = f"{kind}_{len(self.records):05d}"
        material = params.get("material", _KIND_MATERIALS[kind])
        record = AssetRecord(asset_id, description, mesh, material, self.client.embed(description))
        return self.add(record)

    def retrieve(self, query: str, seed: int = 0, k: int = TOP_K) -> AssetRecord:
        """Top-k cosine candidates (ties by id), one picked uniformly."""
        if not self.records:
            raise EmptyLibrary("cannot retrieve from an empty library")
        q = self.client.embed(query)
        scored = sorted(
            ((float(r.embedding @ q), r) for r in self.records),
            key=lambda sr: (-sr[0], sr[1].id),
        )
        pool = scored[: min(k, len(scored))]
        rng = np.random.default_rng(seed)
        return pool[int(rng.integers(0, len(pool)))][1]

    # -- persistence --------------------------------------------------------

    def save(self, directory: str | Path) -> None:
        root = Path(directory)
        root.mkdir(parents=True, exist_ok=True)
        for r in self.records:
            np.savez(
                root / f"{r.id}.mesh.npz",
                positions=r.mesh.positions,
                triangles=r.mesh.triangles,
                normals=r.mesh.normals,
                embedding=r.embedding,
            )
            manifest = {
                "id": r.id,
                "description": r.description,
                "material": {"color": list(r.material[0]), "roughness": r.material[1]},
                "semantic_class": r.mesh.semantic_class,
                "mesh": f"{r.id}.mesh.npz",
            }
            (root / f"{r.id}.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
        (root / "index.json").write_text(json.dumps([r.id for r in self.records], indent=2))

    @classmethod
    def load(cls, directory: str | Path, client=None) -> "AssetLibrary":
        root = Path(directory)
        ids = json.loads((root / "index.json").read_text())
        lib = cls(client)
        for asset_id in ids:
            manifest = json.loads((root / f"{asset_id}.json").read_text())
            blob = np.load(root / manifest["mesh"])
            mesh = Mesh(
                blob["positions"], blob["triangles"], blob["normals"], manifest["semantic_class"]
            )
            material = (tuple(manifest["material"]["color"]), manifest["material"]["roughness"])
            lib.add(AssetRecord(asset_id, manifest["description"], mesh, material, blob["embedding"]))
        return lib


def default_library(seed: int = 0, client=None) -> AssetLibrary:
    """Library with a spread of trees and streetlamps for scattering."""
    lib = AssetLibrary(client)
    rng = np.random.default_rng(subsystem_seed(seed, "default-assets"))
    for i in range(6):
        lib.generate_asset(
            "tree",
            {
                "canopy_radius": round(float(rng.uniform(1.2, 3.0)), 2),
                "canopy_height": round(float(rng.uniform(2.0, 4.5)), 2),
                "trunk_height": round(float(rng.uniform(1.5, 3.0)), 2),
            },
        )
    for i in range(3):
        lib.generate_asset("streetlamp", {"post_height": round(float(rng.uniform(4.0, 6.0)), 2)})
    return lib
