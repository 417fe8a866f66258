"""
Asset library and retrieval
===========================

Grow the library with procedural assets, then retrieve by text: cosine
similarity over normalized 768-dim description embeddings, a top-10
candidate pool, and a seeded uniform pick.
"""

import numpy as np

from cityforge import AssetLibrary, embed_text, mesh_volume

lib = AssetLibrary()
for r in (1.5, 2.0, 2.5, 3.0):
    lib.generate_asset("tree", {"canopy_radius": r, "canopy_height": r * 1.5})
for h in (4.5, 5.0, 5.5):
    lib.generate_asset("streetlamp", {"post_height": h})
lib.generate_asset("building", {"width": 12, "depth": 10, "height": 27, "roof": "gabled"})

print("library:", len(lib), "assets")
for rec in lib.records[:4]:
    print(f"  {rec.id}: {rec.description} (volume {mesh_volume(rec.mesh):.2f} m^3)")

q = embed_text("tall tree with a wide canopy")
print("\nembedding is unit length:", round(float(np.linalg.norm(q)), 9))

for seed in (0, 1, 2):
    rec = lib.retrieve("tall tree with a wide canopy", seed=seed)
    print(f"  seed {seed} picked {rec.id}: {rec.description}")

# persistence round-trip
import tempfile

with tempfile.TemporaryDirectory() as d:
    lib.save(d)
    again = AssetLibrary.load(d)
    print("\nreloaded", len(again), "assets; ids preserved:",
          [r.id for r in again.records] == [r.id for r in lib.records])
