"""
Geometry kernel walkthrough
===========================

Triangulation, insets, oriented-bounding-box splits, prisms and road
ribbons — the primitives every later stage builds on.
"""

import numpy as np

from cityforge import Polygon, Polyline, extrude, inset, mesh_volume, obb_split, signed_area, sweep_profile, triangulate

# an L-shaped footprint: 2x2 square minus a 1x1 corner
L = Polygon([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])
print("L-shape area:", signed_area(L))

tris = triangulate(L)
print("triangulated into", len(tris), "triangles (n-2 rule)")

# inset: the building sits 0.2 m back from the parcel boundary
small = inset(L, 0.2)
print("inset area:", round(abs(signed_area(small)), 4))

# a parcel split perpendicular to the long axis of its minimum-area box
a, b = obb_split(Polygon([(0, 0), (4, 0), (4, 2), (0, 2)]))
print("split areas:", abs(signed_area(a)), "+", abs(signed_area(b)))

# extrusion gives a watertight prism: volume = base area x height
prism = extrude(L, 10.0)
print("prism volume:", round(mesh_volume(prism), 9), "=", signed_area(L), "x 10")

# roads are mitered ribbons centered on their polyline
ribbon = sweep_profile(Polyline([(0, 0), (50, 0), (50, 50)]), 8.0)
print("ribbon:", len(ribbon.positions), "vertices,", len(ribbon.triangles), "triangles")
