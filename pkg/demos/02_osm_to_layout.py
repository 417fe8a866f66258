"""
OSM to city layout
==================

Parse the bundled OSM sample, classify its layers, planarize the road
graph and derive blocks, parcels and footprints.
"""

from cityforge import assemble_layout, bundled_data, classify_layers, parse_osm, signed_area

doc = parse_osm(bundled_data("sample.osm"))
print("parsed:", len(doc.nodes), "nodes,", len(doc.ways), "ways,", len(doc.relations), "relations")

layers = classify_layers(doc, doc.bbox_center())
print("layers:", len(layers.roads), "roads,", len(layers.buildings), "declared buildings,",
      len(layers.water), "water,", len(layers.landuse), "landuse,",
      len(layers.skipped), "skipped ways")

layout = assemble_layout(layers, seed=0)
print("road graph:", len(layout.roads.vertices), "vertices,", len(layout.roads.edges), "edges")
print("blocks:", len(layout.blocks))
print("parcels:", len(layout.parcels))
print("footprints:", len(layout.footprints))

declared = [fp for fp in layout.footprints if fp.parcel_index is None]
print("declared footprints kept:", len(declared),
      "heights:", sorted({fp.height for fp in declared}))

areas = [abs(signed_area(p)) for p, _ in layout.parcels]
print("parcel area range: %.0f .. %.0f m^2 (target 600)" % (min(areas), max(areas)))
