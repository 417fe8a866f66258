"""
Agent pipeline walkthrough
==========================

Watch the four stages cooperate: annotation tags the registry, the
planner closes format gaps with conversion chains, the executor traces
every action into the message pool, and refinement edits mutate the scene.
"""

from cityforge import Engine, bundled_data
from cityforge.actions import build_registry
from cityforge.agents import annotate, MessagePool

# 1. annotation: vocabulary and tags derived from the action descriptions
registry = build_registry()
pool = MessagePool()
annotate(registry, pool)
labels = pool.entries("labels")[0].payload
print("concept vocabulary:", labels["vocabulary"])
print("tags of point_to_face_conversion:", labels["labels"]["point_to_face_conversion"])

# 2. full generation run: the planner turns one instruction into a chain
engine = Engine(seed=0)
session, result = engine.create_scene(osm=bundled_data("sample.osm"))
print("\nplanned/executed:", result.steps_run)
print("scene revision:", session.state.revision, "objects:", len(session.state.objects))

# 3. refinement edits through the same loop
for text in ("raise bldg_0003 by 25%", "recolor buildings to gray", "set-weather fog"):
    r = session.run_instruction(text)
    print(f"  {text!r}: executed {r.executed}, passed {r.report.passed}")

# 4. the message pool remembers everything in order
trace = [e.payload["classname"] for e in session.pool.entries("trace")]
print("\ntrace:", trace)
print("counters:", session.counters)
