import { describe, expect, it } from "vitest";

import { meshNodes, parseGlb, sceneAmbient, semanticClasses, semanticClassOf } from "../src/glb";
import { fixtureBytes, fixtureJson } from "./helpers";

describe("glb parser", () => {
  it("parses the engine's container format", () => {
    const { doc, binary } = parseGlb(fixtureBytes("scene_rev0.glb"));
    expect(doc.asset.version).toBe("2.0");
    expect(binary).not.toBeNull();
    expect(doc.nodes!.length).toBeGreaterThan(1);
  });

  it("mesh node count equals the server-reported object count", () => {
    const { doc } = parseGlb(fixtureBytes("scene_rev0.glb"));
    const report = fixtureJson("report_rev0.json");
    expect(meshNodes(doc).length).toBe(report.object_count);
  });

  it("exposes semantic classes from node extras", () => {
    const { doc } = parseGlb(fixtureBytes("scene_rev0.glb"));
    const classes = semanticClasses(doc);
    expect(classes).toContain("building");
    expect(classes).toContain("road");
    for (const node of meshNodes(doc)) {
      expect(typeof semanticClassOf(node)).toBe("string");
    }
  });

  it("carries scene ambient keys (style, weather)", () => {
    const { doc } = parseGlb(fixtureBytes("scene_rev0.glb"));
    const ambient = sceneAmbient(doc);
    expect(ambient).toHaveProperty("style");
    expect(ambient).toHaveProperty("weather");
  });

  it("rejects garbage and truncated data", () => {
    expect(() => parseGlb(new TextEncoder().encode("not a glb at all").buffer)).toThrow(/magic/);
    const truncated = fixtureBytes("scene_rev0.glb").slice(0, 40);
    expect(() => parseGlb(truncated)).toThrow(/length/);
  });
});
