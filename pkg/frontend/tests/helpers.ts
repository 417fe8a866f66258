/** Test helpers: load fixtures captured from the real engine service and
 * build a fetch mock that serves them like the live API would. */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { FetchLike } from "../src/api";

const here = dirname(fileURLToPath(import.meta.url));

export function fixtureBytes(name: string): ArrayBuffer {
  const buf = readFileSync(join(here, "fixtures", name));
  return buf.buffer.slice(buf.byteOffset, buf.byteOffset + buf.byteLength);
}

export function fixtureJson<T = any>(name: string): T {
  return JSON.parse(readFileSync(join(here, "fixtures", name), "utf-8")) as T;
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/** Stateful mock of the four endpoints for one scene. Starts at revision 0;
 * a "raise" edit commits revision 1 (served from the captured fixtures),
 * anything mentioning an unknown object is rejected without a commit. */
export function mockServer(sceneId = "scene_0000") {
  const models = [fixtureBytes("scene_rev0.glb"), fixtureBytes("scene_rev1.glb")];
  const reports = [fixtureJson("report_rev0.json"), fixtureJson("report_rev1.json")];
  const state = { revisions: 1, requests: [] as string[] };

  const fetchImpl: FetchLike = async (url, init) => {
    state.requests.push(`${init?.method ?? "GET"} ${url}`);
    const m = /\/api\/v1\/scenes\/([^/]+)\/(report|model\.glb|edits)(\?rev=(\d+))?$/.exec(url);
    if (!m || m[1] !== sceneId) return jsonResponse({ detail: "unknown scene" }, 404);
    const kind = m[2];
    if (kind === "report") return jsonResponse(reports[state.revisions - 1]);
    if (kind === "model.glb") {
      const rev = m[4] === undefined ? state.revisions - 1 : Number(m[4]);
      if (rev >= state.revisions) return jsonResponse({ detail: "unknown revision" }, 404);
      return new Response(models[rev].slice(0), {
        status: 200,
        headers: { "Content-Type": "model/gltf-binary" },
      });
    }
    const body = JSON.parse(String(init?.body ?? "{}"));
    const instruction: string = body.instruction ?? "";
    if (!/^(generate|scale|raise|recolor|place|remove|set-style|set-weather)\b/.test(instruction)) {
      return jsonResponse({ detail: `cannot interpret instruction '${instruction}'` }, 422);
    }
    if (instruction.includes("bldg_9999")) {
      return jsonResponse(fixtureJson("edit_rejected.json"));
    }
    if (state.revisions === 1 && instruction.startsWith("raise")) {
      state.revisions = 2;
      return jsonResponse(fixtureJson("edit_response.json"));
    }
    return jsonResponse({ detail: "fixture server only supports one edit" }, 422);
  };

  return { fetchImpl, state };
}
