/** Typed client for the scene service: the four endpoints and nothing else. */

export interface EvalReportJson {
  passed: boolean;
  per_class_iou: Record<string, number>;
  violations: string[];
}

export interface RevisionInfo {
  revision: number;
  instruction: string;
  report: EvalReportJson;
}

export interface SceneReport {
  scene_id: string;
  object_count: number;
  revisions: RevisionInfo[];
  traces: Array<Record<string, unknown>>;
  counters: Record<string, number>;
  er_at_1?: number;
  sr_at_1?: number;
}

export interface EditResponse {
  scene_id: string;
  revision: number;
  applied: boolean;
  report: EvalReportJson;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function fail(resp: Response): Promise<never> {
  let detail = resp.statusText;
  try {
    const body = await resp.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    /* non-JSON error body */
  }
  throw new ApiError(resp.status, detail);
}

export class SceneApi {
  constructor(
    private readonly base: string = "/api/v1",
    private readonly fetchImpl: FetchLike = (...a) => fetch(...a),
  ) {}

  modelUrl(sceneId: string, rev?: number): string {
    const suffix = rev === undefined ? "" : `?rev=${rev}`;
    return `${this.base}/scenes/${sceneId}/model.glb${suffix}`;
  }

  async getReport(sceneId: string): Promise<SceneReport> {
    const resp = await this.fetchImpl(`${this.base}/scenes/${sceneId}/report`);
    if (!resp.ok) await fail(resp);
    return (await resp.json()) as SceneReport;
  }

  async getModel(sceneId: string, rev?: number): Promise<ArrayBuffer> {
    const resp = await this.fetchImpl(this.modelUrl(sceneId, rev));
    if (!resp.ok) await fail(resp);
    return resp.arrayBuffer();
  }

  async submitEdit(sceneId: string, instruction: string): Promise<EditResponse> {
    const resp = await this.fetchImpl(`${this.base}/scenes/${sceneId}/edits`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ instruction }),
    });
    if (!resp.ok) await fail(resp);
    return (await resp.json()) as EditResponse;
  }
}
