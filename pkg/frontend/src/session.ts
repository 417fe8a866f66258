/** Viewer session state: which scene and revision are shown, the history
 * panel, and per-class layer visibility. Pure logic so it is testable
 * without a DOM; the renderer subscribes to the state it exposes.
 *
 * Displayed numbers (object counts, IoU) always come from the server
 * report, never from client-side recomputation. Layer toggles only hide
 * nodes locally and never mutate server state.
 */

import { ApiError, EvalReportJson, RevisionInfo, SceneApi, SceneReport } from "./api";
import { GltfDocument, parseGlb, semanticClasses } from "./glb";

export interface LoadedRevision {
  revision: number;
  doc: GltfDocument;
  raw: ArrayBuffer;
}

export interface ViewerState {
  sceneId: string | null;
  report: SceneReport | null;
  shown: LoadedRevision | null;
  visibility: Record<string, boolean>;
  error: string | null;
  busy: boolean;
}

export class ViewerSession {
  state: ViewerState = {
    sceneId: null,
    report: null,
    shown: null,
    visibility: {},
    error: null,
    busy: false,
  };

  constructor(private readonly api: SceneApi) {}

  get history(): RevisionInfo[] {
    return this.state.report?.revisions ?? [];
  }

  get latestRevision(): number {
    return this.history.length - 1;
  }

  /** Shown revision is read-only unless it is the latest one. */
  get readOnly(): boolean {
    return this.state.shown !== null && this.state.shown.revision !== this.latestRevision;
  }

  async load(sceneId: string): Promise<ViewerState> {
    this.state.busy = true;
    try {
      const report = await this.api.getReport(sceneId);
      const latest = report.revisions.length - 1;
      const raw = await this.api.getModel(sceneId, latest);
      const { doc } = parseGlb(raw);
      this.state = {
        sceneId,
        report,
        shown: { revision: latest, doc, raw },
        visibility: Object.fromEntries(semanticClasses(doc).map((c) => [c, true])),
        error: null,
        busy: false,
      };
    } catch (e) {
      this.state = {
        sceneId: null,
        report: null,
        shown: null,
        visibility: {},
        error: e instanceof ApiError ? `${e.status}: ${e.message}` : String(e),
        busy: false,
      };
    }
    return this.state;
  }

  async showRevision(revision: number): Promise<ViewerState> {
    if (!this.state.sceneId) return this.state;
    try {
      const raw = await this.api.getModel(this.state.sceneId, revision);
      const { doc } = parseGlb(raw);
      this.state.shown = { revision, doc, raw };
      this.state.error = null;
    } catch (e) {
      this.state.error = e instanceof ApiError ? `${e.status}: ${e.message}` : String(e);
    }
    return this.state;
  }

  /** Submit the next instruction; reloads the new revision when applied.
   * Rejected or failing edits leave the shown revision untouched and
   * surface the report inline. */
  async submitInstruction(text: string): Promise<EvalReportJson | null> {
    if (!this.state.sceneId || this.state.busy) return null;
    this.state.busy = true;
    try {
      const outcome = await this.api.submitEdit(this.state.sceneId, text);
      this.state.report = await this.api.getReport(this.state.sceneId);
      if (outcome.applied) {
        await this.showRevision(outcome.revision);
        this.state.error = null;
      } else {
        this.state.error = `edit not applied: ${outcome.report.violations.join("; ") || "evaluation failed"}`;
      }
      return outcome.report;
    } catch (e) {
      this.state.error = e instanceof ApiError ? `${e.status}: ${e.message}` : String(e);
      return null;
    } finally {
      this.state.busy = false;
    }
  }

  /** Local-only visibility toggle; returns the new flag. */
  toggleLayer(semanticClass: string): boolean {
    const next = !(this.state.visibility[semanticClass] ?? true);
    this.state.visibility[semanticClass] = next;
    return next;
  }
}
