// Client-side session mirror. All state transitions go through the service
// and the shown stage is re-read from the server after every call, so the
// UI can never run ahead of (or without) the backend.

import { ApiClient, MutateOptions, SelectOptions } from "./api.js";
import type {
  ClassPayload,
  EditResponse,
  GeometryPayload,
  MutateResponse,
  ParamsPayload,
  Stage,
} from "./types.js";

export interface DownloadLink {
  kind: "xosc" | "xodr" | "params";
  variant: "original" | "mutated" | null;
  url: string;
  label: string;
}

export class ViewSession {
  sessionId: string | null = null;
  stage: Stage | null = null;
  unsupported: string[] = [];
  dangerTargets: string[] = [];
  classes: ClassPayload[] = [];
  rawTotal = 0;
  selectedIndex: number | null = null;
  params: ParamsPayload | null = null;
  originalParams: ParamsPayload | null = null;
  geometry: GeometryPayload | null = null;
  changedFields: string[] = [];
  rationale = "";

  constructor(private api: ApiClient) {}

  private async refreshStage(): Promise<void> {
    if (!this.sessionId) return;
    const snapshot = await this.api.session(this.sessionId);
    this.stage = snapshot.stage;
  }

  async start(description: string): Promise<void> {
    const created = await this.api.createSession(description);
    this.sessionId = created.session_id;
    this.unsupported = created.unsupported;
    this.dangerTargets = created.factors.targets;
    this.classes = [];
    this.selectedIndex = null;
    this.params = null;
    this.originalParams = null;
    this.changedFields = [];
    this.rationale = "";
    await this.refreshStage();
  }

  async enumerate(reduction: string = "pattern"): Promise<ClassPayload[]> {
    if (!this.sessionId) throw new Error("no session");
    const response = await this.api.enumerate(this.sessionId, reduction);
    this.classes = response.classes;
    this.rawTotal = response.raw_total;
    await this.refreshStage();
    return this.classes;
  }

  async select(classIndex: number, options: SelectOptions = {}): Promise<void> {
    if (!this.sessionId) throw new Error("no session");
    const response = await this.api.select(this.sessionId, classIndex, options);
    this.selectedIndex = classIndex;
    this.params = response.params;
    this.originalParams = response.params;
    this.geometry = response.geometry;
    this.changedFields = [];
    this.rationale = "";
    await this.refreshStage();
  }

  async mutate(options: MutateOptions): Promise<MutateResponse> {
    if (!this.sessionId) throw new Error("no session");
    const response = await this.api.mutate(this.sessionId, options);
    this.params = response.params;
    this.changedFields = response.changed_fields;
    this.rationale = response.rationale;
    await this.refreshStage();
    return response;
  }

  async submitEdit(params: ParamsPayload): Promise<EditResponse> {
    if (!this.sessionId) throw new Error("no session");
    const response = await this.api.editParams(this.sessionId, params);
    if (response.accepted) {
      this.params = params;
    }
    return response;
  }

  /** Before/after rows for the diff view; exactly the mutate response's
   * changed_fields resolved against both parameter sets. */
  diffRows(): { field: string; before: unknown; after: unknown }[] {
    if (!this.originalParams || !this.params) return [];
    return this.changedFields.map((field) => ({
      field,
      before: lookupField(this.originalParams!, field),
      after: lookupField(this.params!, field),
    }));
  }

  downloadsEnabled(): boolean {
    return this.stage === "concretized" || this.stage === "mutated";
  }

  downloadLinks(): DownloadLink[] {
    if (!this.sessionId || !this.downloadsEnabled()) return [];
    const kinds: Array<"xosc" | "xodr" | "params"> = ["xosc", "xodr", "params"];
    if (this.stage !== "mutated") {
      return kinds.map((kind) => ({
        kind,
        variant: null,
        url: this.api.fileUrl(this.sessionId!, kind),
        label: kind,
      }));
    }
    const links: DownloadLink[] = [];
    for (const variant of ["original", "mutated"] as const) {
      for (const kind of kinds) {
        links.push({
          kind,
          variant,
          url: this.api.fileUrl(this.sessionId!, kind, variant),
          label: `${kind} (${variant})`,
        });
      }
    }
    return links;
  }
}

export function lookupField(params: ParamsPayload, path: string): unknown {
  const match = /^(roads|cars|change_lanes)\[(\d+)\]\.(\w+)$/.exec(path);
  if (!match) return undefined;
  const [, table, index, field] = match;
  const rows = params[table as "roads" | "cars" | "change_lanes"] as unknown as Array<
    Record<string, unknown>
  >;
  const row = rows[Number(index)];
  return row ? row[field] : undefined;
}
