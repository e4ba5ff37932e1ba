import type {
  ApiErrorEnvelope,
  CreatedSession,
  EditResponse,
  EnumerateResponse,
  MutateResponse,
  ParamsPayload,
  SelectResponse,
  SessionSnapshot,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public envelope: ApiErrorEnvelope,
  ) {
    super(envelope.message);
  }
}

export interface SelectOptions {
  seed?: number;
  angles?: number[];
  lanes?: number[][];
  road_len?: number;
  radius?: number;
}

export interface MutateOptions {
  mode: "heuristic" | "llm";
  seed?: number;
  factors?: { description?: string; targets?: string[]; intensity?: number };
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, payload as ApiErrorEnvelope);
    }
    return payload as T;
  }

  createSession(description: string): Promise<CreatedSession> {
    return this.request("POST", "/v1/sessions", { description });
  }

  session(sessionId: string): Promise<SessionSnapshot> {
    return this.request("GET", `/v1/sessions/${sessionId}`);
  }

  enumerate(sessionId: string, reduction: string = "pattern"): Promise<EnumerateResponse> {
    return this.request("POST", `/v1/sessions/${sessionId}/enumerate`, { reduction });
  }

  select(sessionId: string, classIndex: number, options: SelectOptions = {}): Promise<SelectResponse> {
    return this.request("POST", `/v1/sessions/${sessionId}/select`, {
      class_index: classIndex,
      ...options,
    });
  }

  mutate(sessionId: string, options: MutateOptions): Promise<MutateResponse> {
    return this.request("POST", `/v1/sessions/${sessionId}/mutate`, options);
  }

  editParams(sessionId: string, params: ParamsPayload): Promise<EditResponse> {
    return this.request("POST", `/v1/sessions/${sessionId}/params`, { params });
  }

  fileUrl(sessionId: string, kind: "xosc" | "xodr" | "params", variant?: "original" | "mutated"): string {
    const suffix = variant ? `?variant=${variant}` : "";
    return `${this.baseUrl}/v1/sessions/${sessionId}/files/${kind}${suffix}`;
  }
}
