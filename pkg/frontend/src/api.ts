// Typed client for the stickmotion generation server.
//
// The wire format is plain JSON; strokes travel as [x, y] pairs on the unit
// canvas (y grows downward), already resampled client-side to the server's
// point count. Validation failures come back as 422 bodies with a machine
// readable code and the offending field path, surfaced here as
// ApiRequestError so the UI can show inline feedback.

export type Vec2 = [number, number];
export type Vec3 = [number, number, number];

export type SlotName = "start" | "middle" | "end";

/** One stickman: six strokes, each a polyline of [x, y] canvas points. */
export interface StickmanPayload {
  position: SlotName;
  strokes: Vec2[][];
}

export interface MixturePayload {
  w: number;
  p_stick: number;
}

export interface GenerateRequest {
  text?: string;
  stickmen: StickmanPayload[];
  length: number;
  mixture: MixturePayload;
  seed: number;
}

export interface GenerateResponse {
  /** Absolute joint positions, [length][joints][3]. */
  frames: Vec3[][];
  length: number;
  fps: number;
  seed: number;
  /** Per-slot softmax over frames; only slots that had a stickman appear. */
  index_scores: Partial<Record<SlotName, number[]>>;
  /** Per-slot frame index the model aligned the stickman with. */
  argmax: Partial<Record<SlotName, number>>;
  digests: Record<string, string>;
}

export interface ServerConfig {
  joints: number;
  num_strokes: number;
  points_per_stroke: number;
  length_bounds: [number, number];
  default_length: number;
  fps: number;
  slots: SlotName[];
  max_text_len: number;
  vocabulary: string[];
  mixture_defaults: { w: number; p_stick: number };
  diffusion_steps: number;
  digests: Record<string, string>;
}

export interface ApiIssue {
  code: string;
  field: string;
  message: string;
}

export class ApiRequestError extends Error {
  readonly code: string;
  readonly field: string;

  constructor(issue: ApiIssue) {
    super(`${issue.code} at ${issue.field || "<body>"}: ${issue.message}`);
    this.name = "ApiRequestError";
    this.code = issue.code;
    this.field = issue.field;
  }
}

export interface GenerateResult {
  response: GenerateResponse;
  /** Wall-clock seconds reported by the server, null if the header is absent. */
  seconds: number | null;
}

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl = "/api", fetchFn: FetchLike = (...a) => fetch(...a)) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  async health(): Promise<{ status: string }> {
    const res = await this.fetchFn(`${this.base}/health`);
    if (!res.ok) throw new Error(`health check failed: ${res.status}`);
    return res.json();
  }

  async config(): Promise<ServerConfig> {
    const res = await this.fetchFn(`${this.base}/config`);
    if (!res.ok) throw new Error(`failed to fetch config: ${res.status}`);
    return res.json();
  }

  async progress(): Promise<{ active: number; step: number; total: number }> {
    const res = await this.fetchFn(`${this.base}/progress`);
    if (!res.ok) throw new Error(`failed to fetch progress: ${res.status}`);
    return res.json();
  }

  async generate(request: GenerateRequest): Promise<GenerateResult> {
    const res = await this.fetchFn(`${this.base}/generate`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    if (res.status === 422) {
      const body = (await res.json()) as { error: ApiIssue };
      throw new ApiRequestError(body.error);
    }
    if (!res.ok) throw new Error(`generate failed: ${res.status}`);
    const header = res.headers.get("X-Generate-Seconds");
    return {
      response: (await res.json()) as GenerateResponse,
      seconds: header === null ? null : Number(header),
    };
  }
}
