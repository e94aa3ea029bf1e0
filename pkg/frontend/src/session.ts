// Session state: everything between "blank canvas" and "watch the motion".
//
// The session owns up to three finalized stickmen (one per position tag),
// the prompt text, the mixture controls, and the seed policy. It builds the
// GenerateRequest deterministically from recorded pointer samples, so a
// saved session document replays to byte-identical request JSON. Client-side
// validation mirrors the server's error codes one-for-one, which is what
// lets the UI refuse a request the server would refuse, before sending it.

import type {
  ApiIssue,
  GenerateRequest,
  GenerateResponse,
  ServerConfig,
  SlotName,
  StickmanPayload,
} from "./api.js";
import { type CanvasStroke, type RawPoint, strokeLength, strokeToWire } from "./strokes.js";
import { REQUIRED_STROKES } from "./sketchpad.js";

/** Guidance weight must stay strictly above 1; the slider floor. */
export const MIN_W = 1.001;

export interface CanvasSize {
  width: number;
  height: number;
}

/** One finalized stickman: where it goes, and exactly how it was drawn. */
export interface StickmanEntry {
  position: SlotName;
  canvas: CanvasSize;
  strokes: CanvasStroke[];
}

export interface MixtureState {
  w: number;
  pStick: number;
}

/** Server-side tokenizer mirror: lowercase, strip punctuation, split. */
export function tokenizeWords(text: string): string[] {
  return text
    .toLowerCase()
    .replace(/[^\p{L}\p{N}\s]/gu, " ")
    .split(/\s+/)
    .filter((w) => w.length > 0);
}

export class Session {
  stickmen: StickmanEntry[] = [];
  text = "";
  mixture: MixtureState = { w: 2.5, pStick: 0.2 };
  length: number;
  seed = 0;
  /** Pinned: reuse `seed` on every generate. Fresh: draw a new one each time. */
  pinSeed = true;
  lastResponse: GenerateResponse | null = null;
  cursor = 0;
  /** Inline notes from clamped slider values, newest last. */
  readonly notes: string[] = [];

  constructor(private readonly config: ServerConfig) {
    this.length = config.default_length;
    this.mixture = {
      w: config.mixture_defaults.w,
      pStick: config.mixture_defaults.p_stick,
    };
  }

  setW(value: number): number {
    if (!(value > 1)) {
      this.notes.push(`guidance weight must exceed 1, clamped ${value} to ${MIN_W}`);
      value = MIN_W;
    }
    this.mixture.w = value;
    return value;
  }

  setPStick(value: number): number {
    const clamped = Math.min(1, Math.max(0, value));
    if (clamped !== value) {
      this.notes.push(`stickman preference must lie in [0, 1], clamped ${value} to ${clamped}`);
    }
    this.mixture.pStick = clamped;
    return clamped;
  }

  setLength(value: number): number {
    const [lo, hi] = this.config.length_bounds;
    const clamped = Math.min(hi, Math.max(lo, Math.round(value)));
    if (clamped !== value) {
      this.notes.push(`length must lie in [${lo}, ${hi}], clamped ${value} to ${clamped}`);
    }
    this.length = clamped;
    return clamped;
  }

  /** Stores a finalized six-stroke sketch; redrawing a position replaces it. */
  addStickman(position: SlotName, strokes: CanvasStroke[], canvas: CanvasSize): void {
    if (strokes.length !== REQUIRED_STROKES) {
      throw new Error(`a stickman needs ${REQUIRED_STROKES} strokes, got ${strokes.length}`);
    }
    const existing = this.stickmen.findIndex((s) => s.position === position);
    if (existing >= 0) this.stickmen.splice(existing, 1);
    this.stickmen.push({ position, canvas, strokes });
    this.stickmen.sort(
      (a, b) => this.config.slots.indexOf(a.position) - this.config.slots.indexOf(b.position),
    );
  }

  removeStickman(position: SlotName): boolean {
    const i = this.stickmen.findIndex((s) => s.position === position);
    if (i < 0) return false;
    this.stickmen.splice(i, 1);
    return true;
  }

  stickmanAt(position: SlotName): StickmanEntry | undefined {
    return this.stickmen.find((s) => s.position === position);
  }

  /** The seed the next request will carry; fresh mode draws and records it. */
  seedForGenerate(random: () => number = Math.random): number {
    if (!this.pinSeed) this.seed = Math.floor(random() * 2 ** 31);
    return this.seed;
  }

  /**
   * Shapes the wire request. Key order is fixed so two sessions with equal
   * content serialize to the same bytes.
   */
  buildRequest(): GenerateRequest {
    const stickmen: StickmanPayload[] = this.stickmen.map((entry) => ({
      position: entry.position,
      strokes: entry.strokes.map((s) =>
        strokeToWire(s, entry.canvas.width, entry.canvas.height, this.config.points_per_stroke),
      ),
    }));
    const request: GenerateRequest = {
      stickmen,
      length: this.length,
      mixture: { w: this.mixture.w, p_stick: this.mixture.pStick },
      seed: this.seed,
    };
    if (tokenizeWords(this.text).length > 0) {
      return { text: this.text, ...request };
    }
    return request;
  }

  validate(): ApiIssue[] {
    return validateRequest(this.buildRequest(), this.config);
  }
}

// ---------------------------------------------------------------------------
// client-side mirror of the server's request validation

function issue(code: string, field: string, message: string): ApiIssue {
  return { code, field, message };
}

export function validateRequest(request: GenerateRequest, config: ServerConfig): ApiIssue[] {
  const issues: ApiIssue[] = [];

  if (request.text !== undefined) {
    const tokens = tokenizeWords(request.text);
    const known = new Set(config.vocabulary);
    for (const word of tokens) {
      if (!known.has(word)) {
        issues.push(issue("UNKNOWN_TOKEN", "text", `word "${word}" not in vocabulary`));
        break;
      }
    }
    if (tokens.length > config.max_text_len) {
      issues.push(
        issue(
          "TEXT_TOO_LONG",
          "text",
          `${tokens.length} tokens exceed the limit of ${config.max_text_len}`,
        ),
      );
    }
  }

  const seen = new Set<SlotName>();
  request.stickmen.forEach((entry, i) => {
    const where = `stickmen[${i}]`;
    if (!config.slots.includes(entry.position)) {
      issues.push(
        issue(
          "UNKNOWN_POSITION",
          `${where}.position`,
          `position must be one of ${config.slots.join(", ")}`,
        ),
      );
    } else if (seen.has(entry.position)) {
      issues.push(
        issue(
          "DUPLICATE_POSITION",
          `${where}.position`,
          `position "${entry.position}" given more than once`,
        ),
      );
    }
    seen.add(entry.position);

    if (entry.strokes.length !== config.num_strokes) {
      issues.push(
        issue(
          "STROKE_COUNT",
          `${where}.strokes`,
          `expected ${config.num_strokes} strokes, got ${entry.strokes.length}`,
        ),
      );
    }
    entry.strokes.forEach((stroke, j) => {
      const finite = stroke.every(([x, y]) => Number.isFinite(x) && Number.isFinite(y));
      if (stroke.length < 2 || !finite) {
        issues.push(
          issue(
            "STROKE_FORMAT",
            `${where}.strokes[${j}]`,
            "each stroke needs at least 2 finite [x, y] points",
          ),
        );
      } else if (strokeLength(stroke.map(([x, y]) => ({ x, y }))) < 1e-8) {
        // Wire strokes are in unit-canvas units, so the pixel tap floor does
        // not apply here; only a literally constant stroke is refused. The
        // server would resample it to a repeated point, which draws nothing.
        issues.push(
          issue("STROKE_FORMAT", `${where}.strokes[${j}]`, "stroke has no extent"),
        );
      }
    });
  });

  const [lo, hi] = config.length_bounds;
  if (!Number.isInteger(request.length)) {
    issues.push(issue("LENGTH_FORMAT", "length", "length must be an integer"));
  } else if (request.length < lo || request.length > hi) {
    issues.push(issue("LENGTH_BOUNDS", "length", `length ${request.length} outside [${lo}, ${hi}]`));
  }

  if (!(request.mixture.w > 1)) {
    issues.push(issue("MIXTURE_INVALID", "mixture", `guidance weight must exceed 1, got ${request.mixture.w}`));
  }
  if (!(request.mixture.p_stick >= 0 && request.mixture.p_stick <= 1)) {
    issues.push(issue("MIXTURE_INVALID", "mixture", `p_stick ${request.mixture.p_stick} outside [0, 1]`));
  }

  if (!Number.isInteger(request.seed) || request.seed < 0) {
    issues.push(issue("SEED_INVALID", "seed", "seed must be a non-negative integer"));
  }

  return issues;
}

// ---------------------------------------------------------------------------
// session documents: shareable JSON that replays the exact request

export interface SessionDocument {
  version: 1;
  text: string;
  stickmen: Array<{
    position: SlotName;
    canvas: CanvasSize;
    strokes: RawPoint[][];
  }>;
  mixture: { w: number; p_stick: number };
  length: number;
  seed: number;
}

export function toDocument(session: Session): SessionDocument {
  return {
    version: 1,
    text: session.text,
    stickmen: session.stickmen.map((entry) => ({
      position: entry.position,
      canvas: { width: entry.canvas.width, height: entry.canvas.height },
      strokes: entry.strokes.map((s) => s.points.map((p) => ({ x: p.x, y: p.y, t: p.t }))),
    })),
    mixture: { w: session.mixture.w, p_stick: session.mixture.pStick },
    length: session.length,
    seed: session.seed,
  };
}

export function fromDocument(doc: SessionDocument, config: ServerConfig): Session {
  if (doc.version !== 1) {
    throw new Error(`unsupported session document version ${String(doc.version)}`);
  }
  const session = new Session(config);
  session.text = doc.text;
  session.mixture = { w: doc.mixture.w, pStick: doc.mixture.p_stick };
  session.length = doc.length;
  session.seed = doc.seed;
  for (const entry of doc.stickmen) {
    session.addStickman(
      entry.position,
      entry.strokes.map((points) => ({ points, finalized: true })),
      entry.canvas,
    );
  }
  return session;
}

/** The canonical request bytes; replay equality is checked on this string. */
export function requestJson(request: GenerateRequest): string {
  return JSON.stringify(request);
}
