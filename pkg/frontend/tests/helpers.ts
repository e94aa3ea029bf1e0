// Shared fixtures: a server config double, synthetic poses and responses,
// pointer gesture streams, and a seeded RNG for property loops.

import type { GenerateResponse, ServerConfig, SlotName, Vec3 } from "../src/api.js";
import type { RawPoint } from "../src/strokes.js";
import type { SketchPad } from "../src/sketchpad.js";

/** Deterministic 32-bit RNG (mulberry32); good enough for test sampling. */
export function seededRng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function makeConfig(overrides: Partial<ServerConfig> = {}): ServerConfig {
  return {
    joints: 17,
    num_strokes: 6,
    points_per_stroke: 32,
    length_bounds: [40, 120],
    default_length: 80,
    fps: 20,
    slots: ["start", "middle", "end"],
    max_text_len: 16,
    vocabulary: [
      "<pad>", "a", "person", "someone", "walks", "squats", "waves",
      "jumps", "kicks", "turns", "then", "and", "twice", "forward",
    ],
    mixture_defaults: { w: 2.5, p_stick: 0.2 },
    diffusion_steps: 200,
    digests: { model: "f".repeat(64), config: "0".repeat(64) },
  ...overrides,
  };
}

// ---------------------------------------------------------------------------
// poses

/**
 * A standing 17-joint pose with the server's proportions, pelvis at
 * (0, 0.87, 0). `phase` swings the arms so frames differ during playback.
 */
export function makePose(phase = 0): Vec3[] {
  const swing = 0.15 * Math.sin(phase);
  const pose: Vec3[] = [
    [0, 0.87, 0], // pelvis
    [0, 1.09, 0], // spine
    [0, 1.29, 0], // chest
    [0, 1.47, 0], // neck
    [0, 1.59, 0], // head
    [0.2, 1.31, 0], // l_shoulder
    [0.2, 1.03, swing], // l_elbow
    [0.2, 0.77, 2 * swing], // l_wrist
    [-0.2, 1.31, 0], // r_shoulder
    [-0.2, 1.03, -swing], // r_elbow
    [-0.2, 0.77, -2 * swing], // r_wrist
    [0.1, 0.82, 0], // l_hip
    [0.1, 0.4, 0], // l_knee
    [0.1, 0.0, 0], // l_ankle
    [-0.1, 0.82, 0], // r_hip
    [-0.1, 0.4, 0], // r_knee
    [-0.1, 0.0, 0], // r_ankle
  ];
  return pose;
}

export function yawAndTranslate(pose: Vec3[], yaw: number, offset: Vec3): Vec3[] {
  const c = Math.cos(yaw);
  const s = Math.sin(yaw);
  return pose.map(([x, y, z]) => [
    c * x + s * z + offset[0],
    y + offset[1],
    -s * x + c * z + offset[2],
  ]);
}

export function makeResponse(
  length = 80,
  argmax: Partial<Record<SlotName, number>> = { middle: 41 },
  seed = 7,
): GenerateResponse {
  const frames = Array.from({ length }, (_, i) =>
    yawAndTranslate(makePose((2 * Math.PI * i) / length), 0, [0, 0, 0.01 * i]),
  );
  const index_scores: Partial<Record<SlotName, number[]>> = {};
  for (const [slot, peak] of Object.entries(argmax) as [SlotName, number][]) {
    const raw = Array.from({ length }, (_, i) => (i === peak ? 4 : 0.01));
    const total = raw.reduce((a, b) => a + b, 0);
    index_scores[slot] = raw.map((v) => v / total);
  }
  return {
    frames,
    length,
    fps: 20,
    seed,
    index_scores,
    argmax,
    digests: { model: "f".repeat(64), config: "0".repeat(64) },
  };
}

// ---------------------------------------------------------------------------
// pointer gestures

function line(x0: number, y0: number, x1: number, y1: number, n: number, t0: number): RawPoint[] {
  return Array.from({ length: n }, (_, i) => {
    const f = i / (n - 1);
    return { x: x0 + f * (x1 - x0), y: y0 + f * (y1 - y0), t: t0 + 16 * i };
  });
}

function circle(cx: number, cy: number, r: number, n: number, t0: number): RawPoint[] {
  return Array.from({ length: n }, (_, i) => {
    const a = (2 * Math.PI * i) / (n - 1);
    return { x: cx + r * Math.cos(a), y: cy + r * Math.sin(a), t: t0 + 16 * i };
  });
}

/** Six pointer streams sketching a figure on a 320x320 canvas. */
export function stickmanGesture(): RawPoint[][] {
  return [
    circle(160, 60, 25, 20, 0), // head
    line(160, 85, 160, 200, 12, 400), // torso
    line(160, 110, 120, 175, 10, 800), // one arm
    line(160, 110, 200, 175, 10, 1200), // other arm
    line(160, 200, 130, 290, 10, 1600), // one leg
    line(160, 200, 190, 290, 10, 2000), // other leg
  ];
}

/** Replays one pointer stream through the pad as a down-move-up gesture. */
export function feedStroke(pad: SketchPad, points: RawPoint[]): void {
  const first = points[0]!;
  pad.pointerDown(first.x, first.y, first.t);
  for (const p of points.slice(1)) pad.pointerMove(p.x, p.y, p.t);
  pad.pointerUp();
}
