// Skeleton playback: 2D front-view projection, timeline, and markers.
//
// The server streams absolute 3D joints; the UI draws them front-on using
// the same pelvis-frame rule the stickman pipeline uses, so the pose on
// screen lines up with what the user sketched. The timeline exposes one
// tick per frame plus S/M/E markers at the frame each stickman was matched
// to, and the player advances the cursor at the server's fps.

import type { GenerateResponse, SlotName, Vec2, Vec3 } from "./api.js";

// The server's fixed 17-joint layout, in frame order. /api/config reports
// the joint count; the ordering below is part of the wire contract.
export const JOINT_NAMES = [
  "pelvis", "spine", "chest", "neck", "head",
  "l_shoulder", "l_elbow", "l_wrist",
  "r_shoulder", "r_elbow", "r_wrist",
  "l_hip", "l_knee", "l_ankle",
  "r_hip", "r_knee", "r_ankle",
] as const;

export const PELVIS = 0, SPINE = 1, CHEST = 2, NECK = 3, HEAD = 4;
export const L_SHOULDER = 5, L_ELBOW = 6, L_WRIST = 7;
export const R_SHOULDER = 8, R_ELBOW = 9, R_WRIST = 10;
export const L_HIP = 11, L_KNEE = 12, L_ANKLE = 13;
export const R_HIP = 14, R_KNEE = 15, R_ANKLE = 16;

/** Parent-child joint pairs, for drawing the skeleton as line segments. */
export const BONE_EDGES: ReadonlyArray<readonly [number, number]> = [
  [PELVIS, SPINE], [SPINE, CHEST], [CHEST, NECK], [NECK, HEAD],
  [CHEST, L_SHOULDER], [L_SHOULDER, L_ELBOW], [L_ELBOW, L_WRIST],
  [CHEST, R_SHOULDER], [R_SHOULDER, R_ELBOW], [R_ELBOW, R_WRIST],
  [PELVIS, L_HIP], [L_HIP, L_KNEE], [L_KNEE, L_ANKLE],
  [PELVIS, R_HIP], [R_HIP, R_KNEE], [R_KNEE, R_ANKLE],
];

/** Fraction of canvas height the projected figure occupies. */
export const CANVAS_FILL = 0.8;

const EPS = 1e-8;

function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

function norm(a: Vec3): number {
  return Math.hypot(a[0], a[1], a[2]);
}

function dist(a: Vec3, b: Vec3): number {
  return norm(sub(a, b));
}

/**
 * Pose-invariant skeleton height: spine chain + mean leg chain + head
 * allowance. Constant across frames of one skeleton, which keeps the
 * canvas scale steady during playback.
 */
export function chainHeight(frame: readonly Vec3[]): number {
  const d = (a: number, b: number) => dist(frame[a]!, frame[b]!);
  const spineChain = d(PELVIS, SPINE) + d(SPINE, CHEST) + d(CHEST, NECK) + d(NECK, HEAD);
  const left = d(PELVIS, L_HIP) + d(L_HIP, L_KNEE) + d(L_KNEE, L_ANKLE);
  const right = d(PELVIS, R_HIP) + d(R_HIP, R_KNEE) + d(R_KNEE, R_ANKLE);
  return spineChain + 0.5 * (left + right) + 1.125 * d(NECK, HEAD);
}

/**
 * World joints to unit-canvas points in the body's own pelvis frame.
 *
 * Horizontal axis along the hip line, vertical axis the pelvis-to-spine
 * direction orthogonalized against it; canvas y grows downward. World
 * translation and yaw drop out, so the figure always faces the viewer.
 */
export function frontProject(frame: readonly Vec3[]): Vec2[] {
  const hipAxis = sub(frame[L_HIP]!, frame[R_HIP]!);
  const hipNorm = norm(hipAxis);
  if (hipNorm < EPS) throw new Error("hip joints coincide, no horizontal axis");
  const xAxis: Vec3 = [hipAxis[0] / hipNorm, hipAxis[1] / hipNorm, hipAxis[2] / hipNorm];

  const pelvis = frame[PELVIS]!;
  let up = sub(frame[SPINE]!, pelvis);
  const along = dot(up, xAxis);
  up = [up[0] - along * xAxis[0], up[1] - along * xAxis[1], up[2] - along * xAxis[2]];
  const upNorm = norm(up);
  if (upNorm < EPS) throw new Error("spine parallel to hip line, no vertical axis");
  const yAxis: Vec3 = [up[0] / upNorm, up[1] / upNorm, up[2] / upNorm];

  const scale = CANVAS_FILL / chainHeight(frame);
  return frame.map((joint) => {
    const rel = sub(joint, pelvis);
    return [0.5 + dot(rel, xAxis) * scale, 0.5 - dot(rel, yAxis) * scale];
  });
}

// ---------------------------------------------------------------------------
// timeline

export const MARKER_LABELS: Record<SlotName, "S" | "M" | "E"> = {
  start: "S",
  middle: "M",
  end: "E",
};

export interface Marker {
  slot: SlotName;
  label: "S" | "M" | "E";
  /** Frame index the model aligned this stickman with. */
  index: number;
}

export class Timeline {
  constructor(readonly response: GenerateResponse) {
    if (response.frames.length !== response.length) {
      throw new Error(
        `response carries ${response.frames.length} frames but length ${response.length}`,
      );
    }
  }

  get length(): number {
    return this.response.length;
  }

  /** One normalized tick center per frame, left to right. */
  positions(): number[] {
    const L = this.length;
    return Array.from({ length: L }, (_, i) => (i + 0.5) / L);
  }

  /** S/M/E markers at each answered slot's argmax, in slot order. */
  markers(): Marker[] {
    const order: SlotName[] = ["start", "middle", "end"];
    const out: Marker[] = [];
    for (const slot of order) {
      const index = this.response.argmax[slot];
      if (index !== undefined) {
        out.push({ slot, label: MARKER_LABELS[slot], index });
      }
    }
    return out;
  }

  frame(cursor: number): Vec3[] {
    const i = Math.min(this.length - 1, Math.max(0, Math.floor(cursor)));
    return this.response.frames[i]!;
  }
}

/** Advances a frame cursor in real time; wraps at the end. */
export class Player {
  cursor = 0;
  playing = false;

  constructor(private readonly timeline: Timeline) {}

  get fps(): number {
    return this.timeline.response.fps;
  }

  play(): void {
    this.playing = true;
  }

  pause(): void {
    this.playing = false;
  }

  seek(frame: number): void {
    this.cursor = Math.min(this.timeline.length - 1, Math.max(0, frame));
  }

  /** Steps the cursor by dt seconds of wall time while playing. */
  advance(dtSeconds: number): number {
    if (this.playing) {
      this.cursor = (this.cursor + dtSeconds * this.fps) % this.timeline.length;
    }
    return this.cursor;
  }

  frame(): Vec3[] {
    return this.timeline.frame(this.cursor);
  }
}
