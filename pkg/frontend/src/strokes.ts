// Stroke geometry: pointer samples in, unit-canvas polylines out.
//
// The server expects each stroke as a fixed number of points uniformly
// spaced along the drawn path, in normalized coordinates where (0,0) is the
// canvas top-left and y grows downward. Resampling happens client-side so
// the request JSON is fully determined by the recorded pointer samples,
// which is what makes session replay byte-exact.

import type { Vec2 } from "./api.js";

/** One pointer sample: canvas pixels plus a millisecond timestamp. */
export interface RawPoint {
  x: number;
  y: number;
  t: number;
}

/** A single pen-down-to-pen-up gesture. Finalized strokes never change. */
export interface CanvasStroke {
  points: RawPoint[];
  finalized: boolean;
}

/** Strokes shorter than this (in canvas pixels) count as accidental taps. */
export const MIN_STROKE_LENGTH = 2.0;

export function strokeLength(points: readonly { x: number; y: number }[]): number {
  let total = 0;
  for (let i = 1; i < points.length; i++) {
    const a = points[i - 1]!;
    const b = points[i]!;
    total += Math.hypot(b.x - a.x, b.y - a.y);
  }
  return total;
}

/** A tap or a stroke with no extent carries no pose information. */
export function isDegenerate(points: readonly { x: number; y: number }[]): boolean {
  return points.length < 2 || strokeLength(points) < MIN_STROKE_LENGTH;
}

/**
 * Arc-length uniform resampling of a polyline to n points.
 *
 * Matches the server's resampler: cumulative arc length parameterization
 * with linear interpolation, endpoints preserved. A zero-length input
 * degenerates to n copies of the first point.
 */
export function resampleStroke(points: readonly Vec2[], n: number): Vec2[] {
  if (points.length === 0) throw new Error("cannot resample an empty stroke");
  const arc: number[] = [0];
  for (let i = 1; i < points.length; i++) {
    const [ax, ay] = points[i - 1]!;
    const [bx, by] = points[i]!;
    arc.push(arc[i - 1]! + Math.hypot(bx - ax, by - ay));
  }
  const total = arc[arc.length - 1]!;
  if (total < 1e-8) {
    return Array.from({ length: n }, () => [points[0]![0], points[0]![1]]);
  }
  const out: Vec2[] = [];
  let seg = 0;
  for (let k = 0; k < n; k++) {
    const target = (total * k) / (n - 1);
    while (seg < arc.length - 2 && arc[seg + 1]! < target) seg++;
    const span = arc[seg + 1]! - arc[seg]!;
    const frac = span < 1e-12 ? 0 : (target - arc[seg]!) / span;
    const [ax, ay] = points[seg]!;
    const [bx, by] = points[seg + 1]!;
    out.push([ax + frac * (bx - ax), ay + frac * (by - ay)]);
  }
  return out;
}

/** Canvas pixels to the unit square the encoder was trained on. */
export function normalizePoints(
  points: readonly { x: number; y: number }[],
  width: number,
  height: number,
): Vec2[] {
  return points.map((p) => [p.x / width, p.y / height]);
}

/** Resample a recorded stroke into the wire format. */
export function strokeToWire(
  stroke: CanvasStroke,
  width: number,
  height: number,
  nPoints: number,
): Vec2[] {
  return resampleStroke(normalizePoints(stroke.points, width, height), nPoints);
}
