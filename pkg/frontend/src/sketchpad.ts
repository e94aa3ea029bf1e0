// Headless sketchpad model: pointer gestures in, finalized strokes out.
//
// The DOM layer forwards pointer events here and redraws on "changed"
// events; keeping the rules (six-stroke cap, tap rejection, undo/redo) in a
// plain class makes them testable without a browser.

import { type CanvasStroke, type RawPoint, isDegenerate } from "./strokes.js";

/** A stickman is exactly six one-stroke lines. */
export const REQUIRED_STROKES = 6;

export type StrokeOutcome = "added" | "rejected-full" | "rejected-degenerate";

export class SketchPad extends EventTarget {
  /** Finalized strokes, oldest first. Immutable once pushed. */
  readonly strokes: CanvasStroke[] = [];
  /** Points of the stroke currently being drawn, null when pen is up. */
  live: RawPoint[] | null = null;
  /** Inline warning for the UI; cleared on the next accepted action. */
  warning: string | null = null;

  private readonly redoStack: CanvasStroke[] = [];

  get complete(): boolean {
    return this.strokes.length === REQUIRED_STROKES;
  }

  get canUndo(): boolean {
    return this.strokes.length > 0;
  }

  get canRedo(): boolean {
    return this.redoStack.length > 0;
  }

  /** Begins a stroke; a seventh is refused on pen-down, not pen-up. */
  pointerDown(x: number, y: number, t: number): boolean {
    if (this.complete) {
      this.warning = `a stickman is ${REQUIRED_STROKES} strokes; undo one to redraw`;
      this.emitChanged();
      return false;
    }
    this.warning = null;
    this.live = [{ x, y, t }];
    this.emitChanged();
    return true;
  }

  pointerMove(x: number, y: number, t: number): void {
    if (this.live === null) return;
    this.live.push({ x, y, t });
    this.emitChanged();
  }

  pointerUp(): StrokeOutcome {
    if (this.live === null) return "rejected-full";
    const points = this.live;
    this.live = null;
    if (isDegenerate(points)) {
      this.warning = "stroke too short, draw a line rather than a tap";
      this.emitChanged();
      return "rejected-degenerate";
    }
    this.strokes.push({ points, finalized: true });
    this.redoStack.length = 0; // new input invalidates redo history
    this.warning = null;
    this.emitChanged();
    return "added";
  }

  undo(): boolean {
    const stroke = this.strokes.pop();
    if (stroke === undefined) return false;
    this.redoStack.push(stroke);
    this.warning = null;
    this.emitChanged();
    return true;
  }

  redo(): boolean {
    const stroke = this.redoStack.pop();
    if (stroke === undefined) return false;
    this.strokes.push(stroke);
    this.emitChanged();
    return true;
  }

  clear(): void {
    this.strokes.length = 0;
    this.redoStack.length = 0;
    this.live = null;
    this.warning = null;
    this.emitChanged();
  }

  /** Hands off the six strokes and resets the pad for the next stickman. */
  take(): CanvasStroke[] {
    if (!this.complete) {
      throw new Error(`need ${REQUIRED_STROKES} strokes, have ${this.strokes.length}`);
    }
    const taken = this.strokes.slice();
    this.clear();
    return taken;
  }

  private emitChanged(): void {
    this.dispatchEvent(new Event("changed"));
  }
}
