import { describe, expect, it } from "vitest";

import { REQUIRED_STROKES, SketchPad } from "../src/sketchpad.js";
import { feedStroke, stickmanGesture } from "./helpers.js";

describe("SketchPad", () => {
  it("accepts six strokes and reports completion", () => {
    const pad = new SketchPad();
    const gesture = stickmanGesture();
    for (let i = 0; i < gesture.length; i++) {
      expect(pad.complete).toBe(false);
      feedStroke(pad, gesture[i]!);
      expect(pad.strokes).toHaveLength(i + 1);
    }
    expect(pad.complete).toBe(true);
  });

  it("refuses a seventh stroke with an inline warning", () => {
    const pad = new SketchPad();
    for (const stroke of stickmanGesture()) feedStroke(pad, stroke);
    expect(pad.pointerDown(10, 10, 9999)).toBe(false);
    expect(pad.strokes).toHaveLength(REQUIRED_STROKES);
    expect(pad.live).toBeNull();
    expect(pad.warning).toMatch(/6 strokes/);
  });

  it("rejects a tap as degenerate", () => {
    const pad = new SketchPad();
    pad.pointerDown(50, 50, 0);
    expect(pad.pointerUp()).toBe("rejected-degenerate");
    expect(pad.strokes).toHaveLength(0);
    expect(pad.warning).toMatch(/too short/);
  });

  it("undo removes the latest stroke", () => {
    const pad = new SketchPad();
    const gesture = stickmanGesture();
    for (const stroke of gesture.slice(0, 3)) feedStroke(pad, stroke);
    expect(pad.undo()).toBe(true);
    expect(pad.strokes).toHaveLength(2);
    expect(pad.strokes[0]!.points[0]).toEqual(gesture[0]![0]);
  });

  it("redo restores the undone stroke in order", () => {
    const pad = new SketchPad();
    const gesture = stickmanGesture();
    for (const stroke of gesture.slice(0, 3)) feedStroke(pad, stroke);
    pad.undo();
    pad.undo();
    expect(pad.redo()).toBe(true);
    expect(pad.strokes).toHaveLength(2);
    expect(pad.strokes[1]!.points).toEqual(gesture[1]!);
  });

  it("a new stroke clears the redo history", () => {
    const pad = new SketchPad();
    const gesture = stickmanGesture();
    feedStroke(pad, gesture[0]!);
    feedStroke(pad, gesture[1]!);
    pad.undo();
    expect(pad.canRedo).toBe(true);
    feedStroke(pad, gesture[2]!);
    expect(pad.canRedo).toBe(false);
    expect(pad.redo()).toBe(false);
  });

  it("undo on an empty pad is a no-op", () => {
    const pad = new SketchPad();
    expect(pad.undo()).toBe(false);
  });

  it("take hands off six strokes and resets the pad", () => {
    const pad = new SketchPad();
    for (const stroke of stickmanGesture()) feedStroke(pad, stroke);
    const taken = pad.take();
    expect(taken).toHaveLength(REQUIRED_STROKES);
    expect(taken.every((s) => s.finalized)).toBe(true);
    expect(pad.strokes).toHaveLength(0);
    expect(pad.complete).toBe(false);
  });

  it("take before six strokes throws", () => {
    const pad = new SketchPad();
    feedStroke(pad, stickmanGesture()[0]!);
    expect(() => pad.take()).toThrow(/need 6 strokes/);
  });

  it("emits changed events for drawing updates", () => {
    const pad = new SketchPad();
    let events = 0;
    pad.addEventListener("changed", () => events++);
    feedStroke(pad, stickmanGesture()[0]!);
    // one down + moves + one up
    expect(events).toBe(stickmanGesture()[0]!.length + 1);
  });
});
