import { describe, expect, it } from "vitest";

import {
  BONE_EDGES,
  JOINT_NAMES,
  MARKER_LABELS,
  PELVIS,
  Player,
  Timeline,
  chainHeight,
  frontProject,
} from "../src/playback.js";
import { makePose, makeResponse, seededRng, yawAndTranslate } from "./helpers.js";

describe("skeleton layout", () => {
  it("defines 17 joints and 16 bones", () => {
    expect(JOINT_NAMES).toHaveLength(17);
    expect(BONE_EDGES).toHaveLength(16);
  });
});

describe("frontProject", () => {
  it("puts the pelvis at canvas center", () => {
    const canvas = frontProject(makePose());
    expect(canvas[PELVIS]![0]).toBeCloseTo(0.5, 12);
    expect(canvas[PELVIS]![1]).toBeCloseTo(0.5, 12);
  });

  it("keeps the standing figure inside the canvas", () => {
    for (const [x, y] of frontProject(makePose(1.2))) {
      expect(x).toBeGreaterThan(0);
      expect(x).toBeLessThan(1);
      expect(y).toBeGreaterThan(0);
      expect(y).toBeLessThan(1);
    }
  });

  it("is invariant to world yaw and translation", () => {
    const rng = seededRng(11);
    for (let trial = 0; trial < 50; trial++) {
      const pose = makePose(rng() * 6);
      const yaw = (rng() - 0.5) * 2.5;
      const moved = yawAndTranslate(pose, yaw, [
        (rng() - 0.5) * 10,
        rng() * 3,
        (rng() - 0.5) * 10,
      ]);
      const a = frontProject(pose);
      const b = frontProject(moved);
      for (let j = 0; j < a.length; j++) {
        expect(Math.abs(a[j]![0] - b[j]![0])).toBeLessThan(1e-6);
        expect(Math.abs(a[j]![1] - b[j]![1])).toBeLessThan(1e-6);
      }
    }
  });

  it("rejects a pose with coincident hips", () => {
    const pose = makePose();
    pose[14] = [...pose[11]!];
    expect(() => frontProject(pose)).toThrow(/hip/);
  });
});

describe("chainHeight", () => {
  it("is unchanged by pose phase (bone lengths fixed)", () => {
    const rest = chainHeight(makePose(0));
    expect(chainHeight(yawAndTranslate(makePose(0), 1.1, [3, 0, -2]))).toBeCloseTo(rest, 12);
  });
});

describe("Timeline", () => {
  it("exposes one position per frame", () => {
    const t = new Timeline(makeResponse(80));
    expect(t.positions()).toHaveLength(80);
    expect(t.positions()[0]).toBeCloseTo(0.5 / 80);
    expect(t.positions()[79]).toBeCloseTo(79.5 / 80);
  });

  it("places S/M/E markers at the argmax indices", () => {
    const t = new Timeline(makeResponse(80, { start: 12, middle: 41, end: 70 }));
    expect(t.markers()).toEqual([
      { slot: "start", label: "S", index: 12 },
      { slot: "middle", label: "M", index: 41 },
      { slot: "end", label: "E", index: 70 },
    ]);
    expect(MARKER_LABELS.start).toBe("S");
  });

  it("omits markers for slots without a stickman", () => {
    const t = new Timeline(makeResponse(60, { middle: 30 }));
    expect(t.markers()).toEqual([{ slot: "middle", label: "M", index: 30 }]);
  });

  it("rejects a frame count that disagrees with length", () => {
    const bad = makeResponse(50);
    bad.frames.pop();
    expect(() => new Timeline(bad)).toThrow(/49 frames/);
  });
});

describe("Player", () => {
  it("advances at the response fps while playing", () => {
    const p = new Player(new Timeline(makeResponse(80)));
    p.play();
    p.advance(1);
    expect(p.cursor).toBeCloseTo(20, 9);
    p.advance(2.5);
    expect(p.cursor).toBeCloseTo(70, 9);
    p.advance(1); // wraps at 80
    expect(p.cursor).toBeCloseTo(10, 9);
  });

  it("holds still while paused", () => {
    const p = new Player(new Timeline(makeResponse(80)));
    p.advance(5);
    expect(p.cursor).toBe(0);
  });

  it("clamps seeks into range", () => {
    const p = new Player(new Timeline(makeResponse(80)));
    p.seek(400);
    expect(p.cursor).toBe(79);
    p.seek(-3);
    expect(p.cursor).toBe(0);
  });

  it("returns the frame under the cursor", () => {
    const response = makeResponse(80);
    const p = new Player(new Timeline(response));
    p.seek(41);
    expect(p.frame()).toBe(response.frames[41]);
  });
});
