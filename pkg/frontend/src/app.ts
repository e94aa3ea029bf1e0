// Browser entry point: sketch, steer, generate, watch.
//
// All rules live in the headless models (SketchPad, Session, Timeline);
// this file only binds them to DOM elements and canvases. Served as a
// plain ES module; the API base can be overridden by setting
// window.STICKMOTION_API before loading the script.

import { ApiClient, ApiRequestError, type ServerConfig, type SlotName, type Vec2 } from "./api.js";
import { SketchPad, REQUIRED_STROKES } from "./sketchpad.js";
import { Session, fromDocument, toDocument, type SessionDocument } from "./session.js";
import { BONE_EDGES, Player, Timeline, frontProject } from "./playback.js";
import { resampleStroke, normalizePoints } from "./strokes.js";

const PAD_SIZE = 320;
const VIEW_SIZE = 320;
const THUMB_SIZE = 96;

declare global {
  interface Window {
    STICKMOTION_API?: string;
  }
}

document.body.innerHTML = `
  <h1>stickmotion</h1>
  <p id="status">loading model config…</p>

  <div style="display:flex; gap:24px; flex-wrap:wrap;">
    <section>
      <h2>Sketch</h2>
      <canvas id="pad" width="${PAD_SIZE}" height="${PAD_SIZE}"
              style="border:1px solid #444; touch-action:none;"></canvas>
      <div id="padWarning" style="color:#b00; min-height:1.2em;"></div>
      <div>
        <span id="strokeCount">0/${REQUIRED_STROKES} strokes</span>
        <button id="undoBtn">Undo</button>
        <button id="redoBtn">Redo</button>
        <button id="clearBtn">Clear</button>
      </div>
      <div style="margin-top:8px;">
        <label>position
          <select id="positionSel">
            <option value="start">start</option>
            <option value="middle" selected>middle</option>
            <option value="end">end</option>
          </select>
        </label>
        <button id="saveStickmanBtn" disabled>Save stickman</button>
      </div>
      <div id="stickmanChips" style="margin-top:8px;"></div>
    </section>

    <section>
      <h2>Steer</h2>
      <div>
        <label>text <input id="textInput" size="32" placeholder="a person squats"></label>
        <div id="textIssue" style="color:#b00; min-height:1.2em;"></div>
      </div>
      <div>
        <label>guidance w
          <input id="wSlider" type="range" min="1.1" max="8" step="0.1" value="2.5">
        </label>
        <span id="wValue">2.5</span>
      </div>
      <div>
        <label>stickman preference p
          <input id="pSlider" type="range" min="0" max="1" step="0.05" value="0.2">
        </label>
        <span id="pValue">0.2</span>
      </div>
      <div>
        <label>frames <input id="lengthInput" type="number" style="width:5em;"></label>
        <label>seed <input id="seedInput" type="number" min="0" style="width:7em;" value="0"></label>
        <label><input id="pinSeed" type="checkbox" checked> pin seed</label>
      </div>
      <div id="clampNote" style="color:#850; min-height:1.2em;"></div>
      <div style="margin-top:8px;">
        <button id="generateBtn" disabled>Generate</button>
        <span id="genStatus"></span>
      </div>
      <div style="margin-top:8px;">
        <button id="saveSessionBtn">Save session</button>
        <input id="loadSessionInput" type="file" accept="application/json">
      </div>
    </section>

    <section>
      <h2>Playback</h2>
      <canvas id="view" width="${VIEW_SIZE}" height="${VIEW_SIZE}"
              style="border:1px solid #444;"></canvas>
      <canvas id="timeline" width="${VIEW_SIZE}" height="48"
              style="display:block; border:1px solid #999; margin-top:4px;"></canvas>
      <div>
        <button id="playBtn" disabled>Play</button>
        <span id="frameLabel"></span>
      </div>
      <div id="thumbs" style="display:flex; gap:12px; margin-top:8px;"></div>
    </section>
  </div>
`;

const $ = <T extends HTMLElement>(id: string): T => document.getElementById(id) as T;

const padCanvas = $<HTMLCanvasElement>("pad");
const padCtx = padCanvas.getContext("2d")!;
const viewCanvas = $<HTMLCanvasElement>("view");
const viewCtx = viewCanvas.getContext("2d")!;
const timelineCanvas = $<HTMLCanvasElement>("timeline");
const timelineCtx = timelineCanvas.getContext("2d")!;

const pad = new SketchPad();
const client = new ApiClient(window.STICKMOTION_API ?? "/api");

let session: Session | null = null;
let config: ServerConfig | null = null;
let timeline: Timeline | null = null;
let player: Player | null = null;
let pending = false;

// ---------------------------------------------------------------------------
// sketchpad drawing

function drawPolyline(ctx: CanvasRenderingContext2D, pts: Array<{ x: number; y: number }>): void {
  if (pts.length < 2) return;
  ctx.beginPath();
  ctx.moveTo(pts[0]!.x, pts[0]!.y);
  for (let i = 1; i < pts.length; i++) ctx.lineTo(pts[i]!.x, pts[i]!.y);
  ctx.stroke();
}

pad.addEventListener("changed", () => {
  padCtx.clearRect(0, 0, PAD_SIZE, PAD_SIZE);
  padCtx.lineWidth = 2;
  padCtx.lineJoin = "round";
  padCtx.lineCap = "round";
  padCtx.strokeStyle = "#222";
  for (const stroke of pad.strokes) drawPolyline(padCtx, stroke.points);
  if (pad.live) {
    padCtx.strokeStyle = "#07c";
    drawPolyline(padCtx, pad.live);
  }
  $("padWarning").textContent = pad.warning ?? "";
  $("strokeCount").textContent = `${pad.strokes.length}/${REQUIRED_STROKES} strokes`;
  $<HTMLButtonElement>("saveStickmanBtn").disabled = !pad.complete;
  refreshGenerateGate();
});

padCanvas.addEventListener("pointerdown", (e) => {
  padCanvas.setPointerCapture(e.pointerId);
  pad.pointerDown(e.offsetX, e.offsetY, e.timeStamp);
});
padCanvas.addEventListener("pointermove", (e) => pad.pointerMove(e.offsetX, e.offsetY, e.timeStamp));
padCanvas.addEventListener("pointerup", () => pad.pointerUp());
padCanvas.addEventListener("pointercancel", () => pad.pointerUp());

$("undoBtn").addEventListener("click", () => pad.undo());
$("redoBtn").addEventListener("click", () => pad.redo());
$("clearBtn").addEventListener("click", () => pad.clear());

// ---------------------------------------------------------------------------
// session controls

function refreshChips(): void {
  if (!session) return;
  const holder = $("stickmanChips");
  holder.innerHTML = "";
  for (const entry of session.stickmen) {
    const chip = document.createElement("span");
    chip.style.cssText = "border:1px solid #888; padding:2px 6px; margin-right:6px;";
    chip.textContent = `${entry.position} `;
    const x = document.createElement("button");
    x.textContent = "×";
    x.addEventListener("click", () => {
      session!.removeStickman(entry.position);
      refreshChips();
      refreshGenerateGate();
    });
    chip.append(x);
    holder.append(chip);
  }
}

function refreshGenerateGate(): void {
  const btn = $<HTMLButtonElement>("generateBtn");
  if (!session || pending) {
    btn.disabled = true;
    return;
  }
  const issues = session.validate();
  const textIssue = issues.find((i) => i.field === "text");
  $("textIssue").textContent = textIssue ? textIssue.message : "";
  btn.disabled = issues.length > 0;
  btn.title = issues.map((i) => `${i.code}: ${i.message}`).join("\n");
}

$("saveStickmanBtn").addEventListener("click", () => {
  if (!session || !pad.complete) return;
  const position = $<HTMLSelectElement>("positionSel").value as SlotName;
  session.addStickman(position, pad.take(), { width: PAD_SIZE, height: PAD_SIZE });
  refreshChips();
  refreshGenerateGate();
});

$("textInput").addEventListener("input", () => {
  if (!session) return;
  session.text = $<HTMLInputElement>("textInput").value;
  refreshGenerateGate();
});

function showClampNote(): void {
  if (!session) return;
  $("clampNote").textContent = session.notes[session.notes.length - 1] ?? "";
}

$("wSlider").addEventListener("input", () => {
  if (!session) return;
  const v = session.setW(Number($<HTMLInputElement>("wSlider").value));
  $("wValue").textContent = v.toFixed(2);
  showClampNote();
});
$("pSlider").addEventListener("input", () => {
  if (!session) return;
  const v = session.setPStick(Number($<HTMLInputElement>("pSlider").value));
  $("pValue").textContent = v.toFixed(2);
  showClampNote();
});
$("lengthInput").addEventListener("change", () => {
  if (!session) return;
  const v = session.setLength(Number($<HTMLInputElement>("lengthInput").value));
  $<HTMLInputElement>("lengthInput").value = String(v);
  showClampNote();
  refreshGenerateGate();
});
$("seedInput").addEventListener("change", () => {
  if (!session) return;
  session.seed = Math.max(0, Math.floor(Number($<HTMLInputElement>("seedInput").value) || 0));
  $<HTMLInputElement>("seedInput").value = String(session.seed);
});
$("pinSeed").addEventListener("change", () => {
  if (!session) return;
  session.pinSeed = $<HTMLInputElement>("pinSeed").checked;
});

// ---------------------------------------------------------------------------
// generation and playback

function drawSkeleton(ctx: CanvasRenderingContext2D, canvasPoints: Vec2[], size: number): void {
  ctx.strokeStyle = "#06a";
  ctx.lineWidth = 2;
  for (const [a, b] of BONE_EDGES) {
    const pa = canvasPoints[a]!;
    const pb = canvasPoints[b]!;
    ctx.beginPath();
    ctx.moveTo(pa[0] * size, pa[1] * size);
    ctx.lineTo(pb[0] * size, pb[1] * size);
    ctx.stroke();
  }
}

function drawStickmanThumb(ctx: CanvasRenderingContext2D, strokes: Vec2[][], size: number): void {
  ctx.strokeStyle = "#222";
  ctx.lineWidth = 1.5;
  for (const stroke of strokes) {
    ctx.beginPath();
    ctx.moveTo(stroke[0]![0] * size, stroke[0]![1] * size);
    for (const [x, y] of stroke.slice(1)) ctx.lineTo(x * size, y * size);
    ctx.stroke();
  }
}

function renderThumbs(): void {
  const holder = $("thumbs");
  holder.innerHTML = "";
  if (!session || !timeline || !config) return;
  for (const entry of session.stickmen) {
    const index = timeline.response.argmax[entry.position];
    if (index === undefined) continue;
    const box = document.createElement("div");
    box.innerHTML = `<div>${entry.position} → frame ${index}</div>`;
    const sketch = document.createElement("canvas");
    sketch.width = sketch.height = THUMB_SIZE;
    const frame = document.createElement("canvas");
    frame.width = frame.height = THUMB_SIZE;
    const wire = entry.strokes.map((s) =>
      resampleStroke(
        normalizePoints(s.points, entry.canvas.width, entry.canvas.height),
        config!.points_per_stroke,
      ),
    );
    drawStickmanThumb(sketch.getContext("2d")!, wire, THUMB_SIZE);
    drawSkeleton(frame.getContext("2d")!, frontProject(timeline.frame(index)), THUMB_SIZE);
    box.append(sketch, frame);
    holder.append(box);
  }
}

function renderTimeline(): void {
  timelineCtx.clearRect(0, 0, timelineCanvas.width, timelineCanvas.height);
  if (!timeline || !player) return;
  const w = timelineCanvas.width;
  const h = timelineCanvas.height;
  timelineCtx.strokeStyle = "#bbb";
  for (const p of timeline.positions()) {
    timelineCtx.beginPath();
    timelineCtx.moveTo(p * w, h * 0.45);
    timelineCtx.lineTo(p * w, h * 0.65);
    timelineCtx.stroke();
  }
  timelineCtx.fillStyle = "#b00";
  timelineCtx.font = "bold 13px sans-serif";
  timelineCtx.textAlign = "center";
  for (const m of timeline.markers()) {
    const x = ((m.index + 0.5) / timeline.length) * w;
    timelineCtx.fillText(m.label, x, h * 0.35);
    timelineCtx.fillRect(x - 1, h * 0.4, 2, h * 0.3);
  }
  const cx = ((Math.floor(player.cursor) + 0.5) / timeline.length) * w;
  timelineCtx.fillStyle = "#07c";
  timelineCtx.fillRect(cx - 1.5, h * 0.4, 3, h * 0.45);
}

function renderFrame(): void {
  viewCtx.clearRect(0, 0, VIEW_SIZE, VIEW_SIZE);
  if (!player || !timeline) return;
  drawSkeleton(viewCtx, frontProject(player.frame()), VIEW_SIZE);
  $("frameLabel").textContent =
    `frame ${Math.floor(player.cursor)} / ${timeline.length - 1}`;
}

let lastTick = performance.now();
function tick(now: number): void {
  const dt = (now - lastTick) / 1000;
  lastTick = now;
  if (player) {
    player.advance(dt);
    renderFrame();
    renderTimeline();
  }
  requestAnimationFrame(tick);
}
requestAnimationFrame(tick);

timelineCanvas.addEventListener("click", (e) => {
  if (!player || !timeline) return;
  const frame = Math.floor((e.offsetX / timelineCanvas.width) * timeline.length);
  player.seek(frame);
  renderFrame();
  renderTimeline();
});

$("playBtn").addEventListener("click", () => {
  if (!player) return;
  if (player.playing) {
    player.pause();
    $("playBtn").textContent = "Play";
  } else {
    player.play();
    $("playBtn").textContent = "Pause";
  }
});

$("generateBtn").addEventListener("click", () => {
  void runGenerate();
});

async function runGenerate(): Promise<void> {
  if (!session || pending) return;
  session.seedForGenerate();
  $<HTMLInputElement>("seedInput").value = String(session.seed);
  const request = session.buildRequest();
  pending = true;
  refreshGenerateGate();
  $("genStatus").textContent = "generating…";
  try {
    const { response, seconds } = await client.generate(request);
    session.lastResponse = response;
    timeline = new Timeline(response);
    player = new Player(timeline);
    player.play();
    $<HTMLButtonElement>("playBtn").disabled = false;
    $("playBtn").textContent = "Pause";
    $("genStatus").textContent =
      seconds === null ? "done" : `done in ${seconds.toFixed(1)}s (seed ${response.seed})`;
    renderThumbs();
  } catch (err) {
    if (err instanceof ApiRequestError) {
      $("genStatus").textContent = `${err.code} at ${err.field}: ${err.message}`;
    } else {
      $("genStatus").textContent = `request failed: ${String(err)}`;
    }
  } finally {
    pending = false;
    refreshGenerateGate();
  }
}

// ---------------------------------------------------------------------------
// session documents

$("saveSessionBtn").addEventListener("click", () => {
  if (!session) return;
  const doc = toDocument(session);
  const blob = new Blob([JSON.stringify(doc, null, 2)], { type: "application/json" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = "stickmotion-session.json";
  a.click();
  URL.revokeObjectURL(a.href);
});

$("loadSessionInput").addEventListener("change", async () => {
  const input = $<HTMLInputElement>("loadSessionInput");
  const file = input.files?.[0];
  if (!file || !config) return;
  const doc = JSON.parse(await file.text()) as SessionDocument;
  session = fromDocument(doc, config);
  $<HTMLInputElement>("textInput").value = session.text;
  $<HTMLInputElement>("wSlider").value = String(session.mixture.w);
  $("wValue").textContent = session.mixture.w.toFixed(2);
  $<HTMLInputElement>("pSlider").value = String(session.mixture.pStick);
  $("pValue").textContent = session.mixture.pStick.toFixed(2);
  $<HTMLInputElement>("lengthInput").value = String(session.length);
  $<HTMLInputElement>("seedInput").value = String(session.seed);
  refreshChips();
  refreshGenerateGate();
});

// ---------------------------------------------------------------------------
// boot

async function boot(): Promise<void> {
  try {
    config = await client.config();
  } catch (err) {
    $("status").textContent =
      `cannot reach the generation server (${String(err)}); start it with: stickmotion serve`;
    return;
  }
  session = new Session(config);
  $<HTMLInputElement>("lengthInput").value = String(session.length);
  $<HTMLInputElement>("wSlider").value = String(session.mixture.w);
  $("wValue").textContent = session.mixture.w.toFixed(2);
  $<HTMLInputElement>("pSlider").value = String(session.mixture.pStick);
  $("pValue").textContent = session.mixture.pStick.toFixed(2);
  $("status").textContent =
    `model ${config.digests.model?.slice(0, 12) ?? "?"} · ${config.joints} joints · ` +
    `${config.fps} fps · frames ${config.length_bounds[0]}–${config.length_bounds[1]} · ` +
    `vocabulary of ${config.vocabulary.length} words`;
  $("status").title = config.vocabulary.join(" ");
  refreshGenerateGate();
}

void boot();
