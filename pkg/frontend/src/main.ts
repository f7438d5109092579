// Studio wiring: one socket, one state, display-rate rendering.

import { pointerToMm, robotDragRelease, strokeGesture } from "./gestures.js";
import { StudioClient } from "./net.js";
import { parsePpm, type PpmImage } from "./ppm.js";
import { drawHrTrace, drawStudio, modeBadge } from "./render.js";
import { speechAvailable, startSpeechCapture } from "./speech.js";
import type { CanvasGeometry } from "./types.js";

const params = new URLSearchParams(location.search);
const baseUrl = params.get("server") ?? `http://${location.hostname}:8080`;

const canvas = document.getElementById("board") as HTMLCanvasElement;
const trace = document.getElementById("hr-trace") as HTMLCanvasElement;
const badge = document.getElementById("mode-badge") as HTMLSpanElement;
const statusEl = document.getElementById("conn-status") as HTMLSpanElement;
const pendingEl = document.getElementById("pending") as HTMLSpanElement;
const commandBox = document.getElementById("command") as HTMLInputElement;
const speechBtn = document.getElementById("speech") as HTMLButtonElement;
const statsEl = document.getElementById("stats") as HTMLDivElement;

// geometry comes from the first canvas fetch; default letter-ish sheet
let geom: CanvasGeometry = { width_mm: 280, height_mm: 216 };
let bitmap: PpmImage | null = null;
let lastDigest: string | null = null;
let dirty = true;

const client = new StudioClient({
  baseUrl,
  onChange: () => {
    const snapGeom = client.state.snapshot?.canvas;
    if (snapGeom) geom = { width_mm: snapGeom.width_mm, height_mm: snapGeom.height_mm };
    dirty = true;
  },
});
client.connect();

// grammar hints for the command box
void (async () => {
  try {
    const res = await fetch(`${baseUrl}/grammar`);
    if (!res.ok) return;
    const table = (await res.json()) as { direct: { phrase: string }[]; patterns: string[] };
    const phrases = table.direct.slice(0, 4).map((d) => `"${d.phrase}"`).join(", ");
    commandBox.placeholder = `draw a ${table.patterns.join("/")}… or ${phrases}…`;
  } catch {
    // offline start: keep the default placeholder
  }
})();

async function refreshCanvasBitmap(): Promise<void> {
  try {
    const bytes = await client.fetchCanvas();
    bitmap = parsePpm(bytes);
    canvas.width = bitmap.width;
    canvas.height = bitmap.height;
    dirty = true;
  } catch {
    // server not up yet; retry on the next digest change
  }
}

function tick(): void {
  const state = client.state;
  const digest = state.snapshot?.canvas_digest ?? null;
  if (digest !== lastDigest) {
    lastDigest = digest;
    void refreshCanvasBitmap();
  }
  if (dirty) {
    dirty = false;
    const ctx = canvas.getContext("2d")!;
    drawStudio(ctx, state, bitmap, geom);
    drawHrTrace(trace.getContext("2d")!, state);
    const b = modeBadge(state);
    badge.textContent = b.text;
    badge.style.background = b.color;
    statusEl.textContent = state.connection;
    statusEl.className = `pill ${state.connection}`;
    pendingEl.textContent = client.pending.length ? `${client.pending.length} queued` : "";
    const hr = state.hrSeries[state.hrSeries.length - 1];
    const arousal = state.arousal;
    statsEl.textContent = [
      hr ? `HR ${hr.bpm.toFixed(1)} bpm` : "HR --",
      arousal ? `threshold ${arousal.threshold_bpm.toFixed(1)}` : "",
      state.snapshot ? `pending ${state.snapshot.pending_count}` : "",
      state.snapshot ? `palette #${state.paletteIndex}` : "",
    ]
      .filter(Boolean)
      .join("  ·  ");
  }
  requestAnimationFrame(tick);
}
requestAnimationFrame(tick);

// ---- painting gestures --------------------------------------------------

let drawing: [number, number][] | null = null;

canvas.addEventListener("pointerdown", (e) => {
  if (robotDrag) return;
  canvas.setPointerCapture(e.pointerId);
  drawing = [pointerToMm(e.clientX, e.clientY, canvas.getBoundingClientRect(), geom)];
  client.state.localStroke = drawing;
  dirty = true;
});

canvas.addEventListener("pointermove", (e) => {
  if (!drawing) return;
  drawing.push(pointerToMm(e.clientX, e.clientY, canvas.getBoundingClientRect(), geom));
  dirty = true;
});

canvas.addEventListener("pointerup", () => {
  if (!drawing) return;
  const path = drawing;
  drawing = null;
  client.state.localStroke = null;
  if (path.length >= 2) {
    void client.send(strokeGesture(path, [20, 60, 160], 1.5));
  }
  dirty = true;
});

// ---- robot marker drag ---------------------------------------------------

let robotDrag = false;
const robotBtn = document.getElementById("drag-robot") as HTMLButtonElement;
robotBtn.addEventListener("click", () => {
  robotDrag = !robotDrag;
  robotBtn.classList.toggle("active", robotDrag);
});

window.addEventListener("pointerup", (e) => {
  if (!robotDrag) return;
  robotDrag = false;
  robotBtn.classList.remove("active");
  const [x, y] = pointerToMm(e.clientX, e.clientY, canvas.getBoundingClientRect(), geom);
  void client.send(robotDragRelease(x, y, geom));
});

// ---- commands and speech ---------------------------------------------------

commandBox.addEventListener("keydown", (e) => {
  if (e.key === "Enter" && commandBox.value.trim()) {
    void client.send({ kind: "command", text: commandBox.value.trim() });
    commandBox.value = "";
  }
});

let stopSpeech: (() => void) | null = null;
if (!speechAvailable()) {
  speechBtn.disabled = true;
  speechBtn.title = "speech capture not available in this browser";
}
speechBtn.addEventListener("click", () => {
  if (stopSpeech) {
    stopSpeech();
    stopSpeech = null;
    speechBtn.classList.remove("active");
    return;
  }
  stopSpeech = startSpeechCapture((text) => {
    void client.send({ kind: "command", text });
  });
  if (stopSpeech) speechBtn.classList.add("active");
});

// learn the millimeter geometry from the session config via /grammar?
// the canvas aspect comes with the first bitmap; width_mm is config
// territory, so expose it as a query param for non-default canvases
const wmm = params.get("width_mm");
const hmm = params.get("height_mm");
if (wmm && hmm) geom = { width_mm: Number(wmm), height_mm: Number(hmm) };

void refreshCanvasBitmap();
