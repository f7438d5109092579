// Canvas and HR-trace rendering from ClientState. The base bitmap is
// always the server's PPM; overlays never invent pixels the server
// has not acknowledged.

import { HR_WINDOW_MS, LEVEL_COLORS, quadrantShade, type ClientState } from "./state.js";
import type { CanvasGeometry } from "./types.js";
import type { PpmImage } from "./ppm.js";

export function drawStudio(
  ctx: CanvasRenderingContext2D,
  state: ClientState,
  bitmap: PpmImage | null,
  geom: CanvasGeometry,
): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  if (bitmap) {
    const image = new ImageData(bitmap.rgba, bitmap.width, bitmap.height);
    // draw at native resolution onto an offscreen, then scale
    const off = new OffscreenCanvas(bitmap.width, bitmap.height);
    const octx = off.getContext("2d")!;
    octx.putImageData(image, 0, 0);
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(off, 0, 0, width, height);
  } else {
    ctx.fillStyle = "#ffffff";
    ctx.fillRect(0, 0, width, height);
  }

  drawZones(ctx, state);
  drawOverlayStrokes(ctx, state, geom);
  drawLocalStroke(ctx, state, geom);
  drawRobot(ctx, state, geom);
}

function drawZones(ctx: CanvasRenderingContext2D, state: ClientState): void {
  const { width, height } = ctx.canvas;
  for (const col of [0, 1]) {
    for (const row of [0, 1]) {
      const shade = quadrantShade(state, col, row);
      if (shade === "allowed") continue;
      ctx.fillStyle = shade === "park" ? "rgba(80,120,220,0.16)" : "rgba(217,83,79,0.12)";
      ctx.fillRect((col * width) / 2, (row * height) / 2, width / 2, height / 2);
    }
  }
  const [ac, ar] = state.activeQuadrant;
  ctx.strokeStyle = "rgba(63,174,106,0.9)";
  ctx.lineWidth = 2;
  ctx.strokeRect((ac * width) / 2 + 1, (ar * height) / 2 + 1, width / 2 - 2, height / 2 - 2);
}

function mmToPx(geom: CanvasGeometry, w: number, h: number, p: [number, number]): [number, number] {
  return [(p[0] / geom.width_mm) * w, (p[1] / geom.height_mm) * h];
}

function drawOverlayStrokes(
  ctx: CanvasRenderingContext2D,
  state: ClientState,
  geom: CanvasGeometry,
): void {
  const { width, height } = ctx.canvas;
  for (const stroke of state.overlayStrokes) {
    ctx.strokeStyle = `rgb(${stroke.color[0]},${stroke.color[1]},${stroke.color[2]})`;
    ctx.lineWidth = Math.max(1, (stroke.width_mm / geom.width_mm) * width);
    ctx.lineCap = "round";
    ctx.beginPath();
    stroke.path.forEach((p, i) => {
      const [x, y] = mmToPx(geom, width, height, p);
      i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
    });
    ctx.stroke();
  }
}

function drawLocalStroke(
  ctx: CanvasRenderingContext2D,
  state: ClientState,
  geom: CanvasGeometry,
): void {
  if (!state.localStroke || state.localStroke.length < 2) return;
  const { width, height } = ctx.canvas;
  ctx.strokeStyle = "rgba(40,40,40,0.55)"; // pending: not yet acknowledged
  ctx.setLineDash([6, 4]);
  ctx.lineWidth = 2;
  ctx.beginPath();
  state.localStroke.forEach((p, i) => {
    const [x, y] = mmToPx(geom, width, height, p);
    i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
  });
  ctx.stroke();
  ctx.setLineDash([]);
}

function drawRobot(ctx: CanvasRenderingContext2D, state: ClientState, geom: CanvasGeometry): void {
  if (!state.robotPos || state.robotOutside) return;
  const { width, height } = ctx.canvas;
  const [x, y] = mmToPx(geom, width, height, state.robotPos);
  ctx.beginPath();
  ctx.arc(x, y, 9, 0, 2 * Math.PI);
  ctx.fillStyle = state.mode === "painting" ? "rgba(63,174,106,0.9)" : "rgba(120,120,120,0.9)";
  ctx.fill();
  ctx.strokeStyle = "#222";
  ctx.lineWidth = 2;
  ctx.stroke();
}

export function drawHrTrace(ctx: CanvasRenderingContext2D, state: ClientState): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, width, height);
  const series = state.hrSeries;
  if (!series.length) return;

  const tEnd = series[series.length - 1].t;
  const tStart = tEnd - HR_WINDOW_MS;
  const lo = 40;
  const hi = 140;
  const xOf = (t: number) => ((t - tStart) / HR_WINDOW_MS) * width;
  const yOf = (bpm: number) => height - ((Math.min(Math.max(bpm, lo), hi) - lo) / (hi - lo)) * height;

  if (state.arousal) {
    const y = yOf(state.arousal.threshold_bpm);
    ctx.strokeStyle = "rgba(217,83,79,0.7)";
    ctx.setLineDash([4, 4]);
    ctx.beginPath();
    ctx.moveTo(0, y);
    ctx.lineTo(width, y);
    ctx.stroke();
    ctx.setLineDash([]);
  }

  ctx.strokeStyle = "#5ec8e5";
  ctx.lineWidth = 2;
  ctx.beginPath();
  series.forEach((pt, i) => {
    const x = xOf(pt.t);
    const y = yOf(pt.bpm);
    i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
  });
  ctx.stroke();
}

export function modeBadge(state: ClientState): { text: string; color: string } {
  const level = state.arousal?.level ?? "neutral";
  const color =
    state.mode === "withdrawn" || state.mode === "stopped"
      ? LEVEL_COLORS.aroused
      : LEVEL_COLORS[level] ?? LEVEL_COLORS.neutral;
  return { text: state.mode.toUpperCase(), color };
}
