// Client state: a pure reducer over server messages.
//
// A snapshot replaces the authoritative view wholesale; events update
// it incrementally (HR series, mode badge, stroke overlay, zone
// shading). The rendered canvas is always the last server bitmap plus
// strokes the server has acknowledged as events - never speculative.

import type {
  ArousalInfo,
  EventRecord,
  QuadrantRef,
  ServerMessage,
  Snapshot,
  StrokeOverlay,
} from "./types.js";

export const HR_WINDOW_MS = 120_000;

export type Connection = "connecting" | "open" | "closed";

export interface ClientState {
  snapshot: Snapshot | null;
  mode: string;
  arousal: ArousalInfo | null;
  paintAllowed: QuadrantRef[];
  park: QuadrantRef | null;
  activeQuadrant: QuadrantRef;
  robotPos: [number, number] | null;
  robotOutside: boolean;
  paletteIndex: number;
  hrSeries: { t: number; bpm: number }[];
  overlayStrokes: StrokeOverlay[];
  localStroke: [number, number][] | null;
  connection: Connection;
  lastSeq: number;
  needsResync: boolean;
  canvasDigest: string | null;
  lastError: string | null;
}

export function initialState(): ClientState {
  return {
    snapshot: null,
    mode: "idle",
    arousal: null,
    paintAllowed: [],
    park: null,
    activeQuadrant: [0, 0],
    robotPos: null,
    robotOutside: false,
    paletteIndex: 0,
    hrSeries: [],
    overlayStrokes: [],
    localStroke: null,
    connection: "connecting",
    lastSeq: 0,
    needsResync: false,
    canvasDigest: null,
    lastError: null,
  };
}

function pushHr(state: ClientState, t: number, bpm: number): void {
  const last = state.hrSeries[state.hrSeries.length - 1];
  if (last && last.t === t) return; // snapshot and event may repeat a reading
  state.hrSeries.push({ t, bpm });
  const cutoff = t - HR_WINDOW_MS;
  while (state.hrSeries.length && state.hrSeries[0].t < cutoff) {
    state.hrSeries.shift();
  }
}

function applySnapshot(state: ClientState, snap: Snapshot): void {
  state.snapshot = snap;
  state.mode = snap.mode;
  state.arousal = snap.arousal;
  state.paintAllowed = snap.paint_allowed;
  state.park = snap.park;
  state.activeQuadrant = snap.active_quadrant;
  state.robotPos = snap.pos;
  state.robotOutside = snap.outside;
  state.paletteIndex = snap.palette_index;
  state.lastSeq = snap.seq;
  state.needsResync = false;
  if (snap.last_hr) pushHr(state, snap.last_hr.timestamp_ms, snap.last_hr.bpm);
  // strokes at or below the snapshot seq are baked into the server bitmap
  state.overlayStrokes = state.overlayStrokes.filter((s) => s.seq > snap.seq);
}

function applyEvent(state: ClientState, ev: EventRecord): void {
  if (ev.seq <= state.lastSeq) return; // duplicate
  if (state.lastSeq > 0 && ev.seq !== state.lastSeq + 1) {
    // a gap means we missed events: ask for a fresh snapshot
    state.needsResync = true;
  }
  state.lastSeq = ev.seq;
  const p = ev.payload as Record<string, any>;
  switch (ev.type) {
    case "hr_updated":
      pushHr(state, p.timestamp_ms as number, p.bpm as number);
      break;
    case "arousal_changed":
      state.arousal = {
        level: p.level,
        predicted_bpm: p.predicted_bpm,
        threshold_bpm: p.threshold_bpm,
        at_ms: p.at_ms,
      };
      break;
    case "state_changed":
      state.mode = p.to as string;
      break;
    case "artist_stroke":
      state.overlayStrokes.push({
        seq: ev.seq,
        color: p.color as [number, number, number],
        width_mm: p.width_mm as number,
        path: p.path as [number, number][],
      });
      break;
    case "robot_moved":
      if (p.outside) {
        state.robotOutside = true;
      } else {
        state.robotOutside = false;
        state.robotPos = [p.x_mm as number, p.y_mm as number];
      }
      break;
    default:
      break; // ticks, refills etc. surface through snapshots
  }
}

function isEventRecord(data: unknown): data is EventRecord {
  return typeof data === "object" && data !== null && "type" in data && "at_ms" in data;
}

/** Pure-by-copy reducer: returns a new state with the message applied. */
export function applyServerMessage(state: ClientState, msg: ServerMessage): ClientState {
  const next: ClientState = {
    ...state,
    hrSeries: [...state.hrSeries],
    overlayStrokes: [...state.overlayStrokes],
  };
  if (msg.type === "snapshot") {
    applySnapshot(next, msg.data);
  } else if (msg.type === "event") {
    if (isEventRecord(msg.data)) applyEvent(next, msg.data);
  } else if (msg.type === "error") {
    next.lastError = msg.detail;
    if (msg.terminal) {
      next.connection = "closed";
      next.needsResync = true;
    }
  }
  return next;
}

export const LEVEL_COLORS: Record<string, string> = {
  neutral: "#3fae6a",
  near_threshold: "#e2a23b",
  aroused: "#d9534f",
};

/** Quadrant shading for the canvas: allowed, blocked, park. */
export function quadrantShade(state: ClientState, col: number, row: number): "allowed" | "blocked" | "park" {
  if (state.park && state.park[0] === col && state.park[1] === row) return "park";
  const allowed = state.paintAllowed.some((q) => q[0] === col && q[1] === row);
  return allowed ? "allowed" : "blocked";
}
