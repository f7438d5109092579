// Wire types mirroring the backend's snapshot and event schemas.

export type QuadrantRef = [number, number]; // [col, row], 0 = left/top

export interface HrPoint {
  timestamp_ms: number;
  bpm: number;
  confidence: number;
}

export interface ArousalInfo {
  level: "neutral" | "near_threshold" | "aroused";
  predicted_bpm: number;
  threshold_bpm: number;
  at_ms: number;
}

export interface EventRecord {
  seq: number;
  at_ms: number;
  type: string;
  payload: Record<string, unknown>;
}

export interface Snapshot {
  mode: string;
  canvas: { width_mm: number; height_mm: number; px_per_mm: number };
  pos: [number, number];
  outside: boolean;
  last_hr: HrPoint | null;
  arousal: ArousalInfo | null;
  threshold_bpm: number | null;
  baseline: { mu_bpm: number; sigma_bpm: number; n_samples: number; calibrated: boolean } | null;
  active_quadrant: QuadrantRef;
  paint_allowed: QuadrantRef[];
  park: QuadrantRef | null;
  pending_count: number;
  deferred_count: number;
  palette_index: number;
  paint_remaining_mm: number;
  canvas_digest: string | null;
  canvas_version: number;
  seq: number;
  now_ms: number;
  recent_events: EventRecord[];
}

export type ServerMessage =
  | { type: "snapshot"; data: Snapshot }
  | { type: "event"; corr?: string; data: EventRecord | { accepted: boolean; seq: number } }
  | { type: "error"; corr?: string; detail: string; terminal?: boolean };

export interface StrokeOverlay {
  seq: number;
  color: [number, number, number];
  width_mm: number;
  path: [number, number][];
}

export interface CanvasGeometry {
  width_mm: number;
  height_mm: number;
}

// A gesture waiting to be sent (possibly queued while offline).
export type Gesture =
  | { kind: "command"; text: string }
  | { kind: "artist_stroke"; color: [number, number, number]; width_mm: number; path: [number, number][] }
  | { kind: "robot_move"; x_mm?: number; y_mm?: number; outside?: boolean };
