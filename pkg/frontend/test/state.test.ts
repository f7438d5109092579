import { describe, expect, it } from "vitest";

import { applyServerMessage, initialState, quadrantShade, HR_WINDOW_MS } from "../src/state.js";
import type { EventRecord, ServerMessage, Snapshot } from "../src/types.js";

function snap(partial: Partial<Snapshot> = {}): Snapshot {
  return {
    mode: "painting",
    canvas: { width_mm: 280, height_mm: 216, px_per_mm: 2 },
    pos: [10, 10],
    outside: false,
    last_hr: null,
    arousal: null,
    threshold_bpm: null,
    baseline: null,
    active_quadrant: [0, 0],
    paint_allowed: [[0, 0], [1, 0], [0, 1], [1, 1]],
    park: null,
    pending_count: 0,
    deferred_count: 0,
    palette_index: 0,
    paint_remaining_mm: 400,
    canvas_digest: "abc",
    canvas_version: 1,
    seq: 10,
    now_ms: 1000,
    recent_events: [],
    ...partial,
  };
}

function ev(seq: number, type: string, payload: Record<string, unknown>): ServerMessage {
  return { type: "event", data: { seq, at_ms: seq * 100, type, payload } as EventRecord };
}

describe("applyServerMessage", () => {
  it("snapshot replaces the view wholesale", () => {
    let state = initialState();
    state = applyServerMessage(state, { type: "snapshot", data: snap({ mode: "withdrawn", park: [1, 1] }) });
    expect(state.mode).toBe("withdrawn");
    expect(state.park).toEqual([1, 1]);
    expect(state.lastSeq).toBe(10);
    expect(state.needsResync).toBe(false);
  });

  it("hr events append to the rolling series and trim to 120 s", () => {
    let state = initialState();
    state = applyServerMessage(state, { type: "snapshot", data: snap({ seq: 0 }) });
    for (let i = 0; i < 200; i++) {
      state = applyServerMessage(state, ev(i + 1, "hr_updated", {
        timestamp_ms: i * 1000, bpm: 70 + (i % 5), confidence: 0.9, n_peaks: 10, window_s: 10,
      }));
    }
    expect(state.hrSeries.length).toBeLessThanOrEqual(121);
    const tEnd = state.hrSeries[state.hrSeries.length - 1].t;
    expect(state.hrSeries[0].t).toBeGreaterThanOrEqual(tEnd - HR_WINDOW_MS);
  });

  it("state_changed updates the mode badge source", () => {
    let state = initialState();
    state = applyServerMessage(state, { type: "snapshot", data: snap({ seq: 0 }) });
    state = applyServerMessage(state, ev(1, "state_changed", { from: "painting", to: "withdrawn" }));
    expect(state.mode).toBe("withdrawn");
  });

  it("arousal_changed shades the diagonal quadrant via the next policy snapshot", () => {
    let state = initialState();
    state = applyServerMessage(state, {
      type: "snapshot",
      data: snap({ paint_allowed: [], park: [1, 1], active_quadrant: [0, 0], mode: "withdrawn" }),
    });
    expect(quadrantShade(state, 1, 1)).toBe("park");
    expect(quadrantShade(state, 0, 0)).toBe("blocked");
  });

  it("artist strokes overlay until a snapshot bakes them in", () => {
    let state = initialState();
    state = applyServerMessage(state, { type: "snapshot", data: snap({ seq: 0 }) });
    state = applyServerMessage(state, ev(1, "artist_stroke", {
      id: 5, author: "artist", color: [1, 2, 3], width_mm: 1.5, path: [[0, 0], [5, 5]],
    }));
    expect(state.overlayStrokes).toHaveLength(1);
    // a newer snapshot covers seq 1: the bitmap now contains the stroke
    state = applyServerMessage(state, { type: "snapshot", data: snap({ seq: 2 }) });
    expect(state.overlayStrokes).toHaveLength(0);
  });

  it("no phantom strokes: unacknowledged gestures never enter the overlay", () => {
    let state = initialState();
    state = applyServerMessage(state, { type: "snapshot", data: snap({ seq: 0 }) });
    // only server events mutate overlayStrokes; sending a gesture does not
    expect(state.overlayStrokes).toHaveLength(0);
  });

  it("seq gaps set the resync flag", () => {
    let state = initialState();
    state = applyServerMessage(state, { type: "snapshot", data: snap({ seq: 1 }) });
    state = applyServerMessage(state, ev(5, "state_changed", { from: "painting", to: "paused" }));
    expect(state.needsResync).toBe(true);
  });

  it("duplicate events are ignored", () => {
    let state = initialState();
    state = applyServerMessage(state, { type: "snapshot", data: snap({ seq: 3 }) });
    const before = state.mode;
    state = applyServerMessage(state, ev(2, "state_changed", { from: "painting", to: "stopped" }));
    expect(state.mode).toBe(before);
  });

  it("terminal errors close the connection and request resync", () => {
    let state = initialState();
    state = applyServerMessage(state, { type: "error", detail: "slow consumer", terminal: true });
    expect(state.connection).toBe("closed");
    expect(state.needsResync).toBe(true);
    expect(state.lastError).toMatch(/slow consumer/);
  });

  it("robot_moved events track the marker", () => {
    let state = initialState();
    state = applyServerMessage(state, { type: "snapshot", data: snap({ seq: 0 }) });
    state = applyServerMessage(state, ev(1, "robot_moved", { x_mm: 42, y_mm: 13 }));
    expect(state.robotPos).toEqual([42, 13]);
    state = applyServerMessage(state, ev(2, "robot_moved", { outside: true }));
    expect(state.robotOutside).toBe(true);
  });
});
