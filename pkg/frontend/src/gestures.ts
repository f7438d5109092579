// Pointer gestures -> wire payloads: stroke downsampling, robot drag.

import type { CanvasGeometry, Gesture } from "./types.js";

export const MIN_POINT_GAP_MM = 2.0;

/**
 * Thin a freehand polyline to at most one point per MIN_POINT_GAP_MM
 * of euclidean travel. The first point is always kept; later points
 * are kept only once they are at least the gap away from the last
 * kept point, so a 40 mm curve transmits at most 20 points.
 */
export function downsampleStroke(
  points: [number, number][],
  minGapMm: number = MIN_POINT_GAP_MM,
): [number, number][] {
  if (points.length <= 1) return [...points];
  const kept: [number, number][] = [points[0]];
  for (let i = 1; i < points.length; i++) {
    const [px, py] = kept[kept.length - 1];
    const [x, y] = points[i];
    if (Math.hypot(x - px, y - py) >= minGapMm) {
      kept.push(points[i]);
    }
  }
  if (kept.length < 2) kept.push(points[points.length - 1]);
  return kept;
}

/** Map a pointer position inside the canvas element to millimeters. */
export function pointerToMm(
  clientX: number,
  clientY: number,
  rect: { left: number; top: number; width: number; height: number },
  geom: CanvasGeometry,
): [number, number] {
  const x = ((clientX - rect.left) / rect.width) * geom.width_mm;
  const y = ((clientY - rect.top) / rect.height) * geom.height_mm;
  return [x, y];
}

export function insideCanvas(x_mm: number, y_mm: number, geom: CanvasGeometry): boolean {
  return x_mm >= 0 && x_mm <= geom.width_mm && y_mm >= 0 && y_mm <= geom.height_mm;
}

/**
 * Robot marker drag release: a drop beyond the canvas bounds is the
 * disengage gesture, anything else is a reposition.
 */
export function robotDragRelease(x_mm: number, y_mm: number, geom: CanvasGeometry): Gesture {
  if (!insideCanvas(x_mm, y_mm, geom)) {
    return { kind: "robot_move", outside: true };
  }
  return { kind: "robot_move", x_mm, y_mm };
}

export function strokeGesture(
  path: [number, number][],
  color: [number, number, number],
  widthMm: number,
): Gesture {
  return { kind: "artist_stroke", color, width_mm: widthMm, path: downsampleStroke(path) };
}
