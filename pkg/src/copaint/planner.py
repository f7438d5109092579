"""Procedural stroke planning, zone filtering and position reprioritizing.

Prompts are keyword-matched against a small parametric pattern
library. Plans are plain data: operations here only move strokes
between the pending and deferred lists or reorder them, never mutate
geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .canvas import CanvasSpec, Quadrant, Stroke, Author, ZonePolicy, quadrant_of
from .errors import OutOfBounds, UnknownPattern

# margin added on top of the brush footprint when deciding which
# quadrants a stroke can bleed pixels into (supercover + lattice slop)
FOOTPRINT_SLOP_PX = 3.0

Polyline = list[tuple[float, float]]
Rect = tuple[float, float, float, float]  # x0, y0, x1, y1


@dataclass
class StrokePlan:
    prompt: str
    seed: int
    pending: list[Stroke] = field(default_factory=list)
    deferred: list[Stroke] = field(default_factory=list)
    palette_index: int = 0

    def all_strokes(self) -> list[Stroke]:
        return self.pending + self.deferred


# -- pattern library ------------------------------------------------------------

def _angle(seed: int) -> float:
    # deterministic rotation in [0, 2*pi) spread via the golden ratio
    return (seed * 0.6180339887498949) % 1.0 * 2.0 * math.pi


def _circle(rect: Rect, seed: int) -> list[Polyline]:
    x0, y0, x1, y1 = rect
    cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    r = min(x1 - x0, y1 - y0) / 2.0
    rho = _angle(seed)
    pts = [
        (cx + r * math.cos(rho + 2.0 * math.pi * k / 64), cy + r * math.sin(rho + 2.0 * math.pi * k / 64))
        for k in range(65)
    ]
    return [pts]


def _grid(rect: Rect, seed: int) -> list[Polyline]:
    x0, y0, x1, y1 = rect
    lines: list[Polyline] = []
    for i in (1, 2, 3):
        x = x0 + (x1 - x0) * i / 4.0
        lines.append([(x, y0), (x, y1)])
    for i in (1, 2, 3):
        y = y0 + (y1 - y0) * i / 4.0
        lines.append([(x0, y), (x1, y)])
    return lines


def _star(rect: Rect, seed: int) -> list[Polyline]:
    x0, y0, x1, y1 = rect
    cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    r_outer = min(x1 - x0, y1 - y0) / 2.0
    r_inner = r_outer * 0.4
    rho = _angle(seed) - math.pi / 2.0
    pts: Polyline = []
    for k in range(10):
        r = r_outer if k % 2 == 0 else r_inner
        a = rho + math.pi * k / 5.0
        pts.append((cx + r * math.cos(a), cy + r * math.sin(a)))
    pts.append(pts[0])
    return [pts]


def _flower(rect: Rect, seed: int) -> list[Polyline]:
    """Six petal arcs around the rect center plus a stem: 7 strokes."""
    x0, y0, x1, y1 = rect
    cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    reach = min(x1 - x0, y1 - y0) / 2.0
    petal_len = reach * 0.85
    spread = math.pi / 7.0
    rho = _angle(seed)
    petals: list[Polyline] = []
    for j in range(6):
        heading = rho + j * math.pi / 3.0
        pts: Polyline = []
        for s in range(17):
            t = s / 16.0
            r = petal_len * math.sin(math.pi * t)
            a = heading + spread * (t - 0.5)
            pts.append((cx + r * math.cos(a), cy + r * math.sin(a)))
        petals.append(pts)
    stem_bottom = (cx, min(y1, cy + reach))
    stem = [stem_bottom, (cx, cy)]
    return petals + [stem]


def _vase(rect: Rect, seed: int) -> list[Polyline]:
    """Body silhouette, base line and two handles: 4 strokes."""
    x0, y0, x1, y1 = rect
    cx = (x0 + x1) / 2.0
    w = (x1 - x0) * 0.5
    h = (y1 - y0) * 0.9
    top = y0 + (y1 - y0) * 0.05
    # half-profile widths from neck down to foot, as fractions of w/2
    profile = [0.35, 0.25, 0.3, 0.45, 0.5, 0.48, 0.4, 0.3, 0.28]
    body: Polyline = []
    for i, frac in enumerate(profile):
        y = top + h * i / (len(profile) - 1)
        body.append((cx - w / 2.0 * frac, y))
    for i, frac in enumerate(reversed(profile)):
        y = top + h * (len(profile) - 1 - i) / (len(profile) - 1)
        body.append((cx + w / 2.0 * frac, y))
    body.append(body[0])
    foot_y = top + h
    base = [(cx - w * 0.2, foot_y), (cx + w * 0.2, foot_y)]
    handles: list[Polyline] = []
    for side in (-1.0, 1.0):
        anchor_x = cx + side * w / 2.0 * 0.3
        pts: Polyline = []
        for s in range(9):
            t = s / 8.0
            a = math.pi * (t - 0.5)
            pts.append(
                (
                    anchor_x + side * w * 0.22 * math.cos(a),
                    top + h * 0.22 + h * 0.18 * t,
                )
            )
        handles.append(pts)
    return [body, base] + handles


PATTERNS = {
    "circle": _circle,
    "grid": _grid,
    "star": _star,
    "flower": _flower,
    "vase": _vase,
}

# golden stroke counts, frozen in the docs and tests
PATTERN_STROKE_COUNTS = {"circle": 1, "grid": 6, "star": 1, "flower": 7, "vase": 4}


def match_pattern(prompt: str) -> str:
    """First pattern keyword appearing in the prompt (plural tolerated)."""
    for token in prompt.lower().split():
        word = token.strip(".,!?;:")
        if word.endswith("s") and word[:-1] in PATTERNS:
            word = word[:-1]
        if word in PATTERNS:
            return word
    raise UnknownPattern(f"no known pattern in {prompt!r}")


def plan_from_prompt(
    prompt: str,
    region: Quadrant | None,
    palette: list[tuple[int, int, int]],
    seed: int,
    spec: CanvasSpec,
    *,
    palette_index: int = 0,
    width_mm: float = 2.0,
    first_id: int = 0,
    inset_mm: float = 6.0,
) -> StrokePlan:
    """Deterministic stroke plan for a prompt, scaled into a region.

    ``region`` None means the whole canvas. The region is inset so the
    brush footprint cannot bleed past its edges.
    """
    if not prompt.strip():
        raise UnknownPattern("empty prompt")
    name = match_pattern(prompt)
    if region is None:
        rect = (0.0, 0.0, spec.width_mm, spec.height_mm)
    else:
        rect = region.rect_mm(spec)
    inset = min(inset_mm, (rect[2] - rect[0]) / 6.0, (rect[3] - rect[1]) / 6.0)
    rect = (rect[0] + inset, rect[1] + inset, rect[2] - inset, rect[3] - inset)

    color = palette[palette_index % len(palette)] if palette else (0, 0, 0)
    polylines = PATTERNS[name](rect, seed)
    strokes = [
        Stroke(
            id=first_id + i,
            author=Author.ROBOT,
            color=color,
            width_mm=width_mm,
            path=tuple(poly),
        )
        for i, poly in enumerate(polylines)
    ]
    for s in strokes:
        s.validate(spec)
    return StrokePlan(
        prompt=prompt, seed=seed, pending=strokes, deferred=[], palette_index=palette_index
    )


# -- zone filtering --------------------------------------------------------------

def _point_segment_distance(p, q0, q1) -> float:
    vx, vy = q1[0] - q0[0], q1[1] - q0[1]
    denom = vx * vx + vy * vy
    if denom == 0.0:
        return math.dist(p, q0)
    t = ((p[0] - q0[0]) * vx + (p[1] - q0[1]) * vy) / denom
    t = 0.0 if t < 0.0 else 1.0 if t > 1.0 else t
    return math.dist(p, (q0[0] + t * vx, q0[1] + t * vy))


def _seg_seg_distance(
    a0: tuple[float, float], a1: tuple[float, float],
    b0: tuple[float, float], b1: tuple[float, float],
) -> float:
    # endpoint-to-segment distances cover every touching/overlap case;
    # only a proper interior crossing needs the orientation test
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    d1, d2 = orient(a0, a1, b0), orient(a0, a1, b1)
    d3, d4 = orient(b0, b1, a0), orient(b0, b1, a1)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return 0.0
    return min(
        _point_segment_distance(a0, b0, b1),
        _point_segment_distance(a1, b0, b1),
        _point_segment_distance(b0, a0, a1),
        _point_segment_distance(b1, a0, a1),
    )


def _seg_rect_distance(
    p0: tuple[float, float], p1: tuple[float, float], rect: Rect
) -> float:
    x0, y0, x1, y1 = rect
    inside0 = x0 <= p0[0] <= x1 and y0 <= p0[1] <= y1
    inside1 = x0 <= p1[0] <= x1 and y0 <= p1[1] <= y1
    if inside0 or inside1:
        return 0.0
    edges = (
        ((x0, y0), (x1, y0)),
        ((x1, y0), (x1, y1)),
        ((x1, y1), (x0, y1)),
        ((x0, y1), (x0, y0)),
    )
    return min(_seg_seg_distance(p0, p1, e0, e1) for e0, e1 in edges)


def footprint_margin_mm(width_mm: float, spec: CanvasSpec) -> float:
    return width_mm / 2.0 + FOOTPRINT_SLOP_PX / spec.px_per_mm


def stroke_zone_footprint(
    stroke: Stroke, spec: CanvasSpec, margin_mm: float | None = None
) -> frozenset[Quadrant]:
    """All quadrants the stroke's painted footprint can touch.

    Conservative: a quadrant counts when any path segment passes
    within the brush margin of its rectangle, so strict subset checks
    against an allowed set make pixel-level zone safety literal.
    """
    if margin_mm is None:
        margin_mm = footprint_margin_mm(stroke.width_mm, spec)
    quads = set()
    segments = list(zip(stroke.path[:-1], stroke.path[1:]))
    if not segments:
        segments = [(stroke.path[0], stroke.path[0])]
    for q in (Quadrant(c, r) for c in (0, 1) for r in (0, 1)):
        rect = q.rect_mm(spec)
        for p0, p1 in segments:
            if _seg_rect_distance(p0, p1, rect) <= margin_mm:
                quads.add(q)
                break
    return frozenset(quads)


def stroke_executable(stroke: Stroke, policy: ZonePolicy, spec: CanvasSpec) -> bool:
    return stroke_zone_footprint(stroke, spec) <= policy.paint_allowed


def filter_by_zones(plan: StrokePlan, policy: ZonePolicy, spec: CanvasSpec) -> StrokePlan:
    """Re-partition pending/deferred under a policy, order preserved.

    Previously deferred strokes return to pending when the policy
    re-admits their quadrants; the operation is idempotent for a fixed
    policy.
    """
    pending: list[Stroke] = []
    deferred: list[Stroke] = []
    for stroke in plan.pending + plan.deferred:
        if stroke_executable(stroke, policy, spec):
            pending.append(stroke)
        else:
            deferred.append(stroke)
    return replace(plan, pending=pending, deferred=deferred)


def reprioritize_for_position(
    plan: StrokePlan, pos: tuple[float, float], spec: CanvasSpec
) -> StrokePlan:
    """Stable partition: pending strokes starting in the quadrant of
    ``pos`` move to the front, sub-orders preserved."""
    target = quadrant_of(pos, spec)  # raises OutOfBounds
    front = [s for s in plan.pending if quadrant_of(s.path[0], spec) == target]
    back = [s for s in plan.pending if quadrant_of(s.path[0], spec) != target]
    return replace(plan, pending=front + back, deferred=list(plan.deferred))
