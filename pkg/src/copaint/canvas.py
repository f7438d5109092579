"""Canvas geometry, quadrant zoning, stroke rasterization and exports.

The canvas is a millimeter-addressed sheet split into four quadrants
by its midlines. Strokes are rasterized with a supercover line trace
plus a filled disc stamp per line pixel; every written pixel keeps
(author, stroke id) provenance so zone safety is auditable after the
fact.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import OutOfBounds

WHITE = (255, 255, 255)

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


class Author(enum.IntEnum):
    NONE = 0
    ARTIST = 1
    ROBOT = 2


@dataclass(frozen=True, slots=True)
class CanvasSpec:
    width_mm: float = 280.0
    height_mm: float = 216.0
    px_per_mm: float = 2.0

    @property
    def width_px(self) -> int:
        return int(round(self.width_mm * self.px_per_mm))

    @property
    def height_px(self) -> int:
        return int(round(self.height_mm * self.px_per_mm))

    def contains(self, x_mm: float, y_mm: float) -> bool:
        return 0.0 <= x_mm <= self.width_mm and 0.0 <= y_mm <= self.height_mm


@dataclass(frozen=True, slots=True)
class Quadrant:
    """Canvas quarter addressed by (col, row); 0 is left/top."""

    col: int
    row: int

    def diagonal(self) -> "Quadrant":
        return Quadrant(1 - self.col, 1 - self.row)

    def adjacent(self) -> frozenset["Quadrant"]:
        return frozenset((Quadrant(1 - self.col, self.row), Quadrant(self.col, 1 - self.row)))

    def rect_mm(self, spec: CanvasSpec) -> tuple[float, float, float, float]:
        """(x0, y0, x1, y1) of this quadrant, midlines belonging to index 1."""
        hx, hy = spec.width_mm / 2.0, spec.height_mm / 2.0
        x0 = 0.0 if self.col == 0 else hx
        y0 = 0.0 if self.row == 0 else hy
        return (x0, y0, x0 + hx, y0 + hy)


ALL_QUADRANTS = frozenset(Quadrant(c, r) for c in (0, 1) for r in (0, 1))


@dataclass(frozen=True, slots=True)
class ZonePolicy:
    """Which quadrants the robot may paint in, given the arousal level."""

    active: Quadrant
    paint_allowed: frozenset[Quadrant]
    park: Quadrant | None


@dataclass(frozen=True, slots=True)
class Stroke:
    """An authored colored polyline in canvas millimeters."""

    id: int
    author: Author
    color: tuple[int, int, int]
    width_mm: float
    path: tuple[tuple[float, float], ...]

    def validate(self, spec: CanvasSpec) -> None:
        if len(self.path) < 2:
            raise OutOfBounds("stroke path needs at least 2 points")
        if self.width_mm <= 0:
            raise OutOfBounds("stroke width must be positive")
        for x, y in self.path:
            if not spec.contains(x, y):
                raise OutOfBounds(f"point ({x}, {y}) outside canvas")

    def length_mm(self) -> float:
        return sum(
            math.dist(self.path[i], self.path[i + 1]) for i in range(len(self.path) - 1)
        )


def quadrant_of(point: tuple[float, float], spec: CanvasSpec) -> Quadrant:
    """Quadrant containing an in-bounds point; midlines tie-break to index 1."""
    x, y = point
    if not spec.contains(x, y):
        raise OutOfBounds(f"point ({x}, {y}) outside canvas")
    col = 0 if x < spec.width_mm / 2.0 else 1
    row = 0 if y < spec.height_mm / 2.0 else 1
    return Quadrant(col, row)


def zone_policy(level, active: Quadrant) -> ZonePolicy:
    """Proximity policy: all four quadrants when neutral, the two
    adjacent ones near the threshold, none (park diagonal) when aroused."""
    from .arousal import ArousalLevel  # local import avoids a cycle

    if level == ArousalLevel.AROUSED:
        return ZonePolicy(active=active, paint_allowed=frozenset(), park=active.diagonal())
    if level == ArousalLevel.NEAR_THRESHOLD:
        return ZonePolicy(active=active, paint_allowed=active.adjacent(), park=None)
    return ZonePolicy(active=active, paint_allowed=ALL_QUADRANTS, park=None)


def active_workspace(
    artist_points: Sequence[tuple[float, float, float]],
    window_s: float,
    spec: CanvasSpec,
    prev: Quadrant,
    now_ms: float | None = None,
) -> Quadrant:
    """Quadrant holding the plurality of recent artist points.

    ``artist_points`` are (at_ms, x_mm, y_mm). Ties break toward the
    quadrant with the most recent point; no recent activity keeps the
    previous answer.
    """
    if not artist_points:
        return prev
    if now_ms is None:
        now_ms = max(p[0] for p in artist_points)
    cut = now_ms - window_s * 1000.0
    counts: dict[Quadrant, int] = {}
    latest: dict[Quadrant, float] = {}
    for at_ms, x, y in artist_points:
        if at_ms < cut:
            continue
        q = quadrant_of((x, y), spec)
        counts[q] = counts.get(q, 0) + 1
        latest[q] = max(latest.get(q, -math.inf), at_ms)
    if not counts:
        return prev
    best = max(counts.values())
    tied = [q for q, c in counts.items() if c == best]
    return max(tied, key=lambda q: latest[q])


# -- rasterization -------------------------------------------------------------

def supercover_line(x0: float, y0: float, x1: float, y1: float) -> list[tuple[int, int]]:
    """Every integer cell a segment passes through, in traversal order.

    Coordinates are in pixel units; a point belongs to cell
    (floor(x), floor(y)). Exact corner crossings include both side
    cells, which is what makes the trace a supercover rather than a
    Bresenham walk.
    """
    cx, cy = math.floor(x0), math.floor(y0)
    ex, ey = math.floor(x1), math.floor(y1)
    cells = [(cx, cy)]
    dx, dy = x1 - x0, y1 - y0
    step_x = 1 if dx > 0 else -1
    step_y = 1 if dy > 0 else -1
    # t to the first vertical / horizontal gridline crossing
    if dx != 0:
        nx = cx + (1 if dx > 0 else 0)
        t_max_x = (nx - x0) / dx
        t_dx = abs(1.0 / dx)
    else:
        t_max_x, t_dx = math.inf, math.inf
    if dy != 0:
        ny = cy + (1 if dy > 0 else 0)
        t_max_y = (ny - y0) / dy
        t_dy = abs(1.0 / dy)
    else:
        t_max_y, t_dy = math.inf, math.inf

    guard = abs(ex - cx) + abs(ey - cy) + 4
    while (cx, cy) != (ex, ey) and guard > 0:
        guard -= 1
        if math.isclose(t_max_x, t_max_y, rel_tol=0.0, abs_tol=1e-12):
            # corner crossing: include both neighbors then move diagonally
            cells.append((cx + step_x, cy))
            cells.append((cx, cy + step_y))
            cx += step_x
            cy += step_y
            t_max_x += t_dx
            t_max_y += t_dy
        elif t_max_x < t_max_y:
            cx += step_x
            t_max_x += t_dx
        else:
            cy += step_y
            t_max_y += t_dy
        cells.append((cx, cy))
    return cells


_DISC_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _disc_offsets(radius: int) -> tuple[np.ndarray, np.ndarray]:
    got = _DISC_CACHE.get(radius)
    if got is None:
        span = np.arange(-radius, radius + 1)
        dx, dy = np.meshgrid(span, span)
        mask = dx * dx + dy * dy <= radius * radius
        got = (dx[mask].ravel(), dy[mask].ravel())
        _DISC_CACHE[radius] = got
    return got


def disc_radius_px(width_mm: float, spec: CanvasSpec) -> int:
    return int(math.ceil(width_mm * spec.px_per_mm / 2.0))


class Canvas:
    """RGB raster plus per-pixel authorship provenance."""

    def __init__(self, spec: CanvasSpec):
        w, h = spec.width_px, spec.height_px
        if w < 2 or h < 2:
            raise OutOfBounds(f"canvas too small: {w}x{h} px")
        self.spec = spec
        self.rgb = np.full((h, w, 3), 255, dtype=np.uint8)
        self.author = np.zeros((h, w), dtype=np.uint8)
        self.stroke_id = np.full((h, w), -1, dtype=np.int64)
        self.version = 0

    def copy(self) -> "Canvas":
        dup = Canvas.__new__(Canvas)
        dup.spec = self.spec
        dup.rgb = self.rgb.copy()
        dup.author = self.author.copy()
        dup.stroke_id = self.stroke_id.copy()
        dup.version = self.version
        return dup

    def _to_px(self, x_mm: float, y_mm: float) -> tuple[float, float]:
        return x_mm * self.spec.px_per_mm, y_mm * self.spec.px_per_mm

    def draw_segment(
        self,
        p0_mm: tuple[float, float],
        p1_mm: tuple[float, float],
        color: tuple[int, int, int],
        width_mm: float,
        author: Author,
        stroke_id: int,
    ) -> np.ndarray:
        """Stamp one segment; returns the (n, 2) array of written (x, y) pixels."""
        w, h = self.spec.width_px, self.spec.height_px
        x0, y0 = self._to_px(*p0_mm)
        x1, y1 = self._to_px(*p1_mm)
        cells = supercover_line(x0, y0, x1, y1)
        radius = disc_radius_px(width_mm, self.spec)
        offs_x, offs_y = _disc_offsets(radius)

        touched: set[tuple[int, int]] = set()
        for cx, cy in cells:
            xs = offs_x + min(max(cx, 0), w - 1)
            ys = offs_y + min(max(cy, 0), h - 1)
            keep = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
            for x, y in zip(xs[keep], ys[keep]):
                touched.add((int(x), int(y)))
        if not touched:
            return np.empty((0, 2), dtype=np.int64)
        pts = np.array(sorted(touched), dtype=np.int64)
        self.rgb[pts[:, 1], pts[:, 0]] = color
        self.author[pts[:, 1], pts[:, 0]] = int(author)
        self.stroke_id[pts[:, 1], pts[:, 0]] = stroke_id
        self.version += 1
        return pts

    def count_author_pixels(self, author: Author) -> int:
        return int(np.count_nonzero(self.author == int(author)))

    def author_pixels_by_quadrant(self, author: Author) -> dict[Quadrant, int]:
        h, w = self.author.shape
        half_x = self.spec.width_mm / 2.0 * self.spec.px_per_mm
        half_y = self.spec.height_mm / 2.0 * self.spec.px_per_mm
        mask = self.author == int(author)
        ys, xs = np.nonzero(mask)
        cols = (xs >= half_x).astype(int)
        rows = (ys >= half_y).astype(int)
        out = {q: 0 for q in ALL_QUADRANTS}
        for c, r in zip(cols, rows):
            out[Quadrant(int(c), int(r))] += 1
        return out

    def pixel_quadrants(self, pts: np.ndarray) -> list[Quadrant]:
        """Quadrant of each (x, y) pixel, classified by its lattice point."""
        half_x = self.spec.width_mm / 2.0 * self.spec.px_per_mm
        half_y = self.spec.height_mm / 2.0 * self.spec.px_per_mm
        return [
            Quadrant(int(x >= half_x), int(y >= half_y))
            for x, y in pts
        ]


def rasterize_stroke(canvas: Canvas, stroke: Stroke, spec: CanvasSpec) -> np.ndarray:
    """Stamp a whole stroke; returns all written (x, y) pixels."""
    stroke.validate(spec)
    chunks = []
    for i in range(len(stroke.path) - 1):
        pts = canvas.draw_segment(
            stroke.path[i],
            stroke.path[i + 1],
            stroke.color,
            stroke.width_mm,
            stroke.author,
            stroke.id,
        )
        if len(pts):
            chunks.append(pts)
    if not chunks:
        return np.empty((0, 2), dtype=np.int64)
    merged = np.unique(np.concatenate(chunks), axis=0)
    return merged


def fnv1a64(data: bytes) -> int:
    h = FNV64_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV64_PRIME) & _MASK64
    return h


def canvas_digest(canvas: Canvas) -> str:
    """FNV-1a 64-bit over the RGB bytes in row-major order, as hex."""
    cached = getattr(canvas, "_digest_cache", None)
    if cached is not None and cached[0] == canvas.version:
        return cached[1]
    digest = f"{fnv1a64(canvas.rgb.tobytes()):016x}"
    canvas._digest_cache = (canvas.version, digest)
    return digest


def export_ppm(canvas: Canvas) -> bytes:
    """Binary PPM (P6), maxval 255, row-major RGB."""
    h, w = canvas.rgb.shape[:2]
    return b"P6\n%d %d\n255\n" % (w, h) + canvas.rgb.tobytes()


def parse_ppm(data: bytes) -> np.ndarray:
    """Inverse of export_ppm for round-trip checks."""
    if not data.startswith(b"P6"):
        raise ValueError("not a binary PPM")
    parts = data.split(b"\n", 3)
    if len(parts) < 4:
        raise ValueError("truncated PPM header")
    w, h = (int(v) for v in parts[1].split())
    maxval = int(parts[2])
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}")
    body = parts[3][: w * h * 3]
    return np.frombuffer(body, dtype=np.uint8).reshape((h, w, 3)).copy()
