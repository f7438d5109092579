"""Stroke planner, zone filtering and reprioritization tests."""

import pytest

from copaint.arousal import ArousalLevel
from copaint.canvas import (
    ALL_QUADRANTS,
    Author,
    CanvasSpec,
    Quadrant,
    Stroke,
    ZonePolicy,
    quadrant_of,
    zone_policy,
)
from copaint.errors import OutOfBounds, UnknownPattern
from copaint.planner import (
    PATTERN_STROKE_COUNTS,
    StrokePlan,
    filter_by_zones,
    footprint_margin_mm,
    plan_from_prompt,
    reprioritize_for_position,
    stroke_zone_footprint,
)

SPEC = CanvasSpec()
PALETTE = [(230, 57, 70), (29, 53, 87)]


class TestPlanFromPrompt:
    @pytest.mark.parametrize("name,count", sorted(PATTERN_STROKE_COUNTS.items()))
    def test_golden_stroke_counts(self, name, count):
        plan = plan_from_prompt(f"draw a {name}", None, PALETTE, 7, SPEC)
        assert len(plan.pending) == count
        assert not plan.deferred
        for stroke in plan.pending:
            stroke.validate(SPEC)

    def test_unknown_pattern(self):
        with pytest.raises(UnknownPattern):
            plan_from_prompt("draw a dog", None, PALETTE, 1, SPEC)

    def test_deterministic(self):
        a = plan_from_prompt("draw a star", None, PALETTE, 5, SPEC)
        b = plan_from_prompt("draw a star", None, PALETTE, 5, SPEC)
        assert a == b

    def test_seed_changes_geometry(self):
        a = plan_from_prompt("draw a star", None, PALETTE, 5, SPEC)
        b = plan_from_prompt("draw a star", None, PALETTE, 6, SPEC)
        assert a.pending[0].path != b.pending[0].path

    def test_region_confines_footprint(self):
        for region in ALL_QUADRANTS:
            plan = plan_from_prompt("draw a flower", region, PALETTE, 3, SPEC)
            for stroke in plan.pending:
                assert stroke_zone_footprint(stroke, SPEC) == {region}

    def test_palette_index_selects_color(self):
        plan = plan_from_prompt("circle", None, PALETTE, 0, SPEC, palette_index=1)
        assert plan.pending[0].color == PALETTE[1]

    def test_ids_sequential_from_first_id(self):
        plan = plan_from_prompt("grid", None, PALETTE, 0, SPEC, first_id=40)
        assert [s.id for s in plan.pending] == list(range(40, 46))

    def test_plural_keyword(self):
        plan = plan_from_prompt("two flowers", None, PALETTE, 0, SPEC)
        assert len(plan.pending) == PATTERN_STROKE_COUNTS["flower"]


def _plan_ids(plan: StrokePlan) -> set[int]:
    return {s.id for s in plan.pending} | {s.id for s in plan.deferred}


class TestFilterByZones:
    def test_neutral_defers_nothing(self):
        plan = plan_from_prompt("draw a flower", None, PALETTE, 1, SPEC)
        out = filter_by_zones(plan, zone_policy(ArousalLevel.NEUTRAL, Quadrant(0, 0)), SPEC)
        assert not out.deferred and len(out.pending) == 7

    def test_aroused_defers_everything(self):
        plan = plan_from_prompt("draw a flower", None, PALETTE, 1, SPEC)
        out = filter_by_zones(plan, zone_policy(ArousalLevel.AROUSED, Quadrant(0, 0)), SPEC)
        assert not out.pending and len(out.deferred) == 7

    def test_stroke_crossing_two_quadrants_deferred(self):
        crossing = Stroke(0, Author.ROBOT, (0, 0, 0), 2.0,
                          ((30.0, 30.0), (200.0, 30.0)))  # spans cols 0 and 1, row 0
        plan = StrokePlan(prompt="x", seed=0, pending=[crossing])
        policy = ZonePolicy(active=Quadrant(0, 1),
                            paint_allowed=frozenset({Quadrant(0, 0)}), park=None)
        out = filter_by_zones(plan, policy, SPEC)
        assert out.pending == [] and out.deferred == [crossing]

    def test_footprint_bounds_actual_stamped_quadrants(self):
        # the declared footprint must cover every pixel the rasterizer
        # writes; this is the lemma behind the zone-safety audit
        import random

        from copaint.canvas import Canvas, rasterize_stroke

        rng = random.Random(23)
        spec = CanvasSpec(120, 96, 1.0)
        for trial in range(60):
            width = rng.choice([0.5, 1.0, 2.0, 3.0])
            x, y = rng.uniform(1, 119), rng.uniform(1, 95)
            pts = [(x, y)]
            for _ in range(rng.randint(1, 4)):
                x = min(119.0, max(1.0, x + rng.uniform(-25, 25)))
                y = min(95.0, max(1.0, y + rng.uniform(-25, 25)))
                pts.append((x, y))
            stroke = Stroke(trial, Author.ROBOT, (0, 0, 0), width, tuple(pts))
            footprint = stroke_zone_footprint(stroke, spec)
            canvas = Canvas(spec)
            stamped = rasterize_stroke(canvas, stroke, spec)
            assert set(canvas.pixel_quadrants(stamped)) <= footprint

    def test_midline_hugging_stroke_deferred_by_margin(self):
        margin = footprint_margin_mm(2.0, SPEC)
        x = SPEC.width_mm / 2.0 - margin / 2.0  # inside (0,0) but bleeds into (1,0)
        hugging = Stroke(0, Author.ROBOT, (0, 0, 0), 2.0, ((x, 20.0), (x, 40.0)))
        assert quadrant_of(hugging.path[0], SPEC) == Quadrant(0, 0)
        policy = ZonePolicy(active=Quadrant(1, 1),
                            paint_allowed=frozenset({Quadrant(0, 0)}), park=None)
        out = filter_by_zones(StrokePlan("x", 0, pending=[hugging]), policy, SPEC)
        assert out.deferred == [hugging]

    def test_idempotent(self):
        plan = plan_from_prompt("grid", None, PALETTE, 1, SPEC)
        policy = zone_policy(ArousalLevel.NEAR_THRESHOLD, Quadrant(0, 0))
        once = filter_by_zones(plan, policy, SPEC)
        twice = filter_by_zones(once, policy, SPEC)
        assert once == twice

    def test_readmission_restores_pending(self):
        plan = plan_from_prompt("draw a flower", None, PALETTE, 1, SPEC)
        deferred = filter_by_zones(plan, zone_policy(ArousalLevel.AROUSED, Quadrant(0, 0)), SPEC)
        restored = filter_by_zones(deferred, zone_policy(ArousalLevel.NEUTRAL, Quadrant(0, 0)), SPEC)
        assert [s.id for s in restored.pending] == [s.id for s in plan.pending]

    def test_ids_conserved_and_geometry_untouched(self):
        plan = plan_from_prompt("vase", None, PALETTE, 2, SPEC)
        original = {s.id: s for s in plan.pending}
        for level in (ArousalLevel.AROUSED, ArousalLevel.NEAR_THRESHOLD, ArousalLevel.NEUTRAL):
            plan = filter_by_zones(plan, zone_policy(level, Quadrant(1, 0)), SPEC)
            assert _plan_ids(plan) == set(original)
            for s in plan.pending + plan.deferred:
                assert s == original[s.id]


def stable_partition_oracle(strokes, predicate):
    return [s for s in strokes if predicate(s)] + [s for s in strokes if not predicate(s)]


class TestReprioritize:
    def _plan_with_quadrants(self, quads):
        strokes = []
        for i, q in enumerate(quads):
            x0, y0, x1, y1 = q.rect_mm(SPEC)
            cx, cy = (x0 + x1) / 2 + i, (y0 + y1) / 2
            strokes.append(Stroke(i, Author.ROBOT, (0, 0, 0), 1.0, ((cx, cy), (cx + 3, cy + 3))))
        return StrokePlan("mixed", 0, pending=strokes)

    def test_all_in_target_quadrant_unchanged(self):
        plan = self._plan_with_quadrants([Quadrant(0, 0)] * 4)
        out = reprioritize_for_position(plan, (10.0, 10.0), SPEC)
        assert [s.id for s in out.pending] == [0, 1, 2, 3]

    def test_none_in_target_quadrant_unchanged(self):
        plan = self._plan_with_quadrants([Quadrant(0, 0)] * 4)
        out = reprioritize_for_position(plan, (250.0, 200.0), SPEC)
        assert [s.id for s in out.pending] == [0, 1, 2, 3]

    def test_mixed_plan_matches_stable_partition_oracle(self):
        quads = [Quadrant(0, 0), Quadrant(1, 1), Quadrant(0, 1),
                 Quadrant(1, 1), Quadrant(0, 0), Quadrant(1, 1)]
        plan = self._plan_with_quadrants(quads)
        pos = (250.0, 200.0)  # quadrant (1,1)
        out = reprioritize_for_position(plan, pos, SPEC)
        expected = stable_partition_oracle(
            plan.pending, lambda s: quadrant_of(s.path[0], SPEC) == Quadrant(1, 1)
        )
        assert out.pending == expected
        assert [s.id for s in out.pending] == [1, 3, 5, 0, 2, 4]

    def test_out_of_bounds_position(self):
        plan = self._plan_with_quadrants([Quadrant(0, 0)])
        with pytest.raises(OutOfBounds):
            reprioritize_for_position(plan, (400.0, 10.0), SPEC)
