"""Session engine tests: transitions, ticks, replay, safety."""

import io

import pytest

from copaint.arousal import ArousalLevel, ArousalState
from copaint.biometric import BiometricSample
from copaint.canvas import Author, Quadrant, Stroke, canvas_digest, quadrant_of
from copaint.commands import parse_command
from copaint.config import config_from_dict, config_hash
from copaint.engine import (
    drive,
    log_header,
    new_session,
    replay_log,
    session_summary,
    snapshot,
    tick,
)
from copaint.errors import SeqGap
from copaint.events import (
    ArousalChanged,
    ArtistStroke,
    CommandIssued,
    RobotMode,
    RobotMoved,
    SampleIn,
    SessionEvent,
    StateChanged,
    Tick,
    read_log,
    write_log,
)

FAST = config_from_dict(
    {
        "arousal": {"calibration_s": 8.0},
        "canvas": {"width_mm": 120.0, "height_mm": 96.0, "px_per_mm": 1.0},
    }
)


def hr(session, t_ms, bpm):
    drive(session, SampleIn(BiometricSample("HR", float(t_ms), float(bpm))), t_ms)


def calibrate(session, bpm=70.0, until_ms=9000):
    for t in range(0, until_ms + 1, 1000):
        hr(session, t, bpm)
    assert session.baseline is not None and session.baseline.calibrated


def run_ticks(session, start_ms, n):
    t = start_ms
    for _ in range(n):
        t += session.cfg.robot.tick_ms
        tick(session, t)
    return t


def robot_px(session):
    return session.canvas.count_author_pixels(Author.ROBOT)


class TestCalibrationFlow:
    def test_idle_until_first_sample(self):
        s = new_session(FAST)
        assert s.mode == RobotMode.IDLE
        hr(s, 0, 70)
        assert s.mode == RobotMode.CALIBRATING

    def test_calibration_completes_into_painting(self):
        s = new_session(FAST)
        calibrate(s)
        assert s.mode == RobotMode.PAINTING
        assert s.baseline.mu_bpm == pytest.approx(70.0)
        assert [t["to"] for t in s.transitions] == ["calibrating", "painting"]

    def test_prompt_queued_until_calibrated(self):
        s = new_session(FAST)
        drive(s, CommandIssued(parse_command("draw a flower")), 100)
        assert s.queued_prompts == ["draw a flower"]
        assert not s.plan.pending
        calibrate(s)
        assert not s.queued_prompts
        assert len(s.plan.pending) + len(s.plan.deferred) == 7

    def test_unknown_prompt_rejected_after_calibration(self):
        s = new_session(FAST)
        calibrate(s)
        applied = drive(s, CommandIssued(parse_command("draw a dog")), 10_000)
        types = [ev.type for ev in applied]
        assert types == ["command_issued", "prompt_rejected"]
        assert s.prompt_rejections == 1


class TestAurousalTransitions:
    def _painting_session(self):
        s = new_session(FAST)
        calibrate(s)
        drive(s, CommandIssued(parse_command("draw a grid")), 9100)
        run_ticks(s, 9100, 20)
        assert s.mode == RobotMode.PAINTING
        return s

    def test_aroused_withdraws_and_freezes_pixels(self):
        s = self._painting_session()
        before = robot_px(s)
        assert before > 0
        for i in range(6):
            hr(s, 12_000 + i * 1000, 88)
        assert s.mode == RobotMode.WITHDRAWN
        assert s.current is None  # in-flight stroke aborted
        run_ticks(s, 20_000, 30)
        assert robot_px(s) == before
        assert s.policy.paint_allowed == frozenset()
        assert s.policy.park == s.active.diagonal()

    def test_reentry_resumes_painting(self):
        s = self._painting_session()
        for i in range(6):
            hr(s, 12_000 + i * 1000, 88)
        frozen = robot_px(s)
        for i in range(10):
            hr(s, 19_000 + i * 1000, 70)
        assert s.mode == RobotMode.PAINTING
        run_ticks(s, 30_000, 40)
        assert robot_px(s) > frozen  # liveness

    def test_withdrawn_travels_to_park_and_holds(self):
        s = self._painting_session()
        for i in range(6):
            hr(s, 12_000 + i * 1000, 88)
        park = s.park_target
        run_ticks(s, 20_000, 100)
        assert s.pos == park
        before = robot_px(s)
        run_ticks(s, 31_000, 5)
        assert s.pos == park and robot_px(s) == before


class TestDirectCommands:
    def _active(self):
        s = new_session(FAST)
        calibrate(s)
        drive(s, CommandIssued(parse_command("draw a grid")), 9100)
        run_ticks(s, 9100, 15)
        return s

    def test_stop_is_absorbing(self):
        s = self._active()
        drive(s, CommandIssued(parse_command("stop")), 11_000)
        assert s.mode == RobotMode.STOPPED
        before = robot_px(s)
        run_ticks(s, 11_000, 10)
        hr(s, 13_000, 90)
        hr(s, 14_000, 90)
        assert s.mode == RobotMode.STOPPED and robot_px(s) == before
        drive(s, CommandIssued(parse_command("resume")), 15_000)
        assert s.mode == RobotMode.PAINTING  # position still in bounds

    def test_pause_preserves_progress_resume_continues(self):
        s = self._active()
        cur = s.current
        assert cur is not None
        drive(s, CommandIssued(parse_command("pause")), 11_000)
        assert s.mode == RobotMode.PAUSED and s.current is cur
        before = robot_px(s)
        run_ticks(s, 11_000, 5)
        assert robot_px(s) == before
        drive(s, CommandIssued(parse_command("resume")), 12_000)
        run_ticks(s, 12_000, 5)
        assert robot_px(s) > before

    def test_change_colors_affects_only_later_plans(self):
        s = self._active()
        first_color = s.plan.pending[0].color if s.plan.pending else None
        drive(s, CommandIssued(parse_command("change colors")), 11_000)
        assert s.palette_index == 1
        if first_color is not None:
            assert all(st.color == first_color for st in s.plan.pending)
        drive(s, CommandIssued(parse_command("draw a circle")), 11_500)
        strokes = s.plan.pending + s.plan.deferred
        assert strokes[0].color == tuple(s.cfg.palette[1])

    def test_move_away_is_sticky_against_arousal(self):
        s = self._active()
        drive(s, CommandIssued(parse_command("move away")), 11_000)
        assert s.mode == RobotMode.WITHDRAWN
        assert s.policy.paint_allowed == frozenset()
        # a calm classification must NOT bring it back (command outranks arousal)
        for i in range(4):
            hr(s, 12_000 + i * 1000, 70)
        assert s.mode == RobotMode.WITHDRAWN
        drive(s, CommandIssued(parse_command("come back")), 17_000)
        assert s.mode == RobotMode.PAINTING
        assert s.policy.paint_allowed == frozenset(
            Quadrant(c, r) for c in (0, 1) for r in (0, 1)
        )


class TestRobotMoved:
    def _active(self):
        s = new_session(FAST)
        calibrate(s)
        drive(s, CommandIssued(parse_command("draw a grid")), 9100)
        run_ticks(s, 9100, 15)
        return s

    def test_outside_stops_and_freezes(self):
        s = self._active()
        drive(s, RobotMoved(None, None, outside=True), 11_000)
        assert s.mode == RobotMode.STOPPED and s.outside
        before = robot_px(s)
        run_ticks(s, 11_000, 10)
        assert robot_px(s) == before

    def test_resume_requires_inbounds_reposition(self):
        s = self._active()
        drive(s, RobotMoved(None, None, outside=True), 11_000)
        drive(s, CommandIssued(parse_command("resume")), 12_000)
        assert s.mode == RobotMode.STOPPED  # still outside
        drive(s, RobotMoved(30.0, 80.0, outside=False), 13_000)
        assert s.mode == RobotMode.STOPPED  # sticky until explicit resume
        drive(s, CommandIssued(parse_command("resume")), 14_000)
        assert s.mode == RobotMode.PAINTING

    def test_inbounds_reposition_reprioritizes(self):
        s = self._active()
        target = (20.0, 80.0)  # quadrant (0,1) on the 120x96 canvas
        assert any(
            quadrant_of(st.path[0], s.spec) == Quadrant(0, 1) for st in s.plan.pending
        )
        drive(s, RobotMoved(*target, outside=False), 11_000)
        assert s.mode == RobotMode.PAINTING and s.pos == target
        assert quadrant_of(s.plan.pending[0].path[0], s.spec) == Quadrant(0, 1)
        n_before = len(s.executed_strokes)
        run_ticks(s, 11_000, 10)
        started = s.executed_strokes[n_before:]
        assert started and started[0]["quadrant"] == [0, 1]

    def test_priority_outside_beats_resume_in_both_orders(self):
        for first, second in (
            (RobotMoved(None, None, True), CommandIssued(parse_command("resume"))),
            (CommandIssued(parse_command("resume")), RobotMoved(None, None, True)),
        ):
            s = self._active()
            drive(s, first, 11_000)
            drive(s, second, 11_000)
            assert s.mode == RobotMode.STOPPED

    def test_priority_move_away_beats_calm_classification(self):
        # physical/direct inputs outrank arousal in either arrival order
        s1 = self._active()
        drive(s1, CommandIssued(parse_command("move away")), 11_000)
        hr(s1, 11_000, 70)
        assert s1.mode == RobotMode.WITHDRAWN
        s2 = self._active()
        hr(s2, 11_000, 70)
        drive(s2, CommandIssued(parse_command("move away")), 11_000)
        assert s2.mode == RobotMode.WITHDRAWN

    def test_priority_outside_beats_aroused(self):
        s = self._active()
        drive(s, RobotMoved(None, None, True), 11_000)
        for i in range(6):
            hr(s, 11_000 + i * 1000, 90)
        assert s.mode == RobotMode.STOPPED

    def test_model_check_outside_dominates_every_payload_pair(self):
        # physical removal is the highest-priority input: paired with any
        # other same-instant payload, in either order, the session stops
        def aroused_state(session):
            return ArousalChanged(
                ArousalState(
                    level=ArousalLevel.AROUSED,
                    predicted_bpm=90.0,
                    threshold_bpm=73.0,
                    near_band_bpm=3.0,
                    at_ms=11_000,
                )
            )

        others = [
            lambda s: CommandIssued(parse_command("resume")),
            lambda s: CommandIssued(parse_command("pause")),
            lambda s: CommandIssued(parse_command("come back")),
            lambda s: CommandIssued(parse_command("move away")),
            lambda s: CommandIssued(parse_command("draw a circle")),
            aroused_state,
            lambda s: RobotMoved(30.0, 30.0, outside=False),
            lambda s: Tick(),
        ]
        for make_other in others:
            for outside_first in (True, False):
                s = self._active()
                payloads = [RobotMoved(None, None, True), make_other(s)]
                if not outside_first:
                    payloads.reverse()
                for p in payloads:
                    drive(s, p, 11_000)
                assert s.mode == RobotMode.STOPPED, (make_other, outside_first)


class TestTickExecutor:
    def _straight_stroke_session(self):
        cfg = config_from_dict(
            {
                "arousal": {"calibration_s": 8.0},
                "canvas": {"width_mm": 120.0, "height_mm": 96.0, "px_per_mm": 2.0},
                "robot": {"paint_station": (10.0, 20.0)},
            }
        )
        s = new_session(cfg)
        calibrate(s)
        stroke = Stroke(99, Author.ROBOT, (200, 0, 0), 1.0, ((10.0, 20.0), (50.0, 20.0)))
        s.plan.pending.append(stroke)
        return s

    def test_advance_rate_and_incremental_raster(self):
        s = self._straight_stroke_session()
        tick(s, 9100)  # robot starts at the stroke start: paints immediately
        assert s.current is not None
        assert s.current.offset_mm == pytest.approx(5.0)  # 50 mm/s * 0.1 s
        assert s.pos == (pytest.approx(15.0), pytest.approx(20.0))
        assert robot_px(s) > 0

    def test_full_stroke_pixels_match_capsule_oracle(self):
        from test_canvas import capsule_pixels
        from copaint.canvas import disc_radius_px
        import numpy as np

        s = self._straight_stroke_session()
        run_ticks(s, 9000, 100)
        assert s.current is None  # stroke finished
        got = {
            (int(x), int(y))
            for y, x in zip(*np.nonzero(s.canvas.author == int(Author.ROBOT)))
        }
        oracle = capsule_pixels(
            s.spec, (10.0, 20.0), (50.0, 20.0), disc_radius_px(1.0, s.spec)
        )
        assert got == oracle

    def test_travel_budget_then_paint(self):
        s = self._straight_stroke_session()
        s.pos = (10.0, 50.0)  # 30 mm from stroke start: 3 ticks of pen-up travel
        tick(s, 9100)
        assert robot_px(s) == 0 and s.current.phase == "travel"
        run_ticks(s, 9100, 2)
        assert s.current.phase == "paint"
        run_ticks(s, 9400, 1)
        assert robot_px(s) > 0

    def test_refill_cycle_and_paint_conservation(self):
        cfg = config_from_dict(
            {
                "arousal": {"calibration_s": 8.0},
                "canvas": {"width_mm": 120.0, "height_mm": 96.0, "px_per_mm": 1.0},
                "robot": {"paint_capacity_mm": 30.0, "refill_ticks": 3},
            }
        )
        s = new_session(cfg)
        calibrate(s)
        stroke = Stroke(99, Author.ROBOT, (0, 0, 200), 1.0, ((5.0, 5.0), (105.0, 5.0)))
        s.plan.pending.append(stroke)
        s.pos = (5.0, 5.0)
        max_pen_down = 0.0
        t = 9000
        for _ in range(300):
            t += 100
            tick(s, t)
            max_pen_down = max(max_pen_down, s.pen_down_since_refill)
        assert s.paint_refills >= 3
        assert max_pen_down <= cfg.robot.paint_capacity_mm + 1e-9
        modes = [(tr["from"], tr["to"]) for tr in s.transitions]
        assert ("painting", "refill") in modes and ("refill", "painting") in modes

    def test_refill_triggers_before_segment_start_when_low(self):
        cfg = config_from_dict(
            {
                "arousal": {"calibration_s": 8.0},
                "canvas": {"width_mm": 120.0, "height_mm": 96.0, "px_per_mm": 1.0},
                "robot": {"paint_capacity_mm": 40.0},
            }
        )
        s = new_session(cfg)
        calibrate(s)
        s.paint_remaining_mm = 3.0
        stroke = Stroke(99, Author.ROBOT, (0, 0, 200), 1.0, ((5.0, 5.0), (10.0, 5.0)))
        s.plan.pending.append(stroke)
        s.pos = (5.0, 5.0)
        tick(s, 9100)
        assert s.mode == RobotMode.REFILL


class TestArtistStrokes:
    def test_artist_paints_in_any_mode_and_shifts_workspace(self):
        s = new_session(FAST)
        assert s.active == Quadrant(0, 0)
        stroke = Stroke(-1, Author.ARTIST, (5, 5, 5), 1.0, ((80.0, 70.0), (100.0, 90.0)))
        drive(s, ArtistStroke(stroke), 100)
        assert s.canvas.count_author_pixels(Author.ARTIST) > 0
        assert s.active == Quadrant(1, 1)

    def test_artist_stroke_ids_assigned_deterministically(self):
        s = new_session(FAST)
        stroke = Stroke(-1, Author.ARTIST, (5, 5, 5), 1.0, ((10.0, 10.0), (20.0, 20.0)))
        applied = drive(s, ArtistStroke(stroke), 100)
        assert applied[0].payload.stroke.id == -1  # log keeps the raw payload
        assert s.next_stroke_id == 1


class TestReplay:
    def _scripted(self):
        s = new_session(FAST)
        drive(s, CommandIssued(parse_command("draw a vase")), 100)
        calibrate(s)
        run_ticks(s, 9000, 40)
        for i in range(6):
            hr(s, 14_000 + i * 1000, 90)
        run_ticks(s, 20_000, 20)
        drive(s, CommandIssued(parse_command("stop")), 23_000)
        return s

    def test_replay_reproduces_digest_and_mode(self):
        live = self._scripted()
        replayed = replay_log(live.events, FAST)
        assert canvas_digest(replayed.canvas) == canvas_digest(live.canvas)
        assert replayed.mode == live.mode
        assert replayed.last_seq == live.last_seq
        assert session_summary(replayed) == session_summary(live)

    def test_replay_via_serialized_log(self):
        live = self._scripted()
        buf = io.StringIO()
        write_log(buf, log_header(live.cfg), live.events)
        buf.seek(0)
        header, events = read_log(buf)
        assert header["config_hash"] == config_hash(FAST)
        replayed = replay_log(events, config_from_dict(header["config"]))
        assert canvas_digest(replayed.canvas) == canvas_digest(live.canvas)

    def test_seq_gap_rejected(self):
        s = new_session(FAST)
        with pytest.raises(SeqGap):
            from copaint.engine import apply_event

            apply_event(s, SessionEvent(seq=5, at_ms=0, payload=Tick()))

    def test_empty_log_is_fresh_idle(self):
        s = replay_log([], FAST)
        assert s.mode == RobotMode.IDLE
        assert canvas_digest(s.canvas) == canvas_digest(new_session(FAST).canvas)


class TestSnapshot:
    def test_fresh_session(self):
        s = new_session(FAST)
        snap = snapshot(s)
        assert snap["mode"] == "idle"
        assert snap["pending_count"] == 0 and snap["deferred_count"] == 0
        assert snap["last_hr"] is None and snap["arousal"] is None

    def test_snapshot_pure(self):
        s = new_session(FAST)
        calibrate(s)
        assert snapshot(s) == snapshot(s)

    def test_mode_after_stop(self):
        s = new_session(FAST)
        drive(s, CommandIssued(parse_command("stop")), 10)
        assert snapshot(s)["mode"] == "stopped"


class TestZoneSafetyAudit:
    def test_come_back_forces_neutral_policy_and_audit_accepts(self):
        s = new_session(FAST)
        calibrate(s)
        for i in range(6):
            hr(s, 10_000 + i * 1000, 90)
        assert s.mode == RobotMode.WITHDRAWN
        drive(s, CommandIssued(parse_command("draw a grid")), 16_000)
        drive(s, CommandIssued(parse_command("come back")), 16_100)
        assert s.mode == RobotMode.PAINTING
        run_ticks(s, 16_100, 40)
        assert robot_px(s) > 0
        assert s.zone_violations == 0
