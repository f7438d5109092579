"""The event-sourced session engine.

State is a pure fold over the ordered event log: applying an event
mutates the session deterministically and returns the payloads it
emits; ``drive`` assigns sequence numbers and applies emissions
depth-first so a recorded log replays to a bit-identical canvas.
Exactly one logical consumer applies events; producers only enqueue.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Sequence

from .arousal import ArousalLevel, ArousalState, Baseline, calibrate_baseline, classify_arousal, fit_hr_trend
from .biometric import (
    TAG_HR,
    TAG_PPG,
    BiometricSample,
    HeartRateEstimate,
    SampleBuffer,
    estimate_heart_rate,
)
from .canvas import (
    Author,
    Canvas,
    CanvasSpec,
    Quadrant,
    ZonePolicy,
    active_workspace,
    canvas_digest,
    quadrant_of,
    rasterize_stroke,
    zone_policy,
)
from .commands import Direct, DirectKind, PaintPrompt
from .config import SessionConfig, config_hash, config_to_dict
from .errors import (
    InsufficientData,
    OutOfBounds,
    SampleRangeError,
    SeqGap,
    UnknownPattern,
    WindowTooShort,
)
from .events import (
    ArousalChanged,
    ArtistStroke,
    CommandIssued,
    HrUpdated,
    PaintRefilled,
    Payload,
    PromptRejected,
    RobotMode,
    RobotMoved,
    SampleIn,
    SessionEvent,
    StateChanged,
    Tick,
    event_to_dict,
)
from .planner import (
    StrokePlan,
    filter_by_zones,
    plan_from_prompt,
    reprioritize_for_position,
    stroke_executable,
)

logger = logging.getLogger(__name__)

RECENT_EVENTS = 50


def _quadrant_center(q: Quadrant, spec: CanvasSpec) -> tuple[float, float]:
    x0, y0, x1, y1 = q.rect_mm(spec)
    return ((x0 + x1) / 2.0, (y0 + y1) / 2.0)


@dataclass
class _Progress:
    """Execution cursor over the in-flight robot stroke."""

    stroke: Any
    seg: int = 0
    offset_mm: float = 0.0
    phase: str = "travel"  # travel -> paint
    started: bool = False


class Session:
    """All mutable session state; owned by a single consumer."""

    def __init__(self, cfg: SessionConfig):
        self.cfg = cfg
        self.spec = cfg.canvas
        self.canvas = Canvas(cfg.canvas)
        self.mode = RobotMode.IDLE
        self.pos: tuple[float, float] = cfg.robot.paint_station
        self.outside = False
        self.paint_remaining_mm = cfg.robot.paint_capacity_mm
        self.pen_down_since_refill = 0.0
        self.refill_ticks_left = 0
        self.current: _Progress | None = None

        self.plan = StrokePlan(prompt="", seed=cfg.seed)
        self.palette_index = 0
        self.queued_prompts: list[str] = []
        self.next_stroke_id = 0
        self.plans_made = 0

        retention = cfg.estimator.window_s + 10.0
        self.buffers = {TAG_PPG: SampleBuffer(retention), TAG_HR: SampleBuffer(retention)}
        self.last_estimate_attempt_ms: float | None = None
        self.estimator_failures = 0

        self.hr_history: deque[HeartRateEstimate] = deque(maxlen=cfg.arousal.trend_window)
        self.baseline_estimates: list[HeartRateEstimate] = []
        self.baseline: Baseline | None = None
        self.arousal: ArousalState | None = None

        self.active = Quadrant(0, 0)
        self.policy_level = ArousalLevel.NEUTRAL
        self.policy: ZonePolicy = zone_policy(ArousalLevel.NEUTRAL, self.active)
        self.artist_points: deque[tuple[float, float, float]] = deque(maxlen=4096)
        self.withdraw_cause: str | None = None
        self.park_target: tuple[float, float] | None = None

        self.events: list[SessionEvent] = []
        self.recent: deque[SessionEvent] = deque(maxlen=RECENT_EVENTS)
        self.last_seq = 0
        self.now_ms = 0
        self.transitions: list[dict[str, Any]] = []
        self.executed_strokes: list[dict[str, Any]] = []
        self.zone_violations = 0
        self.prompt_rejections = 0
        self.paint_refills = 0


def new_session(cfg: SessionConfig | None = None) -> Session:
    return Session(cfg or SessionConfig())


# -- event application ----------------------------------------------------------

def apply_event(session: Session, event: SessionEvent) -> list[Payload]:
    """Apply one event; returns the payloads it emits (seq-less).

    Emitted payloads are the *next* events of the session: callers
    either enqueue them (live) or ignore them (replay, where they are
    already the next entries of the log).
    """
    if event.seq != session.last_seq + 1:
        raise SeqGap(f"event seq {event.seq}, expected {session.last_seq + 1}")
    if event.at_ms < session.now_ms:
        raise SeqGap(f"at_ms went backwards: {event.at_ms} < {session.now_ms}")
    session.last_seq = event.seq
    session.now_ms = event.at_ms

    emitted: list[Payload] = []
    payload = event.payload
    if isinstance(payload, SampleIn):
        _on_sample(session, payload.sample, emitted)
    elif isinstance(payload, HrUpdated):
        _on_estimate(session, payload.estimate, emitted)
    elif isinstance(payload, ArousalChanged):
        _on_arousal(session, payload.state, emitted)
    elif isinstance(payload, CommandIssued):
        _on_command(session, payload, emitted)
    elif isinstance(payload, ArtistStroke):
        _on_artist_stroke(session, payload, emitted)
    elif isinstance(payload, RobotMoved):
        _on_robot_moved(session, payload, emitted)
    elif isinstance(payload, Tick):
        _on_tick(session, emitted)
    # StateChanged / PromptRejected / PaintRefilled are notifications:
    # their state effects happened where they were emitted.

    session.events.append(event)
    session.recent.append(event)
    return emitted


def drive(session: Session, payload: Payload, at_ms: int) -> list[SessionEvent]:
    """Enqueue-and-apply one input plus its emission cascade, depth first."""
    applied: list[SessionEvent] = []

    def _run(p: Payload, t: int) -> None:
        ev = SessionEvent(seq=session.last_seq + 1, at_ms=t, payload=p)
        emitted = apply_event(session, ev)
        applied.append(ev)
        for sub in emitted:
            _run(sub, t)

    _run(payload, max(int(at_ms), session.now_ms))
    return applied


def tick(session: Session, now_ms: int) -> list[SessionEvent]:
    """Advance simulated time by one tick at ``now_ms``."""
    return drive(session, Tick(), now_ms)


def replay_log(
    events: Iterable[SessionEvent],
    cfg: SessionConfig,
    observer: Callable[[Session, SessionEvent], None] | None = None,
) -> Session:
    """Fold a recorded log over a fresh session; emissions are already
    in the log, so they are discarded here."""
    session = new_session(cfg)
    for ev in events:
        apply_event(session, ev)
        if observer is not None:
            observer(session, ev)
    return session


# -- per-payload handlers ---------------------------------------------------------

def _set_mode(session: Session, to: RobotMode, emitted: list[Payload]) -> None:
    if to == session.mode:
        return
    emitted.append(StateChanged(from_mode=session.mode, to_mode=to))
    session.transitions.append(
        {"at_ms": session.now_ms, "from": session.mode.value, "to": to.value}
    )
    session.mode = to


def _abort_current_stroke(session: Session) -> None:
    # the painted part stays; the unpainted remainder is dropped
    session.current = None


def _on_sample(session: Session, sample: BiometricSample, emitted: list[Payload]) -> None:
    if session.mode == RobotMode.IDLE:
        _set_mode(session, RobotMode.CALIBRATING, emitted)
    buf = session.buffers[sample.tag]
    if not buf.add(sample):
        return
    if sample.tag == TAG_HR:
        emitted.append(
            HrUpdated(
                HeartRateEstimate(
                    timestamp_ms=sample.timestamp_ms,
                    bpm=sample.value,
                    confidence=session.cfg.direct_hr_confidence,
                    n_peaks=0,
                    window_s=session.cfg.estimator.window_s,
                )
            )
        )
        return
    # PPG path: try an estimate once per hop when the window is full
    est_cfg = session.cfg.estimator
    if buf.span_s() + 1.0 / session.cfg.ppg_fs + 1e-9 < est_cfg.window_s:
        return
    ts = sample.timestamp_ms
    last = session.last_estimate_attempt_ms
    if last is not None and ts - last < session.cfg.estimate_hop_s * 1000.0 - 1e-9:
        return
    session.last_estimate_attempt_ms = ts
    window = buf.window(est_cfg.window_s)
    try:
        est = estimate_heart_rate(window, session.cfg.ppg_fs, est_cfg)
    except (InsufficientData, WindowTooShort, SampleRangeError):
        session.estimator_failures += 1
        return
    emitted.append(HrUpdated(est))


def _on_estimate(session: Session, est: HeartRateEstimate, emitted: list[Payload]) -> None:
    session.hr_history.append(est)
    cfg = session.cfg.arousal

    if session.baseline is None or not session.baseline.calibrated:
        session.baseline_estimates.append(est)
        done = (
            est.timestamp_ms >= cfg.calibration_s * 1000.0
            and len(session.baseline_estimates) >= cfg.min_baseline_estimates
        )
        if done:
            session.baseline = calibrate_baseline(
                session.baseline_estimates, cfg.min_baseline_estimates
            )
            if session.mode == RobotMode.CALIBRATING:
                _set_mode(session, RobotMode.PAINTING, emitted)
            # queued prompts are flushed when the first ArousalChanged
            # applies, so plans see the freshly classified policy
        else:
            return

    # classify once per new estimate, on the estimate's own clock
    _slope, predicted = fit_hr_trend(list(session.hr_history), est.timestamp_ms)
    state = classify_arousal(predicted, session.baseline, session.arousal, cfg, est.timestamp_ms)
    previous = session.arousal
    session.arousal = state
    if previous is None or state.level != previous.level:
        emitted.append(ArousalChanged(state))


def _refresh_policy(session: Session, level: ArousalLevel) -> None:
    session.policy_level = level
    session.policy = zone_policy(level, session.active)
    session.plan = filter_by_zones(session.plan, session.policy, session.spec)
    if session.current is not None and not stroke_executable(
        session.current.stroke, session.policy, session.spec
    ):
        _abort_current_stroke(session)
    if session.policy.park is not None:
        session.park_target = _quadrant_center(session.policy.park, session.spec)


def _on_arousal(session: Session, state: ArousalState, emitted: list[Payload]) -> None:
    session.arousal = state
    session.active = active_workspace(
        session.artist_points,
        session.cfg.workspace_window_s,
        session.spec,
        session.active,
        now_ms=session.now_ms,
    )
    _refresh_policy(session, state.level)

    if state.level == ArousalLevel.AROUSED:
        if session.mode in (RobotMode.PAINTING, RobotMode.REFILL):
            # retreat immediately, abandoning an unfinished refill
            _abort_current_stroke(session)
            session.refill_ticks_left = 0
            session.withdraw_cause = "arousal"
            _set_mode(session, RobotMode.WITHDRAWN, emitted)
    else:
        if session.mode == RobotMode.WITHDRAWN and session.withdraw_cause == "arousal":
            session.withdraw_cause = None
            _set_mode(session, RobotMode.PAINTING, emitted)

    if session.queued_prompts and session.baseline and session.baseline.calibrated:
        queued, session.queued_prompts = session.queued_prompts, []
        for text in queued:
            _handle_prompt(session, text, emitted)


def _plan_region(session: Session) -> Quadrant | None:
    level = session.policy_level
    if level == ArousalLevel.NEUTRAL:
        return None
    if level == ArousalLevel.NEAR_THRESHOLD:
        allowed = sorted(session.policy.paint_allowed, key=lambda q: (q.col, q.row))
        return allowed[0] if allowed else session.active.diagonal()
    return session.active.diagonal()


def _handle_prompt(session: Session, text: str, emitted: list[Payload]) -> None:
    try:
        plan = plan_from_prompt(
            text,
            _plan_region(session),
            list(session.cfg.palette),
            session.cfg.seed + session.plans_made,
            session.spec,
            palette_index=session.palette_index,
            width_mm=session.cfg.robot.brush_width_mm,
            first_id=session.next_stroke_id,
            inset_mm=session.cfg.robot.pattern_inset_mm,
        )
    except UnknownPattern:
        session.prompt_rejections += 1
        emitted.append(PromptRejected(text))
        return
    discarded = len(session.plan.pending) + len(session.plan.deferred)
    if discarded:
        logger.info("prompt %r replaces plan with %d undone strokes", text, discarded)
    session.next_stroke_id += len(plan.pending)
    session.plans_made += 1
    _abort_current_stroke(session)
    session.plan = filter_by_zones(plan, session.policy, session.spec)


def _on_command(session: Session, payload: CommandIssued, emitted: list[Payload]) -> None:
    cmd = payload.command
    if isinstance(cmd, PaintPrompt):
        if session.baseline is None or not session.baseline.calibrated:
            session.queued_prompts.append(cmd.text)
            return
        _handle_prompt(session, cmd.text, emitted)
        return

    kind = cmd.kind
    if kind == DirectKind.STOP:
        _abort_current_stroke(session)
        _set_mode(session, RobotMode.STOPPED, emitted)
    elif kind == DirectKind.PAUSE:
        if session.mode == RobotMode.PAINTING:
            _set_mode(session, RobotMode.PAUSED, emitted)
    elif kind == DirectKind.RESUME:
        if session.mode == RobotMode.PAUSED:
            _set_mode(session, RobotMode.PAINTING, emitted)
        elif session.mode == RobotMode.STOPPED and not session.outside:
            _set_mode(session, RobotMode.PAINTING, emitted)
    elif kind == DirectKind.CHANGE_COLORS:
        session.palette_index = (session.palette_index + 1) % max(1, len(session.cfg.palette))
    elif kind == DirectKind.MOVE_AWAY:
        if session.mode in (
            RobotMode.PAINTING,
            RobotMode.PAUSED,
            RobotMode.REFILL,
            RobotMode.WITHDRAWN,
        ):
            _abort_current_stroke(session)
            session.withdraw_cause = "command"
            _refresh_policy(session, ArousalLevel.AROUSED)
            _set_mode(session, RobotMode.WITHDRAWN, emitted)
    elif kind == DirectKind.COME_BACK:
        if session.mode == RobotMode.WITHDRAWN:
            session.withdraw_cause = None
            _refresh_policy(session, ArousalLevel.NEUTRAL)
            _set_mode(session, RobotMode.PAINTING, emitted)


def _on_artist_stroke(session: Session, payload: ArtistStroke, emitted: list[Payload]) -> None:
    stroke = payload.stroke
    if stroke.id < 0:
        stroke = replace(stroke, id=session.next_stroke_id)
    session.next_stroke_id = max(session.next_stroke_id, stroke.id + 1)
    stroke = replace(stroke, author=Author.ARTIST)
    rasterize_stroke(session.canvas, stroke, session.spec)
    for x, y in stroke.path:
        session.artist_points.append((float(session.now_ms), x, y))
    prev_active = session.active
    session.active = active_workspace(
        session.artist_points,
        session.cfg.workspace_window_s,
        session.spec,
        session.active,
        now_ms=session.now_ms,
    )
    if session.active != prev_active:
        _refresh_policy(session, session.policy_level)


def _on_robot_moved(session: Session, payload: RobotMoved, emitted: list[Payload]) -> None:
    if payload.outside:
        session.outside = True
        _abort_current_stroke(session)
        _set_mode(session, RobotMode.STOPPED, emitted)
        return
    pos = (float(payload.x_mm), float(payload.y_mm))
    if not session.spec.contains(*pos):
        raise OutOfBounds(f"robot moved to {pos} outside canvas")
    session.outside = False
    session.pos = pos
    _abort_current_stroke(session)
    session.plan = reprioritize_for_position(session.plan, pos, session.spec)
    if session.mode in (RobotMode.PAINTING, RobotMode.PAUSED, RobotMode.WITHDRAWN):
        session.withdraw_cause = None
        _set_mode(session, RobotMode.PAINTING, emitted)


# -- tick executor ----------------------------------------------------------------

def _move_toward(session: Session, target: tuple[float, float], max_dist: float) -> float:
    """Move up to max_dist toward target; returns distance actually moved."""
    d = math.dist(session.pos, target)
    if d <= 1e-12:
        return 0.0
    if d <= max_dist:
        session.pos = target
        return d
    frac = max_dist / d
    session.pos = (
        session.pos[0] + (target[0] - session.pos[0]) * frac,
        session.pos[1] + (target[1] - session.pos[1]) * frac,
    )
    return max_dist


def _segment_length(path: Sequence[tuple[float, float]], seg: int) -> float:
    return math.dist(path[seg], path[seg + 1])


def _point_on_segment(
    path: Sequence[tuple[float, float]], seg: int, offset_mm: float
) -> tuple[float, float]:
    p0, p1 = path[seg], path[seg + 1]
    length = math.dist(p0, p1)
    if length <= 1e-12:
        return p0
    t = offset_mm / length
    return (p0[0] + (p1[0] - p0[0]) * t, p0[1] + (p1[1] - p0[1]) * t)


def _audit_robot_pixels(session: Session, stamped) -> None:
    if len(stamped) == 0:
        return
    allowed = session.policy.paint_allowed
    for q in session.canvas.pixel_quadrants(stamped):
        if q not in allowed:
            session.zone_violations += 1


def _enter_refill(session: Session, emitted: list[Payload]) -> None:
    session.refill_ticks_left = session.cfg.robot.refill_ticks
    _set_mode(session, RobotMode.REFILL, emitted)


def _advance_painting(session: Session, time_s: float, emitted: list[Payload]) -> None:
    rob = session.cfg.robot
    while time_s > 1e-9:
        if session.current is None:
            if not session.plan.pending:
                return
            session.current = _Progress(stroke=session.plan.pending.pop(0))
        cur = session.current
        path = cur.stroke.path

        if cur.phase == "travel":
            target = _point_on_segment(path, cur.seg, cur.offset_mm)
            dist_left = math.dist(session.pos, target)
            budget = rob.travel_speed_mm_s * time_s
            moved = _move_toward(session, target, budget)
            time_s -= moved / rob.travel_speed_mm_s if moved > 0 else 0.0
            if dist_left > budget + 1e-12:
                return
            cur.phase = "paint"
            if not cur.started:
                cur.started = True
                session.executed_strokes.append(
                    {
                        "at_ms": session.now_ms,
                        "seq": session.last_seq,
                        "stroke_id": cur.stroke.id,
                        "first_point": list(path[0]),
                        "quadrant": [
                            quadrant_of(path[0], session.spec).col,
                            quadrant_of(path[0], session.spec).row,
                        ],
                    }
                )
            continue

        # paint phase
        if cur.seg >= len(path) - 1:
            session.current = None
            continue
        seg_len = _segment_length(path, cur.seg)
        remaining = seg_len - cur.offset_mm
        if remaining <= 1e-9:
            cur.seg += 1
            cur.offset_mm = 0.0
            if cur.seg >= len(path) - 1:
                session.current = None
            continue
        need = min(remaining, rob.paint_capacity_mm)
        if session.paint_remaining_mm + 1e-9 < need:
            _enter_refill(session, emitted)
            return
        step = min(remaining, rob.paint_speed_mm_s * time_s, session.paint_remaining_mm)
        if step <= 1e-12:
            return
        p_from = _point_on_segment(path, cur.seg, cur.offset_mm)
        p_to = _point_on_segment(path, cur.seg, cur.offset_mm + step)
        stamped = session.canvas.draw_segment(
            p_from, p_to, cur.stroke.color, cur.stroke.width_mm, Author.ROBOT, cur.stroke.id
        )
        _audit_robot_pixels(session, stamped)
        session.pos = p_to
        cur.offset_mm += step
        session.paint_remaining_mm -= step
        session.pen_down_since_refill += step
        time_s -= step / rob.paint_speed_mm_s
        if cur.offset_mm >= seg_len - 1e-9:
            cur.seg += 1
            cur.offset_mm = 0.0
            if cur.seg >= len(path) - 1:
                session.current = None


def _on_tick(session: Session, emitted: list[Payload]) -> None:
    rob = session.cfg.robot
    dt_s = rob.tick_ms / 1000.0
    if session.mode == RobotMode.PAINTING:
        _advance_painting(session, dt_s, emitted)
    elif session.mode == RobotMode.WITHDRAWN:
        if session.park_target is not None:
            _move_toward(session, session.park_target, rob.travel_speed_mm_s * dt_s)
    elif session.mode == RobotMode.REFILL:
        _move_toward(session, rob.paint_station, rob.travel_speed_mm_s * dt_s)
        session.refill_ticks_left -= 1
        if session.refill_ticks_left <= 0:
            session.paint_remaining_mm = rob.paint_capacity_mm
            session.pen_down_since_refill = 0.0
            session.paint_refills += 1
            emitted.append(PaintRefilled())
            if session.policy_level == ArousalLevel.AROUSED:
                session.withdraw_cause = session.withdraw_cause or "arousal"
                _set_mode(session, RobotMode.WITHDRAWN, emitted)
            else:
                _set_mode(session, RobotMode.PAINTING, emitted)
    # Paused / Stopped / Idle / Calibrating: position holds


# -- views --------------------------------------------------------------------------

def log_header(cfg: SessionConfig) -> dict[str, Any]:
    return {"config_hash": config_hash(cfg), "config": config_to_dict(cfg)}


def snapshot(session: Session, include_digest: bool = True) -> dict[str, Any]:
    """Immutable UI-facing summary of the session."""
    last_hr = session.hr_history[-1] if session.hr_history else None
    arousal = session.arousal
    return {
        "mode": session.mode.value,
        "canvas": {
            "width_mm": session.spec.width_mm,
            "height_mm": session.spec.height_mm,
            "px_per_mm": session.spec.px_per_mm,
        },
        "pos": [session.pos[0], session.pos[1]],
        "outside": session.outside,
        "last_hr": (
            {
                "timestamp_ms": last_hr.timestamp_ms,
                "bpm": last_hr.bpm,
                "confidence": last_hr.confidence,
            }
            if last_hr
            else None
        ),
        "arousal": (
            {
                "level": arousal.level.name.lower(),
                "predicted_bpm": arousal.predicted_bpm,
                "threshold_bpm": arousal.threshold_bpm,
                "at_ms": arousal.at_ms,
            }
            if arousal
            else None
        ),
        "threshold_bpm": arousal.threshold_bpm if arousal else None,
        "baseline": (
            {
                "mu_bpm": session.baseline.mu_bpm,
                "sigma_bpm": session.baseline.sigma_bpm,
                "n_samples": session.baseline.n_samples,
                "calibrated": session.baseline.calibrated,
            }
            if session.baseline
            else None
        ),
        "active_quadrant": [session.active.col, session.active.row],
        "paint_allowed": sorted(
            [q.col, q.row] for q in session.policy.paint_allowed
        ),
        "park": (
            [session.policy.park.col, session.policy.park.row]
            if session.policy.park
            else None
        ),
        "pending_count": len(session.plan.pending),
        "deferred_count": len(session.plan.deferred),
        "palette_index": session.palette_index,
        "paint_remaining_mm": session.paint_remaining_mm,
        "canvas_digest": canvas_digest(session.canvas) if include_digest else None,
        "canvas_version": session.canvas.version,
        "seq": session.last_seq,
        "now_ms": session.now_ms,
        "recent_events": [event_to_dict(e) for e in session.recent],
    }


def session_summary(session: Session) -> dict[str, Any]:
    """Scenario / CLI exit report."""
    by_quadrant = session.canvas.author_pixels_by_quadrant(Author.ROBOT)
    return {
        "final_mode": session.mode.value,
        "canvas_digest": canvas_digest(session.canvas),
        "transitions": list(session.transitions),
        "robot_pixels_total": session.canvas.count_author_pixels(Author.ROBOT),
        "robot_pixels_by_quadrant": {
            f"{q.col},{q.row}": n for q, n in sorted(by_quadrant.items(), key=lambda kv: (kv[0].col, kv[0].row))
        },
        "artist_pixels_total": session.canvas.count_author_pixels(Author.ARTIST),
        "zone_violations": session.zone_violations,
        "dropped_samples": {
            "duplicate": sum(b.dropped_duplicate for b in session.buffers.values()),
            "late": sum(b.dropped_late for b in session.buffers.values()),
        },
        "estimator_failures": session.estimator_failures,
        "prompt_rejections": session.prompt_rejections,
        "paint_refills": session.paint_refills,
        "executed_strokes": list(session.executed_strokes),
        "events_applied": session.last_seq,
        "duration_ms": session.now_ms,
    }
