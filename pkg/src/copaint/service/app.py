"""FastAPI service exposing the session to human-facing clients.

Every mutating endpoint only enqueues an event; state is read through
immutable snapshots. The WebSocket at /ws streams a snapshot on
connect, then every session event in seq order plus periodic snapshot
refreshes.
"""

from __future__ import annotations

import asyncio
import logging
from pathlib import Path
from typing import Any

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from ..biometric import parse_sensor_line
from ..canvas import Stroke, Author
from ..commands import DIRECT_GRAMMAR, parse_command
from ..errors import CopaintError, EmptyInput, OutOfBounds
from ..events import ArtistStroke, CommandIssued, RobotMoved, SampleIn
from ..planner import PATTERNS
from .runtime import ClientHandle, SessionRuntime
from .schemas import (
    CommandIn,
    EnqueueAck,
    GrammarEntry,
    GrammarOut,
    MAX_STROKE_POINTS,
    RobotMoveIn,
    SensorIn,
    SessionStartIn,
)

logger = logging.getLogger(__name__)


def create_app(runtime: SessionRuntime, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="copaint studio service", version="0.1.0")
    app.state.runtime = runtime
    # the studio UI may be served from any origin; this is a local tool
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    if static_dir and Path(static_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

    def _require_session() -> JSONResponse | None:
        if not runtime.started:
            return JSONResponse(status_code=409, content={"detail": "session not started"})
        return None

    @app.get("/state")
    def get_state():
        if (err := _require_session()) is not None:
            return err
        return runtime.snapshot()

    @app.get("/canvas.ppm")
    def get_canvas():
        if (err := _require_session()) is not None:
            return err
        return Response(content=runtime.canvas_ppm(), media_type="image/x-portable-pixmap")

    @app.get("/grammar", response_model=GrammarOut)
    def get_grammar():
        return GrammarOut(
            direct=[
                GrammarEntry(phrase=phrase, command=kind.value)
                for phrase, kind in DIRECT_GRAMMAR.items()
            ],
            patterns=sorted(PATTERNS.keys()),
        )

    @app.post("/command", status_code=202, response_model=EnqueueAck)
    def post_command(body: CommandIn):
        if (err := _require_session()) is not None:
            return err
        try:
            command = parse_command(body.text)
        except EmptyInput:
            return JSONResponse(status_code=400, content={"detail": "empty command text"})
        seq = runtime.enqueue(CommandIssued(command))
        return EnqueueAck(seq=seq)

    @app.post("/artist/stroke", status_code=202, response_model=EnqueueAck)
    def post_artist_stroke(body: dict):
        if (err := _require_session()) is not None:
            return err
        path = body.get("path") or []
        if len(path) > MAX_STROKE_POINTS:
            return JSONResponse(status_code=413, content={"detail": "stroke too large"})
        from .schemas import StrokeIn

        try:
            parsed = StrokeIn.model_validate(body)
        except Exception as exc:
            return JSONResponse(status_code=400, content={"detail": str(exc)})
        stroke = Stroke(
            id=-1,
            author=Author.ARTIST,
            color=tuple(parsed.color),
            width_mm=parsed.width_mm,
            path=tuple(parsed.path),
        )
        try:
            stroke.validate(runtime.session.spec)
        except OutOfBounds as exc:
            return JSONResponse(status_code=400, content={"detail": str(exc)})
        seq = runtime.enqueue(ArtistStroke(stroke))
        return EnqueueAck(seq=seq)

    @app.post("/robot/move", status_code=202, response_model=EnqueueAck)
    def post_robot_move(body: RobotMoveIn):
        if (err := _require_session()) is not None:
            return err
        try:
            body.validated()
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"detail": str(exc)})
        if body.outside:
            payload = RobotMoved(x_mm=None, y_mm=None, outside=True)
        else:
            spec = runtime.session.spec
            if not spec.contains(body.x_mm, body.y_mm):
                return JSONResponse(status_code=400, content={"detail": "position outside canvas"})
            payload = RobotMoved(x_mm=body.x_mm, y_mm=body.y_mm, outside=False)
        seq = runtime.enqueue(payload)
        return EnqueueAck(seq=seq)

    @app.post("/sensor", status_code=202)
    def post_sensor(body: SensorIn):
        if (err := _require_session()) is not None:
            return err
        lines = body.as_lines()
        samples = []
        for line in lines:
            try:
                samples.append(parse_sensor_line(line))
            except CopaintError as exc:
                return JSONResponse(
                    status_code=400, content={"detail": f"bad line {line!r}: {exc}"}
                )
        seqs = [runtime.enqueue(SampleIn(s)) for s in samples]
        return {"accepted": len(seqs), "first_seq": seqs[0] if seqs else None}

    @app.post("/session/start")
    def post_session_start(body: SessionStartIn):
        cfg = runtime.start_session(body.config)
        from ..config import config_hash

        return {"started": True, "config_hash": config_hash(cfg)}

    @app.post("/session/reset")
    def post_session_reset():
        if (err := _require_session()) is not None:
            return err
        runtime.reset_session()
        return {"reset": True}

    @app.websocket("/ws")
    async def websocket_stream(ws: WebSocket):
        await ws.accept()
        if not runtime.started:
            await ws.send_json({"type": "error", "detail": "session not started", "terminal": True})
            await ws.close()
            return
        handle = ClientHandle(asyncio.get_running_loop())
        runtime.subscribe(handle)
        await ws.send_json({"type": "snapshot", "data": runtime.snapshot()})

        async def sender():
            while True:
                msg = await handle.queue.get()
                await ws.send_json(msg)
                if msg.get("terminal"):
                    await ws.close()
                    return

        send_task = asyncio.create_task(sender())
        try:
            while True:
                incoming = await ws.receive_json()
                await _handle_client_message(ws, incoming)
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            runtime.unsubscribe(handle)
            send_task.cancel()

    async def _handle_client_message(ws: WebSocket, msg: dict[str, Any]) -> None:
        corr = msg.get("corr")
        kind = msg.get("type")
        try:
            if kind == "command":
                seq = runtime.enqueue(CommandIssued(parse_command(msg["payload"]["text"])))
            elif kind == "artist_stroke":
                p = msg["payload"]
                stroke = Stroke(
                    id=-1,
                    author=Author.ARTIST,
                    color=tuple(p.get("color", (20, 20, 20))),
                    width_mm=float(p.get("width_mm", 1.5)),
                    path=tuple((float(x), float(y)) for x, y in p["path"]),
                )
                stroke.validate(runtime.session.spec)
                seq = runtime.enqueue(ArtistStroke(stroke))
            elif kind == "robot_move":
                p = msg["payload"]
                if p.get("outside"):
                    payload = RobotMoved(x_mm=None, y_mm=None, outside=True)
                else:
                    payload = RobotMoved(x_mm=float(p["x_mm"]), y_mm=float(p["y_mm"]), outside=False)
                seq = runtime.enqueue(payload)
            elif kind == "sensor":
                lines = msg["payload"]["lines"]
                if isinstance(lines, str):
                    lines = lines.splitlines()
                seq = None
                for line in lines:
                    if line.strip():
                        seq = runtime.enqueue(SampleIn(parse_sensor_line(line)))
            elif kind == "start":
                runtime.start_session(msg.get("payload", {}).get("config", {}))
                seq = 0
            elif kind == "reset":
                runtime.reset_session()
                seq = 0
            else:
                raise ValueError(f"unknown message type {kind!r}")
        except (CopaintError, ValueError, KeyError, TypeError, RuntimeError) as exc:
            await ws.send_json({"type": "error", "corr": corr, "detail": str(exc)})
            return
        await ws.send_json({"type": "event", "corr": corr, "data": {"accepted": True, "seq": seq}})

    return app


def create_default_app() -> FastAPI:
    """Uvicorn factory target: service with an auto-started session."""
    runtime = SessionRuntime()
    runtime.start_session()
    runtime.start()
    return create_app(runtime)
