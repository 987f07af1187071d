"""Websocket server and offline replay for the live feedback protocol.

Protocol, JSON text frames over one duplex connection:

    client -> server
        {"t": "hello"}
        {"t": "start", "exercise": "...", "profile": "..."}  (profile optional)
        {"t": "frame", "time_ms": ..., "kp": [[x, y, c], ...]}
        {"t": "end"}
    server -> client
        {"t": "hello", "exercises": [...], "version": "..."}
        {"t": "ack", "session": "...", "exercise": "...", "classes": [...]}
        {"t": "rep", "idx": ..., "verdict": "...", "probs": [...],
         "violations": [...], "latency_ms": ..., "start_ms": ..., "end_ms": ...}
        {"t": "report", ...}
        {"t": "err", "code": "...", "detail": "..."}

Out-of-order frames are dropped silently and show up in the report's
dropped_frames count. A second "end" resends the same report. The replay
driver feeds a Pose CSV through the identical state machine and prints
each server message as one JSON line.
"""

from __future__ import annotations

import json
import os
import sys
import time
from pathlib import Path
from typing import IO

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import __version__
from .classifier import ModelBundle, load_bundle
from .dataset import read_clip
from .exercises import EXERCISES, UnknownExercise, get_exercise
from .service import (
    FeedbackEvent,
    ModelMissing,
    OutOfOrderFrame,
    SessionReport,
    SessionState,
    session_end,
    session_frame,
    session_start,
)
from .skeleton import BUILTIN_PROFILES, KeypointFrame

MODELS_DIR_ENV = "ISOFORM_MODELS_DIR"


def resolve_models_dir(models_dir: str | Path | None = None) -> Path:
    """The directory holding per-exercise model bundles.

    Explicit argument wins, then the ISOFORM_MODELS_DIR environment
    variable, then ./models.
    """
    if models_dir is not None:
        return Path(models_dir)
    env = os.environ.get(MODELS_DIR_ENV)
    return Path(env) if env else Path("models")


class ModelStore:
    """Lazy cache of model bundles, one JSON file per exercise."""

    def __init__(self, models_dir: str | Path | None = None):
        self.models_dir = resolve_models_dir(models_dir)
        self._bundles: dict[str, ModelBundle] = {}

    def bundle_path(self, exercise: str) -> Path:
        return self.models_dir / f"{exercise}.json"

    def bundle(self, exercise: str) -> ModelBundle:
        get_exercise(exercise)  # raises UnknownExercise first
        if exercise not in self._bundles:
            path = self.bundle_path(exercise)
            if not path.is_file():
                raise ModelMissing(f"no model bundle at {path}")
            self._bundles[exercise] = load_bundle(path)
        return self._bundles[exercise]


def event_message(event: FeedbackEvent) -> dict:
    return {
        "t": "rep",
        "idx": event.rep_index,
        "verdict": event.verdict,
        "probs": [float(p) for p in event.probs],
        "violations": [
            {
                "triplet": v.triplet_label,
                "deviation": v.deviation,
                "limit": v.limit,
            }
            for v in event.violations
        ],
        "latency_ms": event.latency_ms,
        "start_ms": event.start_ms,
        "end_ms": event.end_ms,
    }


def report_message(report: SessionReport) -> dict:
    return {
        "t": "report",
        "exercise": report.exercise,
        "reps": report.rep_count,
        "totals": dict(report.totals),
        "dominant_mistake": report.dominant_mistake,
        "mean_deviation": dict(report.mean_deviation),
        "uncertain_percent": report.uncertain_percent,
        "dropped_frames": report.dropped_frames,
        "timeline": [
            {k: v for k, v in event_message(e).items() if k != "t"}
            for e in report.timeline
        ],
    }


def _err(code: str, detail: str = "") -> dict:
    message = {"t": "err", "code": code}
    if detail:
        message["detail"] = detail
    return message


class SessionProtocol:
    """State machine for one connection, independent of the transport.

    handle() maps one client message to the list of server messages it
    produces, so the websocket endpoint, the replay driver, and the
    tests all share the exact same behavior.
    """

    def __init__(self, store: ModelStore):
        self.store = store
        self.session: SessionState | None = None

    def handle(self, message: dict) -> list[dict]:
        kind = message.get("t")
        if kind == "hello":
            return [
                {
                    "t": "hello",
                    "exercises": sorted(EXERCISES),
                    "version": __version__,
                }
            ]
        if kind == "start":
            return self._start(message)
        if kind == "frame":
            return self._frame(message)
        if kind == "end":
            if self.session is None:
                return [_err("no_session")]
            return [report_message(session_end(self.session))]
        return [_err("bad_message", f"unknown message type {kind!r}")]

    def _start(self, message: dict) -> list[dict]:
        exercise = message.get("exercise")
        if not isinstance(exercise, str):
            return [_err("bad_message", "start requires an exercise name")]
        try:
            bundle = self.store.bundle(exercise)
        except UnknownExercise:
            return [_err("unknown_exercise", exercise)]
        except ModelMissing as exc:
            return [_err("model_missing", str(exc))]
        profile = message.get("profile")
        if profile is not None and profile != bundle.profile:
            return [
                _err(
                    "profile_mismatch",
                    f"model uses {bundle.profile!r}, client sent {profile!r}",
                )
            ]
        # Starting over an active session replaces it, so a client can
        # restart without reconnecting.
        self.session = session_start(exercise, bundle)
        return [
            {
                "t": "ack",
                "session": self.session.session_id,
                "exercise": exercise,
                "classes": list(self.session.exercise.classes),
            }
        ]

    def _frame(self, message: dict) -> list[dict]:
        if self.session is None:
            return [_err("no_session")]
        try:
            kp = np.asarray(message["kp"], dtype=np.float64)
            time_ms = float(message["time_ms"])
        except (KeyError, TypeError, ValueError) as exc:
            return [_err("bad_frame", str(exc))]
        profile = self.session.profile
        if kp.ndim != 2 or kp.shape != (profile.joint_count, 3):
            return [_err("bad_frame", f"expected {profile.joint_count} [x, y, c] rows")]
        frame = KeypointFrame(time_ms=time_ms, points=kp[:, :2], confidence=kp[:, 2])
        try:
            _, events = session_frame(self.session, frame)
        except OutOfOrderFrame:
            return []  # dropped; the report's dropped_frames counts it
        return [event_message(e) for e in events]


def create_app(models_dir: str | Path | None = None) -> FastAPI:
    """FastAPI app exposing the feedback protocol at /ws."""
    app = FastAPI(title="isoform feedback service", version=__version__)
    store = ModelStore(models_dir)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "exercises": sorted(EXERCISES)}

    @app.websocket("/ws")
    async def feedback_socket(websocket: WebSocket) -> None:
        await websocket.accept()
        protocol = SessionProtocol(store)
        while True:
            try:
                message = await websocket.receive_json()
            except WebSocketDisconnect:
                return
            except (ValueError, TypeError):
                await websocket.send_json(_err("bad_message", "not valid JSON"))
                continue
            if not isinstance(message, dict):
                await websocket.send_json(_err("bad_message", "expected an object"))
                continue
            for reply in protocol.handle(message):
                await websocket.send_json(reply)

    return app


def frame_messages(clip) -> list[dict]:
    """The protocol frame messages equivalent to a clip's contents."""
    messages = []
    for i in range(len(clip)):
        kp = np.concatenate(
            [clip.points[i], clip.confidence[i][:, None]], axis=1
        ).tolist()
        messages.append({"t": "frame", "time_ms": float(clip.times[i]), "kp": kp})
    return messages


def replay(
    csv_path: str | Path,
    exercise: str,
    models_dir: str | Path | None = None,
    realtime: bool = False,
    out: IO[str] | None = None,
) -> dict:
    """Stream a Pose CSV through the protocol, printing server messages.

    Each server message is written as one JSON line, exactly what a live
    client would have received. Returns the final report message. With
    realtime=True the driver sleeps to match the recorded frame spacing;
    the default replays at full speed.
    """
    out = out if out is not None else sys.stdout
    store = ModelStore(models_dir)
    bundle = store.bundle(exercise)
    profile = BUILTIN_PROFILES[bundle.profile]
    clip = read_clip(csv_path, profile)

    protocol = SessionProtocol(store)
    report: dict = {}

    def emit(messages: list[dict]) -> None:
        nonlocal report
        for message in messages:
            if message["t"] == "err":
                raise RuntimeError(f"replay failed: {message}")
            if message["t"] == "report":
                report = message
            out.write(json.dumps(message, sort_keys=True) + "\n")

    emit(protocol.handle({"t": "start", "exercise": exercise}))
    previous_ms: float | None = None
    for message in frame_messages(clip):
        if realtime and previous_ms is not None:
            time.sleep(max(0.0, (message["time_ms"] - previous_ms) / 1000.0))
        previous_ms = message["time_ms"]
        emit(protocol.handle(message))
    emit(protocol.handle({"t": "end"}))
    return report
