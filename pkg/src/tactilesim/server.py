"""HTTP/WebSocket service bridging live transports or replay to the UI.

Contract (all JSON):

    GET  /devices          configured devices, each with its saved layout
    GET  /metrics          per-device session metrics snapshot
    POST /layout           {"deviceId": n, "layout": {...}} -> persisted to
                           the config file and echoed by GET /devices
    POST /replay/control   {"action": "play"|"pause", "start"?, "end"?, "speed"?}
    WS   /stream           frame messages: {"type": "frame", "deviceId",
                           "packetId", "tsUs", "rows", "cols", "values",
                           "reconstructed"}

Ingestion threads (socket listeners, the replay pump) hand packets to
``TelemetryHub.feed``; each device's session is advanced under one lock,
and resulting frames are fanned out to every connected WebSocket client.
Clients that fall behind are disconnected rather than buffered without
bound.
"""

from __future__ import annotations

import asyncio
import json
import math
import threading
import time
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Iterable

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect

from .config import DeviceConfig, device_config_from_dict
from .errors import CodecError, ConfigError, GeometryError
from .receiver import DeviceSession, SessionRecorder, replay
from .transport import DatagramListener, StreamListener
from .wire import Frame, decode_packet

SUBSCRIBER_QUEUE_LIMIT = 1024


def now_us() -> int:
    return time.time_ns() // 1000


def load_hub_config(path: str | Path) -> tuple[list[DeviceConfig], dict[str, dict]]:
    """Read the wrapper config: device list plus per-device layout section."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config JSON: {exc}") from exc
    if isinstance(doc, list):
        doc = {"devices": doc}
    devices = [device_config_from_dict(d) for d in doc.get("devices", [])]
    if not devices:
        raise ConfigError("config has no devices")
    layouts = doc.get("layout", {})
    if not isinstance(layouts, dict):
        raise ConfigError("layout section must be an object keyed by deviceId")
    return devices, layouts


def frame_message(frame: Frame) -> dict:
    return {
        "type": "frame",
        "deviceId": frame.device_id,
        "packetId": frame.packet_id,
        "tsUs": frame.timestamp_us,
        "rows": frame.rows,
        "cols": frame.cols,
        "values": [int(v) for v in frame.values],
        "reconstructed": frame.reconstructed,
    }


class TelemetryHub:
    """Serialized multi-sender ingestion shared by transports and replay."""

    def __init__(
        self,
        devices: Iterable[DeviceConfig],
        layouts: dict[str, dict] | None = None,
        config_path: str | Path | None = None,
        recorder: SessionRecorder | None = None,
    ):
        self.devices = {c.device_id: c for c in devices}
        self.layouts = dict(layouts or {})
        self.config_path = Path(config_path) if config_path else None
        self.recorder = recorder
        self.sessions = {did: DeviceSession(c) for did, c in self.devices.items()}
        self.unknown_device_packets = 0
        self.decode_errors = 0
        self._lock = threading.Lock()
        self._loop: asyncio.AbstractEventLoop | None = None
        self._subscribers: set[asyncio.Queue] = set()

    def attach_loop(self, loop: asyncio.AbstractEventLoop) -> None:
        self._loop = loop

    def subscribe(self) -> asyncio.Queue:
        queue: asyncio.Queue = asyncio.Queue(maxsize=SUBSCRIBER_QUEUE_LIMIT)
        with self._lock:
            self._subscribers.add(queue)
        return queue

    def unsubscribe(self, queue: asyncio.Queue) -> None:
        with self._lock:
            self._subscribers.discard(queue)

    def feed(self, packet: bytes | Frame, arrival_us: int | None = None) -> list[Frame]:
        """Ingest one packet from any thread; returns the emitted frames."""
        arrival_us = now_us() if arrival_us is None else arrival_us
        try:
            frame = decode_packet(packet) if isinstance(packet, (bytes, bytearray)) else packet
        except CodecError:
            self.decode_errors += 1
            return []
        with self._lock:
            session = self.sessions.get(frame.device_id)
            if session is None:
                self.unknown_device_packets += 1
                return []
            try:
                emitted = session.ingest(frame, arrival_us)
            except GeometryError:
                self.decode_errors += 1
                return []
            if self.recorder is not None:
                self.recorder.on_frames(frame.device_id, emitted, arrival_us)
            subscribers = list(self._subscribers)
        if emitted and subscribers and self._loop is not None:
            messages = [frame_message(f) for f in emitted]
            self._loop.call_soon_threadsafe(self._fanout, messages, subscribers)
        return emitted

    def _fanout(self, messages: list[dict], subscribers: list[asyncio.Queue]) -> None:
        for queue in subscribers:
            for message in messages:
                try:
                    queue.put_nowait(message)
                except asyncio.QueueFull:
                    # slow consumer: poison and drop it instead of buffering forever
                    self.unsubscribe(queue)
                    while not queue.empty():
                        queue.get_nowait()
                    queue.put_nowait(None)
                    break

    def metrics(self) -> dict:
        with self._lock:
            return {
                str(did): session.metrics.to_json_dict()
                for did, session in self.sessions.items()
            }

    def reset_sessions(self) -> None:
        """Fresh per-device state, e.g. when replay restarts from the top."""
        with self._lock:
            self.sessions = {did: DeviceSession(c) for did, c in self.devices.items()}

    def device_list(self) -> list[dict]:
        out = []
        for did, config in sorted(self.devices.items()):
            entry = config.to_json_dict()
            entry["layout"] = self.layouts.get(str(did))
            out.append(entry)
        return out

    def save_layout(self, device_id: int, layout: dict) -> None:
        if device_id not in self.devices:
            raise ConfigError(f"unknown deviceId {device_id}")
        with self._lock:
            self.layouts[str(device_id)] = layout
            if self.config_path is not None:
                doc = {}
                if self.config_path.exists():
                    doc = json.loads(self.config_path.read_text())
                    if isinstance(doc, list):
                        doc = {"devices": doc}
                doc.setdefault(
                    "devices", [c.to_json_dict() for c in self.devices.values()]
                )
                doc.setdefault("layout", {})
                doc["layout"][str(device_id)] = layout
                self.config_path.write_text(json.dumps(doc, indent=2) + "\n")

    def close(self) -> None:
        if self.recorder is not None:
            self.recorder.close()


class ReplayController:
    """Runs the replay pump in a thread, restartable through the API."""

    def __init__(self, hub: TelemetryHub, path: str | Path, speed: float = 1.0):
        self.hub = hub
        self.path = Path(path)
        self.speed = speed
        self.start_us: int | None = None
        self.end_us: int | None = None
        self._thread: threading.Thread | None = None
        self._stop = threading.Event()

    @property
    def playing(self) -> bool:
        return self._thread is not None and self._thread.is_alive()

    def control(self, action: str, start=None, end=None, speed=None) -> dict:
        if speed is not None:
            try:
                value = float(speed)
            except (TypeError, ValueError):
                raise ConfigError(f"speed must be a number, got {speed!r}")
            if not (value > 0 and math.isfinite(value)):
                raise ConfigError("speed must be a finite positive number")
            self.speed = value
        if start is not None:
            self.start_us = int(start)
        if end is not None:
            self.end_us = int(end)
        if action == "pause":
            self.pause()
        elif action == "play":
            self.play()
        elif action:
            raise ConfigError(f"unknown replay action {action!r}")
        return {"playing": self.playing, "speed": self.speed,
                "start": self.start_us, "end": self.end_us}

    def play(self) -> None:
        self.pause()
        # a fresh pass re-sends packet ids from the top; stale session
        # expectations would drop every frame as a duplicate
        self.hub.reset_sessions()
        self._stop.clear()
        self._thread = threading.Thread(target=self._pump, daemon=True)
        self._thread.start()

    def pause(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None

    def _pump(self) -> None:
        for frame in replay(self.path, self.start_us, self.end_us, self.speed):
            if self._stop.is_set():
                return
            self.hub.feed(frame, now_us())


def create_app(
    hub: TelemetryHub,
    replay_controller: ReplayController | None = None,
    static_dir: str | Path | None = None,
) -> FastAPI:
    @asynccontextmanager
    async def lifespan(_: FastAPI):
        hub.attach_loop(asyncio.get_running_loop())
        yield

    app = FastAPI(title="tactilesim hub", lifespan=lifespan)

    @app.get("/devices")
    def devices() -> dict:
        return {"devices": hub.device_list()}

    @app.get("/metrics")
    def metrics() -> dict:
        return hub.metrics()

    @app.post("/layout")
    def post_layout(body: dict) -> dict:
        if "deviceId" not in body or "layout" not in body:
            raise HTTPException(status_code=422, detail="need deviceId and layout")
        try:
            hub.save_layout(int(body["deviceId"]), body["layout"])
        except ConfigError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return {"ok": True}

    @app.post("/replay/control")
    def replay_control(body: dict) -> dict:
        if replay_controller is None:
            raise HTTPException(status_code=409, detail="no replay source configured")
        try:
            return replay_controller.control(
                body.get("action", ""),
                start=body.get("start"),
                end=body.get("end"),
                speed=body.get("speed"),
            )
        except ConfigError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.websocket("/stream")
    async def stream(ws: WebSocket) -> None:
        await ws.accept()
        queue = hub.subscribe()
        try:
            while True:
                message = await queue.get()
                if message is None:  # dropped as a slow consumer
                    break
                await ws.send_json(message)
        except WebSocketDisconnect:
            pass
        finally:
            hub.unsubscribe(queue)

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def start_listeners(hub: TelemetryHub, stream_port: int | None, datagram_port: int | None):
    """Open socket listeners that pump straight into the hub."""
    listeners = []
    for kind, port in (("stream", stream_port), ("datagram", datagram_port)):
        if port is None:
            continue
        listener = StreamListener(port) if kind == "stream" else DatagramListener(port)
        listeners.append(listener)

        def pump(source=listener):
            for frame, arrival_us in source.packets():
                hub.feed(frame, arrival_us)

        threading.Thread(target=pump, daemon=True).start()
    return listeners
