"""Live telemetry frames over a local WebSocket, plus recording and replay.

Every frame is a UTF-8 JSON text message::

    {
      "type": "frame",
      "simulation_time": 12.0,
      "nodes": [{"id": 0, "role": "ground_station", "position": [0.0, 0.0, 0.0], "color": "#2ca02c"}, ...],
      "tracked_variables": {"0": {"collected": 3}, "6": {"data_count": 1}, ...}
    }

``tracked_variables`` keys are node ids as strings (JSON object keys).  The
simulation hands each frame to :meth:`TelemetryServer.publish`, which never
blocks: each client has a bounded queue and the oldest frame is discarded
when a slow client falls behind.
"""

from __future__ import annotations

import json
import logging
import math
import queue
import threading
import time
from pathlib import Path
from typing import Any, Iterable, Iterator

from ..mobility import position_at
from ..simulation import Simulation

logger = logging.getLogger(__name__)

FRAME_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["type", "simulation_time", "nodes", "tracked_variables"],
    "properties": {
        "type": {"const": "frame"},
        "simulation_time": {"type": "number", "minimum": 0},
        "nodes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "role", "position", "color"],
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "role": {"type": "string"},
                    "position": {
                        "type": "array",
                        "items": {"type": "number"},
                        "minItems": 3,
                        "maxItems": 3,
                    },
                    "color": {"type": "string"},
                },
            },
        },
        "tracked_variables": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "additionalProperties": {"type": ["number", "string"]},
            },
        },
    },
}


class PortInUse(OSError):
    pass


def build_frame(sim: Simulation) -> dict[str, Any]:
    now = sim.engine.now()
    states = sim.mobility.states
    nodes = []
    tracked = {}
    for nid, node in sim.nodes.items():
        rec = node.record
        nodes.append({
            "id": nid,
            "role": rec.role,
            "position": list(position_at(states[nid], now)),
            "color": rec.color,
        })
        if rec.tracked:
            tracked[str(nid)] = dict(rec.tracked)
    return {"type": "frame", "simulation_time": now, "nodes": nodes, "tracked_variables": tracked}


def frame_problems(frame: Any) -> list[str]:
    """Schema check without a validator dependency; empty list means valid."""
    out = []
    if not isinstance(frame, dict):
        return ["frame is not an object"]
    for key in FRAME_SCHEMA["required"]:
        if key not in frame:
            out.append(f"missing {key}")
    if out:
        return out
    if frame["type"] != "frame":
        out.append("type must be 'frame'")
    t = frame["simulation_time"]
    if not (isinstance(t, (int, float)) and math.isfinite(t) and t >= 0):
        out.append("simulation_time must be a finite number >= 0")
    if not isinstance(frame["nodes"], list):
        out.append("nodes must be an array")
    else:
        for i, node in enumerate(frame["nodes"]):
            if not isinstance(node, dict) or any(k not in node for k in ("id", "role", "position", "color")):
                out.append(f"nodes[{i}] is missing fields")
                continue
            pos = node["position"]
            if not (isinstance(pos, list) and len(pos) == 3
                    and all(isinstance(c, (int, float)) and math.isfinite(c) for c in pos)):
                out.append(f"nodes[{i}].position must be three finite numbers")
    tv = frame["tracked_variables"]
    if not isinstance(tv, dict) or not all(isinstance(v, dict) for v in tv.values()):
        out.append("tracked_variables must map node ids to objects")
    return out


class TelemetryServer:
    """WebSocket endpoint that fans frames out to every connected client."""

    def __init__(self, host: str = "127.0.0.1", port: int = 8765, client_buffer: int = 4096) -> None:
        self.host = host
        self.port = port
        self.client_buffer = client_buffer
        self._clients: set[queue.Queue] = set()
        self._lock = threading.Lock()
        self._server = None
        self._thread: threading.Thread | None = None
        self.published = 0

    def start(self) -> TelemetryServer:
        from websockets.sync.server import serve

        try:
            self._server = serve(self._handle, self.host, self.port)
        except OSError as exc:
            raise PortInUse(exc.errno, f"cannot listen on {self.host}:{self.port}: {exc.strerror}")
        self.port = self._server.socket.getsockname()[1]
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def __enter__(self) -> TelemetryServer:
        return self.start()

    def __exit__(self, *exc) -> None:
        self.close()

    @property
    def client_count(self) -> int:
        with self._lock:
            return len(self._clients)

    def wait_for_clients(self, n: int = 1, timeout: float = 5.0) -> bool:
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            if self.client_count >= n:
                return True
            time.sleep(0.005)
        return False

    def _handle(self, ws) -> None:
        q: queue.Queue = queue.Queue(self.client_buffer)
        with self._lock:
            self._clients.add(q)
        try:
            while True:
                msg = q.get()
                if msg is None:
                    break
                ws.send(msg)
        except Exception as exc:  # client went away
            logger.debug("telemetry client dropped: %s", exc)
        finally:
            with self._lock:
                self._clients.discard(q)

    def publish(self, frame: dict[str, Any] | str) -> None:
        with self._lock:
            clients = list(self._clients)
        if not clients:
            return
        text = frame if isinstance(frame, str) else json.dumps(frame)
        self.published += 1
        for q in clients:
            try:
                q.put_nowait(text)
            except queue.Full:
                try:
                    q.get_nowait()
                except queue.Empty:
                    pass
                try:
                    q.put_nowait(text)
                except queue.Full:
                    pass

    def drain(self, timeout: float = 5.0) -> None:
        """Wait until queued frames have been handed to the clients' sockets."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            with self._lock:
                if all(q.empty() for q in self._clients):
                    return
            time.sleep(0.005)

    def close(self) -> None:
        with self._lock:
            clients = list(self._clients)
        for q in clients:
            try:
                q.put_nowait(None)
            except queue.Full:
                pass
        if self._server is not None:
            self._server.shutdown()
            self._server = None
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None


class FrameRecorder:
    """Appends frames to a JSON-lines file for later replay."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", encoding="utf-8")

    def __call__(self, frame: dict[str, Any]) -> None:
        self._fh.write(json.dumps(frame) + "\n")

    def close(self) -> None:
        self._fh.close()


def read_frames(path: str | Path) -> Iterator[dict[str, Any]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            frame = json.loads(line)
            problems = frame_problems(frame)
            if problems:
                raise ValueError(f"{path}:{lineno}: {'; '.join(problems)}")
            yield frame


def replay(frames: Iterable[dict[str, Any]], server: TelemetryServer, rate: float | None = None) -> int:
    """Re-publish recorded frames.

    ``rate`` is simulated seconds per wall second; None publishes as fast as possible.
    """
    start_wall = time.perf_counter()
    start_sim = None
    sent = 0
    for frame in frames:
        t = frame["simulation_time"]
        if start_sim is None:
            start_sim = t
        if rate:
            delay = start_wall + (t - start_sim) / rate - time.perf_counter()
            if delay > 0:
                time.sleep(delay)
        server.publish(frame)
        sent += 1
    return sent
