"""Streaming solve service: newline-delimited JSON frames over a socket.

The service owns a Scene and advances it on a fixed cadence (default
120 Hz). Client frames arriving between steps are queued and applied
atomically at the start of the next step, so a state broadcast never
reflects a half-applied update. After every step the current state
frame goes to all connected clients.

Client frames:
    {"type": "set_target", "effector": i, "position": [x,y,z],
     "orientation": [s,x,y,z], "pos_weight": a, "rot_weight": b}
    {"type": "set_config", <SolverConfig field>: value, ...}
    {"type": "get_rig"}
    {"type": "stop"}

Server frames:
    {"type": "rig", ...}            full rig description, sent on connect
    {"type": "state", "tick": n, "pose": [...], "effectors": [...],
     "iters": k, "reason": "..."}
    {"type": "error", "code": "bad_request", "detail": "..."}

Malformed input of any kind answers with an error frame on that
connection and never takes the service down. The default transport is
WebSocket; transport="tcp" serves the same frames newline-delimited
over a raw socket instead.
"""

from __future__ import annotations

import asyncio
import json
from dataclasses import asdict

from .rig import end_effector_poses, rig_to_dict
from .session import Scene, make_config, save_scene, set_target, step

DEFAULT_RATE = 120.0
TRACE_KEEP = 10_000

_COMMAND_TYPES = ("set_target", "set_config", "stop")


class _WsClient:
    def __init__(self, connection):
        self._connection = connection

    async def send(self, text: str) -> None:
        await self._connection.send(text)

    def close(self) -> None:
        pass


class _TcpClient:
    def __init__(self, writer: asyncio.StreamWriter):
        self._writer = writer

    async def send(self, text: str) -> None:
        self._writer.write(text.encode("utf-8") + b"\n")
        await self._writer.drain()

    def close(self) -> None:
        self._writer.close()


def error_frame(detail: str) -> dict:
    return {"type": "error", "code": "bad_request", "detail": detail}


class Service:
    """One scene, one stepping loop, any number of stream clients."""

    def __init__(self, scene: Scene, host: str = "127.0.0.1", port: int = 0,
                 rate: float = DEFAULT_RATE, transport: str = "websocket",
                 save_path=None):
        if rate <= 0.0:
            raise ValueError("rate must be positive")
        if transport not in ("websocket", "tcp"):
            raise ValueError(f"unknown transport {transport!r}")
        self.scene = scene
        self.host = host
        self.port = port
        self.rate = rate
        self.transport = transport
        self.save_path = save_path
        self.stopped = asyncio.Event()
        self._stopping = False
        self._pending: list[tuple[dict, object]] = []
        self._clients: set = set()
        self._server = None
        self._loop_task = None

    async def start(self) -> None:
        if self.transport == "websocket":
            from websockets.asyncio.server import serve as ws_serve

            self._server = await ws_serve(self._ws_handler, self.host, self.port)
        else:
            self._server = await asyncio.start_server(
                self._tcp_handler, self.host, self.port)
        self.port = self._server.sockets[0].getsockname()[1]
        self._loop_task = asyncio.create_task(self._run_loop())

    def request_stop(self) -> None:
        self._stopping = True

    async def wait_stopped(self) -> None:
        await self.stopped.wait()

    async def _ws_handler(self, connection) -> None:
        client = _WsClient(connection)
        await self._attach(client)
        try:
            async for message in connection:
                if isinstance(message, bytes):
                    message = message.decode("utf-8", errors="replace")
                await self._handle_text(message, client)
        except Exception:
            pass
        finally:
            self._clients.discard(client)

    async def _tcp_handler(self, reader: asyncio.StreamReader,
                           writer: asyncio.StreamWriter) -> None:
        client = _TcpClient(writer)
        await self._attach(client)
        try:
            while True:
                line = await reader.readline()
                if not line:
                    break
                text = line.decode("utf-8", errors="replace").strip()
                if text:
                    await self._handle_text(text, client)
        except Exception:
            pass
        finally:
            self._clients.discard(client)
            writer.close()

    async def _attach(self, client) -> None:
        self._clients.add(client)
        try:
            await client.send(json.dumps(self.rig_frame()))
        except Exception:
            self._clients.discard(client)

    async def _handle_text(self, text: str, client) -> None:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            await self._safe_send(client, error_frame(f"invalid JSON: {exc}"))
            return
        if not isinstance(data, dict) or not isinstance(data.get("type"), str):
            await self._safe_send(client, error_frame("frame must be an object "
                                                      "with a string 'type'"))
            return
        kind = data["type"]
        if kind == "get_rig":
            await self._safe_send(client, self.rig_frame())
        elif kind in _COMMAND_TYPES:
            self._pending.append((data, client))
        else:
            await self._safe_send(client, error_frame(f"unknown frame type {kind!r}"))

    async def _safe_send(self, client, frame: dict) -> None:
        try:
            await client.send(json.dumps(frame))
        except Exception:
            self._clients.discard(client)

    async def _apply_pending(self) -> None:
        pending, self._pending = self._pending, []
        for data, client in pending:
            try:
                self._apply(data)
            except (ValueError, TypeError) as exc:
                await self._safe_send(client, error_frame(str(exc)))

    def _apply(self, data: dict) -> None:
        kind = data["type"]
        if kind == "stop":
            self._stopping = True
        elif kind == "set_target":
            if "effector" not in data or "position" not in data:
                raise ValueError("set_target needs 'effector' and 'position'")
            set_target(
                self.scene,
                int(data["effector"]),
                tuple(float(v) for v in data["position"]),
                orientation=tuple(float(v) for v in
                                  data.get("orientation", (1.0, 0.0, 0.0, 0.0))),
                pos_weight=float(data.get("pos_weight", 1.0)),
                rot_weight=float(data.get("rot_weight", 1.0)))
        elif kind == "set_config":
            overrides = {k: v for k, v in data.items() if k != "type"}
            merged = {**asdict(self.scene.config), **overrides}
            self.scene.config = make_config(merged)

    def rig_frame(self) -> dict:
        frame = rig_to_dict(self.scene.rig)
        frame["type"] = "rig"
        frame["dof"] = self.scene.rig.dof
        return frame

    def state_frame(self, record) -> dict:
        poses = end_effector_poses(self.scene.rig, self.scene.pose)
        effectors = []
        for i, pose in enumerate(poses):
            goal = self.scene.goals.get(i)
            effectors.append({
                "current": {"position": [float(v) for v in pose.position],
                            "orientation": [float(v) for v in pose.orientation]},
                "target": None if goal is None else {
                    "position": list(goal.position),
                    "orientation": list(goal.orientation)},
                "error": record.errors[i],
            })
        return {
            "type": "state",
            "tick": record.tick,
            "pose": [float(v) for v in self.scene.pose],
            "effectors": effectors,
            "iters": record.iterations,
            "reason": record.reason,
        }

    async def _broadcast(self, frame: dict) -> None:
        if not self._clients:
            return
        text = json.dumps(frame)
        dead = []
        for client in tuple(self._clients):
            try:
                await client.send(text)
            except Exception:
                dead.append(client)
        for client in dead:
            self._clients.discard(client)

    async def _run_loop(self) -> None:
        loop = asyncio.get_running_loop()
        period = 1.0 / self.rate
        deadline = loop.time()
        try:
            while True:
                await self._apply_pending()
                if self._stopping:
                    break
                _, record = step(self.scene)
                if len(self.scene.trace) > TRACE_KEEP:
                    del self.scene.trace[:len(self.scene.trace) - TRACE_KEEP]
                await self._broadcast(self.state_frame(record))
                deadline += period
                delay = deadline - loop.time()
                if delay > 0.0:
                    await asyncio.sleep(delay)
                else:
                    # Behind schedule: drop the debt but still yield so
                    # connection handlers are never starved.
                    deadline = loop.time()
                    await asyncio.sleep(0)
        finally:
            if self.save_path is not None:
                save_scene(self.save_path, self.scene)
            await self._close_all()
            self.stopped.set()

    async def _close_all(self) -> None:
        if self.transport == "websocket":
            self._server.close(close_connections=True)
        else:
            for client in tuple(self._clients):
                client.close()
            self._server.close()
        self._clients.clear()
        try:
            await self._server.wait_closed()
        except asyncio.CancelledError:
            pass


async def serve_scene(scene: Scene, host: str = "127.0.0.1", port: int = 8765,
                      rate: float = DEFAULT_RATE, transport: str = "websocket",
                      save_path=None, ready=None) -> None:
    """Run a Service until a stop frame arrives (or cancellation)."""
    service = Service(scene, host=host, port=port, rate=rate,
                      transport=transport, save_path=save_path)
    await service.start()
    if ready is not None:
        ready(service)
    try:
        await service.wait_stopped()
    except asyncio.CancelledError:
        service.request_stop()
        await service.wait_stopped()
        raise
