"""Interactive mode: a stepped session served over a wire protocol.

The step loop owns the world and runs at scaled real time (wall pacing is
dt / time-scale; scale 0 pauses the clock while snapshots keep flowing).
Operator commands arrive as newline-delimited JSON envelopes
``{"type": ..., "seq": ..., "payload": {...}}`` and are applied at step
boundaries; every command is acknowledged (or answered with an error) by
seq. Each step broadcasts a snapshot message to all subscribers through
bounded drop-oldest queues so a slow consumer can never stall the loop.

One listening socket serves two transports: plain NDJSON over TCP, and
RFC 6455 WebSocket (detected by an HTTP upgrade request) carrying the same
JSON messages in text frames, which is what the browser console speaks.
See docs/protocol.md for the message-by-message reference.
"""

import asyncio
import base64
import hashlib
import json
import struct
import threading

from .behaviors import CommandBehavior, CommandState
from .factory import _build_behavior, create_world
from .formats import FormatError, PlannedSpec, ScenarioBundle, parse_scenario_object
from .harness import _Replanner, make_validators
from .reasoner import PlannerConfig
from .world import SimObject, SimulationError

INTERACTIVE_DT = 0.02
SUBSCRIBER_QUEUE_LIMIT = 16

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


class ProtocolError(Exception):
    pass


class SimSession:
    """Protocol-agnostic session state: world, validators, queued commands.

    Commands are validated on receipt and applied at the next step
    boundary. ``step_once`` advances the world (unless paused) and returns
    the snapshot message to broadcast.
    """

    def __init__(self, bundle: ScenarioBundle, dt=INTERACTIVE_DT, reasoner=None):
        self.bundle = bundle
        self.dt = dt
        self.world = create_world(bundle)
        self._plan_cell = [None]
        self.validators = make_validators(
            bundle.scenario.validators, bundle, lambda: self._plan_cell[0]
        )
        self.replanner = None
        if reasoner is not None:
            self.replanner = _Replanner(
                self.world, bundle, reasoner, self._plan_cell, getattr(reasoner, "config", None) or PlannerConfig()
            )
        self.time_scale = 1.0
        self._scale_before_pause = 1.0
        self.steered_id = self._default_steered()
        self.step_index = 0
        self.snapshot_seq = 0
        self._pending: list[dict] = []
        self._replan_every = 5  # 10 Hz at the interactive dt
        # Called with the session right before each boundary: lets scripted
        # drivers key commands to step indices, independent of wall pacing.
        self.boundary_hooks: list = []

    def _default_steered(self):
        for obj in self.world.objects:
            if isinstance(obj.behavior, CommandBehavior):
                return obj.id
        return None

    def scene_message(self) -> dict:
        """Static scene geometry, sent once to each new subscriber."""
        lanes = []
        checkpoints = []
        if self.bundle.network is not None:
            for lane in self.bundle.network.lanes:
                lanes.append(
                    {
                        "id": lane.id,
                        "width": lane.width,
                        "points": [[wp.x, wp.y] for wp in lane.waypoints],
                    }
                )
            for cp in self.bundle.network.checkpoints:
                wp = self.bundle.network.checkpoint_waypoint(cp.id)
                checkpoints.append({"id": cp.id, "x": wp.x, "y": wp.y})
        return {
            "type": "scene",
            "seq": 0,
            "payload": {
                "scenario": self.bundle.scenario.id,
                "dt": self.dt,
                "lanes": lanes,
                "checkpoints": checkpoints,
            },
        }

    # -- command handling ---------------------------------------------------

    def handle_message(self, msg: dict) -> dict:
        """Validate one inbound envelope; queue it; return the ack/error."""
        if not isinstance(msg, dict) or not isinstance(msg.get("type"), str):
            return self._error(msg, "malformed envelope: need a 'type' string")
        seq = msg.get("seq", 0)
        mtype = msg["type"]
        payload = msg.get("payload") or {}
        try:
            if mtype == "subscribe":
                pass  # transport-level; nothing to queue
            elif mtype == "steer":
                self._check_steerable(payload)
            elif mtype == "pause" or mtype == "resume":
                pass
            elif mtype == "set_time_scale":
                factor = payload.get("factor")
                if not isinstance(factor, (int, float)) or factor < 0:
                    raise ProtocolError("time scale must be a number >= 0")
            elif mtype == "spawn":
                spec = parse_scenario_object(payload.get("object"), "spawn.object")
                if any(obj.id == spec.id for obj in self.world.objects):
                    raise ProtocolError(f"duplicate object id {spec.id!r}")
            elif mtype == "attach_steering":
                object_id = payload.get("object_id")
                obj = self.world.object(object_id)
                if obj.is_static:
                    raise ProtocolError(f"cannot steer static object {object_id!r}")
            else:
                raise ProtocolError(f"unknown message type {mtype!r}")
        except (ProtocolError, FormatError, SimulationError) as exc:
            return self._error(msg, str(exc))
        if mtype != "subscribe":
            self._pending.append(msg)
        return {"type": "ack", "seq": seq, "payload": {"status": "queued"}}

    def _check_steerable(self, payload):
        target = payload.get("object_id", self.steered_id)
        if target is None:
            raise ProtocolError("no steered object: send attach_steering first")
        obj = self.world.object(target)
        if not isinstance(obj.behavior, CommandBehavior):
            raise ProtocolError(f"object {target!r} is not under command steering")

    @staticmethod
    def _error(msg, text):
        seq = msg.get("seq", 0) if isinstance(msg, dict) else 0
        return {"type": "error", "seq": seq, "payload": {"message": text}}

    def _apply(self, msg: dict) -> None:
        mtype = msg["type"]
        payload = msg.get("payload") or {}
        if mtype == "steer":
            target = payload.get("object_id", self.steered_id)
            behavior = self.world.object(target).behavior
            behavior.enqueue_command(
                CommandState(
                    accel=float(payload.get("accel", 0.0)),
                    yaw_rate=float(payload.get("yaw_rate", 0.0)),
                )
            )
        elif mtype == "pause":
            if self.time_scale > 0:
                self._scale_before_pause = self.time_scale
            self.time_scale = 0.0
        elif mtype == "resume":
            if self.time_scale == 0:
                self.time_scale = self._scale_before_pause or 1.0
        elif mtype == "set_time_scale":
            factor = float(payload["factor"])
            if factor > 0:
                self._scale_before_pause = factor
            self.time_scale = factor
        elif mtype == "spawn":
            spec = parse_scenario_object(payload.get("object"), "spawn.object")
            behavior = None
            if spec.behavior is not None:
                behavior = _build_behavior(spec.id, spec.behavior, self.bundle, self.world)
            self.world.add_object(
                SimObject(spec.id, spec.role, spec.shape, spec.pose, spec.speed, behavior)
            )
        elif mtype == "attach_steering":
            object_id = payload["object_id"]
            obj = self.world.object(object_id)
            if not isinstance(obj.behavior, CommandBehavior):
                self.world.set_behavior(object_id, CommandBehavior())
            self.steered_id = object_id

    def apply_pending(self) -> None:
        pending, self._pending = self._pending, []
        for msg in pending:
            try:
                self._apply(msg)
            except (FormatError, SimulationError, ProtocolError, KeyError, ValueError):
                pass  # validated at receipt; a race (e.g. duplicate spawn) is dropped

    # -- stepping -----------------------------------------------------------

    def step_once(self) -> dict:
        """Apply queued commands, advance unless paused, return the snapshot."""
        for hook in self.boundary_hooks:
            hook(self)
        self.apply_pending()
        if self.time_scale > 0:
            if (
                self.replanner is not None
                and self.step_index % self._replan_every == 0
            ):
                self.replanner.replan()
            report = self.world.step(self.dt)
            snapshot = self.world.snapshot()
            for validator in self.validators:
                validator.on_step(snapshot, report)
            self.step_index += 1
        else:
            snapshot = self.world.snapshot()
        self.snapshot_seq += 1
        return self._snapshot_message(snapshot)

    def _snapshot_message(self, snapshot) -> dict:
        objects = []
        for state in snapshot.objects:
            shape = {"kind": state.shape.kind}
            if state.shape.kind == "circle":
                shape["radius"] = state.shape.radius
            else:
                shape["length"] = state.shape.length
                shape["width"] = state.shape.width
            objects.append(
                {
                    "id": state.id,
                    "role": state.role,
                    "x": round(state.pose.x, 6),
                    "y": round(state.pose.y, 6),
                    "heading": round(state.pose.heading, 6),
                    "speed": round(state.speed, 6),
                    "shape": shape,
                }
            )
        plan = self._plan_cell[0]
        trajectory = None
        if plan is not None:
            trajectory = {
                "gates": [
                    {
                        "left": [round(g.left[0], 6), round(g.left[1], 6)],
                        "right": [round(g.right[0], 6), round(g.right[1], 6)],
                        "target_speed": None if g.target_speed is None else round(g.target_speed, 6),
                    }
                    for g in plan.gates
                ]
            }
        return {
            "type": "snapshot",
            "seq": self.snapshot_seq,
            "payload": {
                "clock": round(snapshot.clock, 6),
                "time_scale": self.time_scale,
                "steered": self.steered_id,
                "objects": objects,
                "trajectory": trajectory,
                "validators": [
                    {"name": v.name, "passed": v.has_passed(), "violations": len(v.violations)}
                    for v in self.validators
                ],
            },
        }


# ---------------------------------------------------------------------------
# WebSocket framing (server side, text frames only)

def _ws_accept(key: str) -> str:
    digest = hashlib.sha1((key + _WS_GUID).encode()).digest()
    return base64.b64encode(digest).decode()


def ws_encode_text(data: bytes) -> bytes:
    length = len(data)
    if length < 126:
        header = struct.pack("!BB", 0x81, length)
    elif length < 1 << 16:
        header = struct.pack("!BBH", 0x81, 126, length)
    else:
        header = struct.pack("!BBQ", 0x81, 127, length)
    return header + data


async def _ws_read_frame(reader):
    head = await reader.readexactly(2)
    opcode = head[0] & 0x0F
    masked = head[1] & 0x80
    length = head[1] & 0x7F
    if length == 126:
        length = struct.unpack("!H", await reader.readexactly(2))[0]
    elif length == 127:
        length = struct.unpack("!Q", await reader.readexactly(8))[0]
    mask = await reader.readexactly(4) if masked else b"\x00\x00\x00\x00"
    body = await reader.readexactly(length)
    if masked:
        body = bytes(b ^ mask[i % 4] for i, b in enumerate(body))
    return opcode, body


class _Subscriber:
    def __init__(self, writer, websocket: bool):
        self.writer = writer
        self.websocket = websocket
        self.queue: asyncio.Queue = asyncio.Queue(maxsize=SUBSCRIBER_QUEUE_LIMIT)

    def offer(self, data: bytes) -> None:
        # Drop-oldest: the step loop never waits on a slow consumer.
        if self.queue.full():
            try:
                self.queue.get_nowait()
            except asyncio.QueueEmpty:
                pass
        self.queue.put_nowait(data)


class SimServer:
    """Serves one SimSession over TCP NDJSON and WebSocket."""

    def __init__(self, session: SimSession, host="127.0.0.1", port=0):
        self.session = session
        self.host = host
        self.port = port
        self.bound_port = None
        self._subscribers: set[_Subscriber] = set()
        self._stop = None

    # -- plumbing -----------------------------------------------------------

    def _frame(self, message: dict, websocket: bool) -> bytes:
        data = json.dumps(message, separators=(",", ":")).encode()
        return ws_encode_text(data) if websocket else data + b"\n"

    def _broadcast(self, message: dict) -> None:
        if not self._subscribers:
            return
        ndjson = None
        wsframe = None
        for sub in self._subscribers:
            if sub.websocket:
                if wsframe is None:
                    wsframe = self._frame(message, True)
                sub.offer(wsframe)
            else:
                if ndjson is None:
                    ndjson = self._frame(message, False)
                sub.offer(ndjson)

    async def _sender(self, sub: _Subscriber):
        try:
            while True:
                data = await sub.queue.get()
                sub.writer.write(data)
                await sub.writer.drain()
        except (ConnectionError, asyncio.CancelledError):
            pass

    async def _handle_connection(self, reader, writer):
        sub = None
        sender = None
        try:
            first = await reader.readexactly(4)
        except (asyncio.IncompleteReadError, ConnectionError):
            writer.close()
            return
        try:
            if first == b"GET ":
                ok = await self._ws_handshake(reader, writer, first)
                if not ok:
                    writer.close()
                    return
                websocket = True
            else:
                websocket = False
            sub = _Subscriber(writer, websocket)
            sender = asyncio.ensure_future(self._sender(sub))

            async def messages():
                if websocket:
                    while True:
                        opcode, body = await _ws_read_frame(reader)
                        if opcode == 8:  # close
                            return
                        if opcode == 9:  # ping -> pong
                            writer.write(struct.pack("!BB", 0x8A, len(body)) + body)
                            continue
                        if opcode in (1, 2):
                            yield body
                else:
                    buffered = first if not websocket else b""
                    while True:
                        line = await reader.readline()
                        if not line:
                            return
                        line = buffered + line
                        buffered = b""
                        if line.strip():
                            yield line

            async for raw in messages():
                msg = None
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError as exc:
                    reply = SimSession._error(None, f"not valid JSON: {exc.msg}")
                else:
                    reply = self.session.handle_message(msg)
                sub.offer(self._frame(reply, websocket))
                if (
                    reply["type"] == "ack"
                    and isinstance(msg, dict)
                    and msg.get("type") == "subscribe"
                    and sub not in self._subscribers
                ):
                    sub.offer(self._frame(self.session.scene_message(), websocket))
                    self._subscribers.add(sub)
        except (asyncio.IncompleteReadError, ConnectionError, asyncio.CancelledError):
            pass
        finally:
            self._subscribers.discard(sub)
            if sender is not None:
                sender.cancel()
            try:
                writer.close()
            except Exception:
                pass

    async def _ws_handshake(self, reader, writer, first) -> bool:
        raw = first
        while b"\r\n\r\n" not in raw:
            chunk = await reader.read(1024)
            if not chunk:
                return False
            raw += chunk
        headers = {}
        for line in raw.split(b"\r\n")[1:]:
            if b":" in line:
                name, _, value = line.partition(b":")
                headers[name.strip().lower()] = value.strip()
        key = headers.get(b"sec-websocket-key")
        if key is None:
            writer.write(b"HTTP/1.1 400 Bad Request\r\n\r\n")
            await writer.drain()
            return False
        accept = _ws_accept(key.decode())
        writer.write(
            b"HTTP/1.1 101 Switching Protocols\r\n"
            b"Upgrade: websocket\r\nConnection: Upgrade\r\n"
            b"Sec-WebSocket-Accept: " + accept.encode() + b"\r\n\r\n"
        )
        await writer.drain()
        return True

    # -- step loop ----------------------------------------------------------

    async def _run_loop(self):
        loop = asyncio.get_running_loop()
        next_tick = loop.time()
        while not self._stop.is_set():
            message = self.session.step_once()
            self._broadcast(message)
            scale = self.session.time_scale
            wait = self.session.dt / scale if scale > 0 else self.session.dt
            next_tick += wait
            delay = next_tick - loop.time()
            if delay > 0:
                try:
                    await asyncio.wait_for(self._stop.wait(), timeout=delay)
                except asyncio.TimeoutError:
                    pass
            else:
                next_tick = loop.time()  # fell behind; resynchronize

    async def serve(self):
        """Run until stop() is called (or forever)."""
        self._stop = asyncio.Event()
        self._loop = asyncio.get_running_loop()
        server = await asyncio.start_server(self._handle_connection, self.host, self.port)
        self.bound_port = server.sockets[0].getsockname()[1]
        loop_task = asyncio.ensure_future(self._run_loop())
        try:
            await self._stop.wait()
        finally:
            loop_task.cancel()
            server.close()
            await server.wait_closed()

    def stop(self):
        """Signal shutdown; safe to call from any thread."""
        if self._stop is None:
            return
        loop = getattr(self, "_loop", None)
        if loop is not None and loop.is_running():
            loop.call_soon_threadsafe(self._stop.set)
        else:
            self._stop.set()


def start_in_thread(session: SimSession, host="127.0.0.1", port=0):
    """Run a server on a daemon thread; returns (server, thread).

    The caller polls ``server.bound_port`` for readiness. Used by tests and
    tools that need a live endpoint without owning an event loop.
    """
    server = SimServer(session, host=host, port=port)
    ready = threading.Event()

    def runner():
        async def main():
            task = asyncio.ensure_future(server.serve())
            while server.bound_port is None and not task.done():
                await asyncio.sleep(0.001)
            ready.set()
            await task

        asyncio.run(main())

    thread = threading.Thread(target=runner, daemon=True)
    thread.start()
    ready.wait(timeout=5.0)
    return server, thread
