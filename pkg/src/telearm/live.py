"""Wall-clock mode: the same components on real sockets.

The gateway listens on two TCP endpoints (operator side, arm side) speaking
the 32-byte framing, measures its own forwarding overhead with a monotonic
clock, and exposes a ``/telemetry`` websocket carrying line-delimited JSON
events ``{kind, t_ns, payload}`` for the cockpit.  Numbers from this mode are
hardware-dependent: they are reported, never asserted bit-exactly.

Run ``python -m telearm.live`` (or demos/live_stack.py) to serve a local
stack for the cockpit.
"""

from __future__ import annotations

import asyncio
import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import protocol, stylus
from .arm import ArmSim
from .gateway import GuardrailPolicy, LinkMetrics, RateTracker, validate_command
from .protocol import Deframer, FeedbackStatus, Frame, FrameType

try:  # the cockpit websocket needs the "live" extra; loopback mode does not
    from fastapi import FastAPI, WebSocket, WebSocketDisconnect
except ImportError:
    FastAPI = WebSocket = WebSocketDisconnect = None


def _now_ns() -> int:
    return time.monotonic_ns()


class TelemetryBus:
    """Fan-out of telemetry events to any number of subscriber queues."""

    def __init__(self) -> None:
        self._subscribers: set[asyncio.Queue] = set()

    def subscribe(self) -> asyncio.Queue:
        q: asyncio.Queue = asyncio.Queue(maxsize=1024)
        self._subscribers.add(q)
        return q

    def unsubscribe(self, q: asyncio.Queue) -> None:
        self._subscribers.discard(q)

    def publish(self, kind: str, t_ns: int, payload: dict) -> None:
        event = {"kind": kind, "t_ns": t_ns, "payload": payload}
        for q in list(self._subscribers):
            try:
                q.put_nowait(event)
            except asyncio.QueueFull:
                pass  # slow consumer: drop rather than stall the data path


class LiveGateway:
    """TCP relay with guardrails and overhead instrumentation."""

    def __init__(self, policy: GuardrailPolicy | None = None, host: str = "127.0.0.1"):
        self.policy = policy if policy is not None else GuardrailPolicy(
            np.array([-900.0, -900.0, -100.0]), np.array([900.0, 900.0, 1000.0]), 1000.0
        )
        self.host = host
        self.metrics = LinkMetrics()
        self.bus = TelemetryBus()
        self.operator_port: int | None = None
        self.arm_port: int | None = None
        self._operator_writer: asyncio.StreamWriter | None = None
        self._arm_writer: asyncio.StreamWriter | None = None
        self._rate = RateTracker(self.policy.max_command_rate_hz)
        self._feedback_seq = 0
        self._servers: list[asyncio.AbstractServer] = []

    async def start(self) -> None:
        op_server = await asyncio.start_server(self._serve_operator, self.host, 0)
        arm_server = await asyncio.start_server(self._serve_arm, self.host, 0)
        self._servers = [op_server, arm_server]
        self.operator_port = op_server.sockets[0].getsockname()[1]
        self.arm_port = arm_server.sockets[0].getsockname()[1]

    async def stop(self) -> None:
        for server in self._servers:
            server.close()
            await server.wait_closed()

    def _reject(self, frame: Frame, reason) -> bytes:
        self.metrics.record_reject(reason)
        self._feedback_seq = protocol.next_seq(self._feedback_seq)
        fb = protocol.feedback_frame(
            self._feedback_seq, _now_ns(), frame.seq, FeedbackStatus.REJECTED, int(reason)
        )
        return protocol.encode_frame(fb)

    async def _serve_operator(self, reader, writer) -> None:
        self._operator_writer = writer
        self.bus.publish("conn_status", _now_ns(), {"endpoint": "operator", "connected": True})
        deframer = Deframer()
        try:
            while True:
                data = await reader.read(4096)
                if not data:
                    break
                for frame in deframer.feed(data):
                    await self._from_operator(frame, writer)
        finally:
            self._operator_writer = None
            self.bus.publish(
                "conn_status", _now_ns(), {"endpoint": "operator", "connected": False}
            )

    async def _from_operator(self, frame: Frame, op_writer) -> None:
        ingress = _now_ns()
        reason = validate_command(frame, self.policy, ingress, self._rate)
        if reason is not None:
            op_writer.write(self._reject(frame, reason))
            await op_writer.drain()
            self.bus.publish(
                "feedback",
                ingress,
                {"ref_seq": frame.seq, "status": "REJECTED", "detail": int(reason), "flags": 0},
            )
            return
        if self._arm_writer is None:
            from .gateway import RejectReason

            op_writer.write(self._reject(frame, RejectReason.NO_ROUTE))
            await op_writer.drain()
            return
        self._arm_writer.write(protocol.encode_frame(frame))
        await self._arm_writer.drain()
        egress = _now_ns()
        self.metrics.record_overhead(ingress, egress - ingress)
        self.bus.publish(
            "metrics", egress, {"metric": "forward_overhead", "value_ns": egress - ingress}
        )
        if frame.frame_type is FrameType.MOVE:
            x, y, z, roll, pitch, yaw = frame.payload.pose()
            self.bus.publish(
                "stylus",
                frame.timestamp_ns,
                {
                    "x_mm": x, "y_mm": y, "z_mm": z,
                    "roll_deg": roll, "pitch_deg": pitch, "yaw_deg": yaw, "button": 1,
                },
            )

    async def _serve_arm(self, reader, writer) -> None:
        self._arm_writer = writer
        self.bus.publish("conn_status", _now_ns(), {"endpoint": "arm", "connected": True})
        deframer = Deframer()
        try:
            while True:
                data = await reader.read(4096)
                if not data:
                    break
                for frame in deframer.feed(data):
                    ingress = _now_ns()
                    if self._operator_writer is not None:
                        self._operator_writer.write(protocol.encode_frame(frame))
                        await self._operator_writer.drain()
                    self.metrics.record_overhead(ingress, _now_ns() - ingress)
                    if frame.frame_type is FrameType.FEEDBACK:
                        self.bus.publish(
                            "feedback",
                            ingress,
                            {
                                "ref_seq": frame.payload.ref_seq,
                                "status": frame.payload.status.name,
                                "detail": frame.payload.detail,
                                "flags": frame.flags,
                            },
                        )
        finally:
            self._arm_writer = None
            self.bus.publish("conn_status", _now_ns(), {"endpoint": "arm", "connected": False})


class LiveArm:
    """Arm simulator speaking the framing over TCP, ticking on the wall clock."""

    def __init__(self, gateway: LiveGateway, sim: ArmSim | None = None):
        self.gateway = gateway
        self.sim = sim if sim is not None else ArmSim()
        self._writer: asyncio.StreamWriter | None = None
        self._stop = asyncio.Event()

    async def run(self) -> None:
        reader, writer = await asyncio.open_connection(
            self.gateway.host, self.gateway.arm_port
        )
        self._writer = writer
        tick_task = asyncio.create_task(self._tick_loop())
        deframer = Deframer()
        try:
            while not self._stop.is_set():
                data = await reader.read(4096)
                if not data:
                    break
                for frame in deframer.feed(data):
                    await self._ingest(frame, writer)
        finally:
            self._stop.set()
            await tick_task
            writer.close()

    def stop(self) -> None:
        self._stop.set()

    async def _ingest(self, frame: Frame, writer) -> None:
        if frame.frame_type is FrameType.PROBE:
            writer.write(protocol.encode_frame(protocol.probe_echo(frame)))
            await writer.drain()
            return
        fb = self.sim.enqueue_command(frame, _now_ns())
        if fb is not None:
            writer.write(protocol.encode_frame(fb))
            await writer.drain()

    async def _tick_loop(self) -> None:
        dt = 1.0 / self.sim.model.control_rate_hz
        while not self._stop.is_set():
            now = _now_ns()
            for fb in self.sim.execute_tick(now):
                if self._writer is not None:
                    self._writer.write(protocol.encode_frame(fb))
                    await self._writer.drain()
            st = self.sim.state
            self.gateway.bus.publish(
                "arm_state",
                now,
                {
                    **{f"q{i+1}": float(q) for i, q in enumerate(st.joints)},
                    "x": float(st.ee_pose.position_mm[0]),
                    "y": float(st.ee_pose.position_mm[1]),
                    "z": float(st.ee_pose.position_mm[2]),
                    "alarm": int(st.alarm),
                    "queue_depth": st.queue_depth(),
                },
            )
            await asyncio.sleep(dt)


@dataclass
class LoopbackStats:
    overhead_ns: list[int] = field(default_factory=list)
    rtt_ns: list[int] = field(default_factory=list)
    feedback: list[str] = field(default_factory=list)


async def _operator_session(
    gateway: LiveGateway, probe_count: int, probe_interval_s: float, moves: int
) -> LoopbackStats:
    stats = LoopbackStats()
    reader, writer = await asyncio.open_connection(gateway.host, gateway.operator_port)
    deframer = Deframer()
    echoes: dict[int, int] = {}
    done = asyncio.Event()

    async def listen():
        while not done.is_set():
            try:
                data = await asyncio.wait_for(reader.read(4096), timeout=0.25)
            except asyncio.TimeoutError:
                continue
            if not data:
                break
            for frame in deframer.feed(data):
                if frame.frame_type is FrameType.PROBE_ECHO:
                    echoes[frame.seq] = _now_ns() - frame.timestamp_ns
                elif frame.frame_type is FrameType.FEEDBACK:
                    stats.feedback.append(frame.payload.status.name)

    listener = asyncio.create_task(listen())
    for i in range(probe_count):
        writer.write(protocol.encode_frame(protocol.probe_frame(i + 1, _now_ns())))
        await writer.drain()
        await asyncio.sleep(probe_interval_s)
    trace = stylus.generate_trace(
        "circle", {"radius_mm": 40.0, "center": (350.0, 0.0, 400.0),
                   "orientation_deg": (0.0, -90.0, 180.0)},
        rate_hz=50.0, duration_s=max(moves / 50.0, 0.1),
    )
    seq = probe_count + 1
    for sample in trace.samples[:moves]:
        sample.t_ns = _now_ns()
        frame = stylus.map_sample(sample, stylus.CalibrationTransform.identity(), seq)
        writer.write(protocol.encode_frame(frame))
        await writer.drain()
        seq += 1
        await asyncio.sleep(0.02)
    await asyncio.sleep(0.5)
    done.set()
    await listener
    writer.close()
    stats.rtt_ns = list(echoes.values())
    stats.overhead_ns = [v for _, v in gateway.metrics.forward_overhead_ns]
    return stats


async def _run_loopback(duration_s: float, probe_count: int) -> dict:
    gateway = LiveGateway()
    await gateway.start()
    arm = LiveArm(gateway)
    arm_task = asyncio.create_task(arm.run())
    await asyncio.sleep(0.05)
    probe_interval = max(duration_s / max(probe_count, 1), 0.001)
    stats = await _operator_session(gateway, probe_count, probe_interval, moves=25)
    arm.stop()
    await asyncio.sleep(0.05)
    arm_task.cancel()
    try:
        await arm_task
    except (asyncio.CancelledError, Exception):
        pass
    await gateway.stop()
    overhead = np.array(stats.overhead_ns, dtype=float)
    rtt = np.array(stats.rtt_ns, dtype=float)
    return {
        "probes_echoed": int(len(rtt)),
        "rtt_mean_us": float(rtt.mean() / 1000.0) if len(rtt) else None,
        "overhead_mean_us": float(overhead.mean() / 1000.0) if len(overhead) else None,
        "overhead_p99_us": float(np.percentile(overhead, 99) / 1000.0) if len(overhead) else None,
        "overhead_samples": int(len(overhead)),
        "feedback_statuses": sorted(set(stats.feedback)),
    }


def run_live_loopback(duration_s: float = 1.0, probe_count: int = 200) -> dict:
    """Gateway + arm + operator on loopback TCP; returns measured stats."""
    return asyncio.run(_run_loopback(duration_s, probe_count))


def build_cockpit_app(gateway: LiveGateway):
    """FastAPI app exposing the /telemetry websocket on an existing gateway."""
    if FastAPI is None:
        raise RuntimeError("cockpit serving requires the 'live' extra (fastapi + uvicorn)")
    app = FastAPI(title="telearm telemetry")

    @app.websocket("/telemetry")
    async def telemetry(ws: WebSocket):
        await ws.accept()
        queue = gateway.bus.subscribe()
        cal = stylus.CalibrationTransform.identity()
        seq = 1_000_000

        async def pump():
            while True:
                event = await queue.get()
                await ws.send_text(json.dumps(event))

        pump_task = asyncio.create_task(pump())
        reader, writer = await asyncio.open_connection(
            gateway.host, gateway.operator_port
        )
        deframer = Deframer()

        async def feedback_pump():
            while True:
                data = await reader.read(4096)
                if not data:
                    break
                for frame in deframer.feed(data):
                    if frame.frame_type is FrameType.FEEDBACK:
                        gateway.bus.publish(
                            "feedback",
                            _now_ns(),
                            {
                                "ref_seq": frame.payload.ref_seq,
                                "status": frame.payload.status.name,
                                "detail": frame.payload.detail,
                                "flags": frame.flags,
                            },
                        )

        feedback_task = asyncio.create_task(feedback_pump())
        try:
            while True:
                text = await ws.receive_text()
                msg = json.loads(text)
                if msg.get("kind") != "stylus":
                    continue
                p = msg["payload"]
                sample = stylus.StylusSample(
                    int(msg.get("t_ns", _now_ns())),
                    np.array([p["x_mm"], p["y_mm"], p["z_mm"]]),
                    np.array(
                        [p.get("roll_deg", 0.0), p.get("pitch_deg", 0.0), p.get("yaw_deg", 0.0)]
                    ),
                    bool(p.get("button", 0)),
                )
                frame = stylus.map_sample(sample, cal, seq)
                if frame is not None:
                    seq += 1
                    writer.write(protocol.encode_frame(frame))
                    await writer.drain()
        except WebSocketDisconnect:
            pass
        finally:
            pump_task.cancel()
            feedback_task.cancel()
            writer.close()
            gateway.bus.unsubscribe(queue)

    return app


async def serve_cockpit(port: int = 8765) -> None:
    """Full local stack: gateway + in-process arm + telemetry websocket."""
    import uvicorn

    gateway = LiveGateway()
    await gateway.start()
    arm = LiveArm(gateway)
    arm_task = asyncio.create_task(arm.run())
    app = build_cockpit_app(gateway)
    print(f"operator TCP  : {gateway.host}:{gateway.operator_port}")
    print(f"arm TCP       : {gateway.host}:{gateway.arm_port}")
    print(f"telemetry ws  : ws://127.0.0.1:{port}/telemetry")
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="warning")
    server = uvicorn.Server(config)
    try:
        await server.serve()
    finally:
        arm.stop()
        arm_task.cancel()
        await gateway.stop()


if __name__ == "__main__":
    asyncio.run(serve_cockpit())
