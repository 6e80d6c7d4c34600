"""Intermediary platform: validate, forward, measure, synchronise.

Sits between the operator side and the arm side.  Every ingress frame is
either forwarded byte-identically or rejected with an explicit FEEDBACK frame
(no silent drops).  The gateway also owns the latency instrumentation (probe
RTTs, one-way = RTT/2, its own forwarding overhead) and the inter-modality
skew scheduler that micro-buffers the earlier stream of a haptic/video pair.

Metrics CSV format: ``kind,t_ns,value_ns,flag``.
"""

from __future__ import annotations

import csv
import enum
import threading
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import protocol
from .netem import Link
from .protocol import FeedbackStatus, Frame, FrameType

RATE_WINDOW_NS = 1_000_000_000  # rolling window for the command-rate guardrail
PROBE_TIMEOUT_NS = 1_000_000_000

METRICS_HEADER = ["kind", "t_ns", "value_ns", "flag"]


class RejectReason(enum.IntEnum):
    TYPE = 1
    WORKSPACE = 2
    RATE = 3
    NO_ROUTE = 4


@dataclass
class GuardrailPolicy:
    """Safety guardrails filtering non-compliant or hazardous instructions."""

    workspace_min_mm: np.ndarray
    workspace_max_mm: np.ndarray
    max_command_rate_hz: float = 200.0
    allowed_types: frozenset[FrameType] = frozenset(
        {FrameType.MOVE, FrameType.QUERY, FrameType.PROBE, FrameType.PROBE_ECHO}
    )

    def __post_init__(self) -> None:
        self.workspace_min_mm = np.asarray(self.workspace_min_mm, dtype=float)
        self.workspace_max_mm = np.asarray(self.workspace_max_mm, dtype=float)
        if np.any(self.workspace_min_mm >= self.workspace_max_mm):
            raise ValueError("workspace bbox needs min < max per axis")
        if self.max_command_rate_hz <= 0:
            raise ValueError("max_command_rate_hz must be positive")


@dataclass
class SkewPolicy:
    """Inter-modality alignment budgets (psychophysical defaults)."""

    skew_budget_ns: int = 10_000_000  # 10 ms
    haptic_deadline_ns: int = 10_000_000  # 10 ms
    visual_deadline_ns: int = 100_000_000  # 100 ms
    pairing_window_ns: int = 50_000_000

    def __post_init__(self) -> None:
        if self.skew_budget_ns > self.visual_deadline_ns:
            raise ValueError("skew budget must not exceed the visual deadline")

    def deadline_ns(self, modality: str) -> int:
        return self.haptic_deadline_ns if modality == "haptic" else self.visual_deadline_ns


class LinkMetrics:
    """Measurement sink; appends are lock-protected for live (threaded) mode."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.rtt_samples_ns: list[tuple[int, int]] = []  # (send_t, rtt)
        self.one_way_estimates_ns: list[tuple[int, float]] = []  # (send_t, rtt/2)
        self.forward_overhead_ns: list[tuple[int, int]] = []
        self.deadline_misses: int = 0
        self.skew_violations: int = 0
        self.unpaired: int = 0
        self.losses: int = 0
        self.rejects: dict[str, int] = {}

    def record_rtt(self, send_t_ns: int, rtt_ns: int) -> None:
        with self._lock:
            self.rtt_samples_ns.append((send_t_ns, rtt_ns))
            self.one_way_estimates_ns.append((send_t_ns, rtt_ns / 2))

    def record_overhead(self, t_ns: int, overhead_ns: int) -> None:
        with self._lock:
            self.forward_overhead_ns.append((t_ns, overhead_ns))

    def record_loss(self) -> None:
        with self._lock:
            self.losses += 1

    def record_reject(self, reason: RejectReason) -> None:
        with self._lock:
            self.rejects[reason.name] = self.rejects.get(reason.name, 0) + 1

    def one_way_values(self) -> np.ndarray:
        return np.array([v for _, v in self.one_way_estimates_ns])

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(METRICS_HEADER)
            for t, v in self.rtt_samples_ns:
                writer.writerow(["rtt", t, v, ""])
            for t, v in self.one_way_estimates_ns:
                writer.writerow(["one_way", t, repr(float(v)), ""])
            for t, v in self.forward_overhead_ns:
                writer.writerow(["forward_overhead", t, v, ""])
            writer.writerow(["deadline_misses", 0, self.deadline_misses, ""])
            writer.writerow(["skew_violations", 0, self.skew_violations, ""])
            writer.writerow(["unpaired", 0, self.unpaired, ""])
            writer.writerow(["losses", 0, self.losses, ""])
            for reason in sorted(self.rejects):
                writer.writerow(["reject", 0, self.rejects[reason], reason])


class RateTracker:
    """Sliding-window accepted-command counter for one sender."""

    def __init__(self, max_rate_hz: float):
        self.max_rate_hz = max_rate_hz
        self._accepted: deque[int] = deque()

    def admit(self, now_ns: int) -> bool:
        cutoff = now_ns - RATE_WINDOW_NS
        while self._accepted and self._accepted[0] <= cutoff:
            self._accepted.popleft()
        if len(self._accepted) >= self.max_rate_hz:
            return False
        self._accepted.append(now_ns)
        return True


def validate_command(
    frame: Frame, policy: GuardrailPolicy, now_ns: int, rate: RateTracker
) -> RejectReason | None:
    """None when the frame passes every guardrail, else the reject reason."""
    if frame.frame_type not in policy.allowed_types:
        return RejectReason.TYPE
    if frame.frame_type is FrameType.MOVE:
        pos = np.array(frame.payload.position_mm())
        if np.any(pos < policy.workspace_min_mm) or np.any(pos > policy.workspace_max_mm):
            return RejectReason.WORKSPACE
        if not rate.admit(now_ns):
            return RejectReason.RATE
    return None


@dataclass
class ModalPacket:
    """One packet of a modality stream awaiting skew alignment."""

    stream: str  # "haptic" | "video"
    source_ts_ns: int
    arrival_ns: int
    seq: int


@dataclass
class ScheduledRelease:
    packet: ModalPacket
    release_ns: int
    flag: str = ""  # "", "skew_violation", "unpaired"

    @property
    def buffered_ns(self) -> int:
        return self.release_ns - self.packet.arrival_ns


def _pair_by_source_ts(
    haptic: list[ModalPacket], video: list[ModalPacket], window_ns: int
) -> list[tuple[int, int]]:
    """Greedy one-to-one nearest-source-timestamp matching within the window."""
    candidates = []
    for i, h in enumerate(haptic):
        for j, v in enumerate(video):
            dt = abs(h.source_ts_ns - v.source_ts_ns)
            if dt <= window_ns:
                candidates.append((dt, h.source_ts_ns, v.source_ts_ns, i, j))
    candidates.sort()
    h_used = [False] * len(haptic)
    v_used = [False] * len(video)
    pairs = []
    for _, _, _, i, j in candidates:
        if not h_used[i] and not v_used[j]:
            h_used[i] = v_used[j] = True
            pairs.append((i, j))
    return pairs


def schedule_skew(
    haptic_pkts: list[ModalPacket],
    video_pkts: list[ModalPacket],
    policy: SkewPolicy,
) -> list[ScheduledRelease]:
    """Micro-buffer the earlier packet of each pair so both release together.

    The later arrival releases immediately; the earlier one is held until
    (later_arrival - skew_budget), but never past its own modality deadline.
    If alignment would breach the deadline, the packet releases exactly at
    the deadline and the pair is flagged.  Packets with no partner inside
    the pairing window release immediately, flagged UNPAIRED.
    """
    haptic = sorted(haptic_pkts, key=lambda p: (p.source_ts_ns, p.seq))
    video = sorted(video_pkts, key=lambda p: (p.source_ts_ns, p.seq))
    pairs = _pair_by_source_ts(haptic, video, policy.pairing_window_ns)
    out: list[ScheduledRelease] = []
    h_matched = set()
    v_matched = set()
    for i, j in pairs:
        h_matched.add(i)
        v_matched.add(j)
        h, v = haptic[i], video[j]
        early, late = (h, v) if h.arrival_ns <= v.arrival_ns else (v, h)
        desired = max(early.arrival_ns, late.arrival_ns - policy.skew_budget_ns)
        cap = early.arrival_ns + policy.deadline_ns(early.stream)
        if desired <= cap:
            early_rel, flag = desired, ""
        else:
            early_rel, flag = cap, "skew_violation"
        out.append(ScheduledRelease(early, early_rel, flag))
        out.append(ScheduledRelease(late, late.arrival_ns, flag))
    for i, h in enumerate(haptic):
        if i not in h_matched:
            out.append(ScheduledRelease(h, h.arrival_ns, "unpaired"))
    for j, v in enumerate(video):
        if j not in v_matched:
            out.append(ScheduledRelease(v, v.arrival_ns, "unpaired"))
    out.sort(key=lambda r: (r.release_ns, r.packet.source_ts_ns, r.packet.stream, r.packet.seq))
    return out


class Gateway:
    """Virtual-time gateway core; one instance per scenario run.

    Live mode wraps the same logic with real sockets (telearm.live); the
    processing delay is then measured instead of modelled.
    """

    def __init__(
        self,
        policy: GuardrailPolicy,
        proc_delay_ns: int = 1_000_000,
        skew_policy: SkewPolicy | None = None,
    ):
        self.policy = policy
        self.proc_delay_ns = proc_delay_ns
        self.skew_policy = skew_policy if skew_policy is not None else SkewPolicy()
        self.metrics = LinkMetrics()
        self._rates: dict[str, RateTracker] = {}
        self._feedback_seq = 0

    def _rate(self, sender: str) -> RateTracker:
        if sender not in self._rates:
            self._rates[sender] = RateTracker(self.policy.max_command_rate_hz)
        return self._rates[sender]

    def _reject_feedback(self, frame: Frame, now_ns: int, reason: RejectReason) -> Frame:
        self.metrics.record_reject(reason)
        self._feedback_seq = protocol.next_seq(self._feedback_seq)
        return protocol.feedback_frame(
            self._feedback_seq, now_ns, frame.seq, FeedbackStatus.REJECTED, int(reason)
        )

    def handle_ingress(
        self, frame_bytes: bytes, now_ns: int, sender: str = "operator"
    ) -> tuple[str, int, bytes] | tuple[str, int, Frame]:
        """Validate one ingress frame.

        Returns ("forward", egress_ns, frame_bytes) with the bytes unmodified,
        or ("reject", now_ns, feedback_frame).  Exactly one of the two outcomes
        occurs for every ingress frame.
        """
        frame = protocol.decode_frame(frame_bytes)
        reason = validate_command(frame, self.policy, now_ns, self._rate(sender))
        if reason is not None:
            return ("reject", now_ns, self._reject_feedback(frame, now_ns, reason))
        egress_ns = now_ns + self.proc_delay_ns
        self.metrics.record_overhead(now_ns, self.proc_delay_ns)
        return ("forward", egress_ns, frame_bytes)

    def measure_rtt(
        self,
        probe_count: int,
        out_link: Link,
        back_link: Link,
        interval_ns: int = 1_000_000,
        start_ns: int = 0,
        timeout_ns: int = PROBE_TIMEOUT_NS,
    ) -> LinkMetrics:
        """Probe a route: RTT on the sender's clock, one-way = RTT/2."""
        return probe_route(
            self.metrics, probe_count, out_link, back_link, interval_ns, start_ns, timeout_ns
        )


def probe_route(
    metrics: LinkMetrics,
    probe_count: int,
    out_link: Link,
    back_link: Link,
    interval_ns: int = 1_000_000,
    start_ns: int = 0,
    timeout_ns: int = PROBE_TIMEOUT_NS,
) -> LinkMetrics:
    """Send PROBE frames over a route and collect RTT / one-way estimates.

    The far end echoes each PROBE as PROBE_ECHO preserving the probe's
    timestamp, so the RTT needs no clock synchronisation.  Probes lost on
    either leg (or exceeding the timeout) count as losses and are excluded
    from the latency series.
    """
    for i in range(probe_count):
        send_ns = start_ns + i * interval_ns
        arrival = out_link.transit(send_ns)
        if arrival is None:
            metrics.record_loss()
            continue
        back = back_link.transit(arrival)
        if back is None:
            metrics.record_loss()
            continue
        rtt = back - send_ns
        if rtt > timeout_ns:
            metrics.record_loss()
            continue
        metrics.record_rtt(send_ns, rtt)
    return metrics
