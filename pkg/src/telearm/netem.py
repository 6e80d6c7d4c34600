"""Discrete-event emulation of the transport layer.

Each link class is a parametric delay/jitter/loss model with optional
line-of-sight blockage windows.  On top of the per-packet delay model sit the
transport mechanisms: URLLC/eMBB slice classification, TSN-style
hold-and-forward jitter bounding, and threshold-driven adaptive modulation.

The core is virtual-time and fully deterministic for a fixed seed; wall-clock
"live" operation maps the same draws onto timers (see telearm.live) and is
excluded from bit-exact assertions.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass, field

import numpy as np

from . import protocol


class ConfigError(Exception):
    """Invalid emulator configuration (unknown modality, bad profile, ...)."""


@dataclass(frozen=True)
class JitterSpec:
    """Per-packet jitter distribution, parameters in microseconds.

    kinds:
        none       no jitter
        gaussian   mean_us + sigma_us * N(0,1)
        lognormal  median_us * exp(sigma_log * N(0,1))  (heavy right tail)
    """

    kind: str = "none"
    mean_us: float = 0.0
    sigma_us: float = 0.0
    median_us: float = 0.0
    sigma_log: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("none", "gaussian", "lognormal"):
            raise ConfigError(f"unknown jitter kind {self.kind!r}")

    def draw(self, rng: np.random.Generator) -> float:
        if self.kind == "gaussian":
            return self.mean_us + self.sigma_us * rng.standard_normal()
        if self.kind == "lognormal":
            return self.median_us * float(np.exp(self.sigma_log * rng.standard_normal()))
        return 0.0

    def analytic_mean_us(self) -> float:
        if self.kind == "gaussian":
            return self.mean_us
        if self.kind == "lognormal":
            return self.median_us * float(np.exp(self.sigma_log**2 / 2))
        return 0.0

    def analytic_var_us2(self) -> float:
        if self.kind == "gaussian":
            return self.sigma_us**2
        if self.kind == "lognormal":
            s2 = self.sigma_log**2
            return self.median_us**2 * float(np.exp(s2) * (np.exp(s2) - 1.0))
        return 0.0


@dataclass
class NetworkProfile:
    """One link class: mean one-way delay, jitter, loss, blockage windows.

    serialization_us is the on-air time of one frame at the lowest (QPSK)
    modulation order; it only contributes delay through apply_modulation.
    """

    name: str = "custom"
    base_delay_us: float = 0.0
    jitter: JitterSpec = field(default_factory=JitterSpec)
    loss_prob: float = 0.0
    blockage_windows: list[tuple[int, int, float]] = field(default_factory=list)
    seed: int | None = None
    serialization_us: float = 0.0

    def __post_init__(self) -> None:
        if self.base_delay_us < 0:
            raise ConfigError("base_delay_us must be >= 0")
        if self.serialization_us < 0:
            raise ConfigError("serialization_us must be >= 0")
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ConfigError("loss_prob must lie in [0, 1]")
        windows = sorted(self.blockage_windows)
        for (s0, e0, _), (s1, _, _) in zip(windows, windows[1:]):
            if s1 < e0:
                raise ConfigError("blockage windows must not overlap")
        for s, e, extra in windows:
            if e <= s or extra < 0:
                raise ConfigError("blockage window needs end > start and extra >= 0")
        self.blockage_windows = windows

    def blockage_extra_us(self, t_ns: int) -> float:
        for start_ns, end_ns, extra_us in self.blockage_windows:
            if start_ns <= t_ns < end_ns:
                return extra_us
        return 0.0


def sample_delivery(
    pkt_ingress_ns: int, profile: NetworkProfile, rng: np.random.Generator
) -> int | None:
    """Delivery time for a packet entering the link at ``pkt_ingress_ns``.

    Returns None when the loss draw fires.  Draw order is fixed (loss then
    jitter) so a given seed always yields the same delivery sequence.
    """
    lost = rng.random() < profile.loss_prob
    jitter_us = profile.jitter.draw(rng)
    if lost:
        return None
    delay_us = max(0.0, profile.base_delay_us + jitter_us)
    delay_us += profile.blockage_extra_us(pkt_ingress_ns)
    return pkt_ingress_ns + int(round(delay_us * 1000.0))


class Link:
    """A directed link instance: a profile plus its own deterministic RNG."""

    def __init__(self, profile: NetworkProfile, seed: int | None = None):
        self.profile = profile
        resolved = seed if seed is not None else profile.seed
        if resolved is None:
            raise ConfigError(f"link over profile {profile.name!r} needs a seed")
        self.seed = int(resolved)
        self.rng = np.random.default_rng(self.seed)
        self.sent = 0
        self.lost = 0

    def transit(self, ingress_ns: int) -> int | None:
        self.sent += 1
        delivery = sample_delivery(ingress_ns, self.profile, self.rng)
        if delivery is None:
            self.lost += 1
        return delivery


class SliceClass(enum.Enum):
    URLLC = "urllc"
    EMBB = "embb"

    @property
    def queue_priority(self) -> int:
        # URLLC strictly higher
        return 1 if self is SliceClass.URLLC else 0


DEFAULT_SLICE_MAP = {
    "haptic": SliceClass.URLLC,
    "control": SliceClass.URLLC,
    "video": SliceClass.EMBB,
}


def classify_slice(
    stream_id: str, modality: str, slice_map: dict[str, SliceClass] | None = None
) -> SliceClass:
    """Map a modality stream onto its transport slice."""
    mapping = slice_map if slice_map is not None else DEFAULT_SLICE_MAP
    try:
        return mapping[modality]
    except KeyError:
        raise ConfigError(f"unknown modality {modality!r} for stream {stream_id!r}") from None


class ModulationOrder(enum.IntEnum):
    QPSK = 0
    QAM16 = 1
    QAM64 = 2
    QAM256 = 3


# defaults: reliability falls and raw rate rises with the order
DEFAULT_ERROR_PROB = {
    ModulationOrder.QPSK: 1e-4,
    ModulationOrder.QAM16: 1e-3,
    ModulationOrder.QAM64: 5e-3,
    ModulationOrder.QAM256: 2e-2,
}
DEFAULT_THROUGHPUT = {
    ModulationOrder.QPSK: 1.0,
    ModulationOrder.QAM16: 2.0,
    ModulationOrder.QAM64: 3.0,
    ModulationOrder.QAM256: 4.0,
}


@dataclass
class ModulationState:
    order: ModulationOrder = ModulationOrder.QAM64
    per_packet_error_prob: dict[ModulationOrder, float] = field(
        default_factory=lambda: dict(DEFAULT_ERROR_PROB)
    )
    relative_throughput: dict[ModulationOrder, float] = field(
        default_factory=lambda: dict(DEFAULT_THROUGHPUT)
    )

    def __post_init__(self) -> None:
        orders = sorted(ModulationOrder)
        errs = [self.per_packet_error_prob[o] for o in orders]
        thr = [self.relative_throughput[o] for o in orders]
        if any(b < a for a, b in zip(errs, errs[1:])):
            raise ConfigError("error probability must be non-decreasing with order")
        if any(b < a for a, b in zip(thr, thr[1:])):
            raise ConfigError("throughput must be non-decreasing with order")

    @property
    def error_prob(self) -> float:
        return self.per_packet_error_prob[self.order]

    @property
    def throughput(self) -> float:
        return self.relative_throughput[self.order]


def apply_modulation(profile: NetworkProfile, state: ModulationState) -> NetworkProfile:
    """Derived link profile under one modulation order.

    Lower orders serialize slower (serialization_us divided by the relative
    throughput); higher orders add their per-packet error probability on top
    of the profile's base loss.
    """
    return NetworkProfile(
        profile.name,
        profile.base_delay_us + profile.serialization_us / state.throughput,
        profile.jitter,
        min(1.0, profile.loss_prob + state.error_prob),
        list(profile.blockage_windows),
        profile.seed,
        0.0,
    )


def adapt_modulation(
    state: ModulationState,
    channel_quality: float,
    low_threshold: float = 0.3,
    high_threshold: float = 0.7,
) -> ModulationState:
    """Step the modulation order down/up against a hysteresis band.

    Quality below the low threshold drops one order (reliability first);
    above the high threshold climbs one order (rate); in between holds.
    """
    if not 0.0 <= channel_quality <= 1.0:
        raise ConfigError("channel_quality must lie in [0, 1]")
    order = state.order
    if channel_quality < low_threshold and order > ModulationOrder.QPSK:
        order = ModulationOrder(order - 1)
    elif channel_quality > high_threshold and order < ModulationOrder.QAM256:
        order = ModulationOrder(order + 1)
    return ModulationState(order, state.per_packet_error_prob, state.relative_throughput)


@dataclass
class InFlightPacket:
    frame_bytes: bytes
    ingress_ns: int
    scheduled_delivery_ns: int
    slice: SliceClass
    stream_id: str
    seq: int

    def __post_init__(self) -> None:
        if self.scheduled_delivery_ns < self.ingress_ns:
            raise ValueError("delivery must not precede ingress")


def hold_and_forward(pkt: InFlightPacket, budget_ns: int) -> tuple[int, bool]:
    """TSN-style egress: absorb jitter by holding until ingress + budget.

    Packets arriving within the budget release exactly at ingress + budget
    (deterministic egress); late packets release immediately on arrival with
    the frame's deadline-missed flag bit set.
    """
    if budget_ns < 0:
        raise ValueError("budget_ns must be >= 0")
    deadline = pkt.ingress_ns + budget_ns
    if pkt.scheduled_delivery_ns <= deadline:
        return deadline, False
    pkt.frame_bytes = protocol.set_flags(pkt.frame_bytes, protocol.FLAG_DEADLINE_MISSED)
    return pkt.scheduled_delivery_ns, True


class EventQueue:
    """Pending in-flight packets ordered by (release, URLLC-before-eMBB, seq)."""

    def __init__(self) -> None:
        self._heap: list[tuple[int, int, int, int, InFlightPacket]] = []
        self._pushes = 0

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, pkt: InFlightPacket, release_ns: int) -> None:
        self._pushes += 1
        heapq.heappush(
            self._heap, (release_ns, -pkt.slice.queue_priority, pkt.seq, self._pushes, pkt)
        )

    def step(self, now_ns: int) -> list[InFlightPacket]:
        out: list[InFlightPacket] = []
        while self._heap and self._heap[0][0] <= now_ns:
            out.append(heapq.heappop(self._heap)[4])
        return out


def step_events(queue: EventQueue, now_ns: int) -> list[InFlightPacket]:
    """Deliver every pending packet whose release time has arrived."""
    return queue.step(now_ns)


def default_profile(name: str, seed: int | None = None) -> NetworkProfile:
    """Built-in link classes tuned to the qualitative figure shapes.

    ethernet: sub-ms, near-zero jitter.  wifi: same-order base delay as oran
    but heavy contention jitter.  oran: generally stable with two intentional
    line-of-sight blockage windows.
    """
    if name == "ethernet":
        return NetworkProfile(
            "ethernet", 300.0, JitterSpec("gaussian", sigma_us=20.0), 0.0, [], seed
        )
    if name == "wifi":
        return NetworkProfile(
            "wifi",
            6000.0,
            JitterSpec("lognormal", median_us=1500.0, sigma_log=1.1),
            0.005,
            [],
            seed,
        )
    if name == "oran":
        return NetworkProfile(
            "oran",
            6000.0,
            JitterSpec("lognormal", median_us=500.0, sigma_log=0.8),
            0.0,
            [
                (2_000_000_000, 2_030_000_000, 35_000.0),
                (6_000_000_000, 6_030_000_000, 35_000.0),
            ],
            seed,
        )
    if name == "zero":
        return NetworkProfile("zero", 0.0, JitterSpec(), 0.0, [], seed)
    raise ConfigError(f"no built-in profile named {name!r}")
