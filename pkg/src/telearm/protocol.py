"""Wire framing for the stylus/gateway/arm control loop.

Frame layout (little-endian, fixed 32 bytes for every type):

    ┌───────────┬──────────┬───────────┬─────────┬────────────────┬──────────────┬───────────┐
    │ magic(2B) │ type(1B) │ flags(1B) │ seq(4B) │ timestamp(8B)  │ payload(12B) │ crc32(4B) │
    │ 0x6A67    │ u8       │ u8        │ u32     │ u64 ns         │ per type     │ u32       │
    └───────────┴──────────┴───────────┴─────────┴────────────────┴──────────────┴───────────┘

The CRC-32 (IEEE polynomial) covers header + payload.  Payloads:

    MOVE        six signed 16-bit fixed-point fields: x,y,z in 0.1 mm, roll,pitch,yaw in 0.01 deg
    FEEDBACK    ref_seq u32 | status u8 | detail u32 | 3 pad bytes
    QUERY       op u32 (0 = status poll, 1 = clear alarm) | 8 pad bytes
    PROBE(_ECHO) 12 zero bytes; an echo preserves the probe's seq and timestamp

All types are fixed-size, so frames are self-delimiting on a byte stream
without a length prefix.
"""

from __future__ import annotations

import enum
import struct
import zlib
from dataclasses import dataclass

MAGIC = 0x6A67

HEADER_FMT = "<HBBIQ"
HEADER_SIZE = struct.calcsize(HEADER_FMT)  # 16
PAYLOAD_SIZE = 12
CRC_SIZE = 4
FRAME_SIZE = HEADER_SIZE + PAYLOAD_SIZE + CRC_SIZE  # 32

POS_QUANTUM_MM = 0.1
ANG_QUANTUM_DEG = 0.01

# flags byte
FLAG_DEADLINE_MISSED = 0x01
FLAG_ALARM = 0x02

_POSE_FMT = "<6h"
_FEEDBACK_FMT = "<IBI3x"
_QUERY_FMT = "<I8x"

_I16_MIN, _I16_MAX = -(2**15), 2**15 - 1


class FrameType(enum.IntEnum):
    MOVE = 1
    QUERY = 2
    FEEDBACK = 3
    PROBE = 4
    PROBE_ECHO = 5


# type -> total frame length on the wire (all fixed-size today)
FRAME_SIZES: dict[FrameType, int] = {t: FRAME_SIZE for t in FrameType}


class FeedbackStatus(enum.IntEnum):
    EXECUTED = 1
    QUEUED = 2
    REJECTED = 3
    ALARM = 4
    QUERY_RESULT = 5


class QueryOp(enum.IntEnum):
    STATUS = 0
    CLEAR_ALARM = 1


class ProtocolError(Exception):
    """Base for every framing error."""


class EncodeError(ProtocolError):
    """Payload does not match the frame type, or a field is out of range."""


class PoseOverflow(EncodeError):
    """A pose coordinate does not fit the signed 16-bit fixed-point range."""


class DecodeError(ProtocolError):
    """Base for decode failures; input must not be treated as consumed."""


class BadMagic(DecodeError):
    pass


class ShortFrame(DecodeError):
    pass


class BadChecksum(DecodeError):
    pass


class UnknownType(DecodeError):
    pass


def _quantize(value: float, quantum: float, what: str) -> int:
    q = round(value / quantum)
    if not _I16_MIN <= q <= _I16_MAX:
        raise PoseOverflow(f"{what}={value!r} outside fixed-point range")
    return q


@dataclass(frozen=True)
class PosePayload:
    """6-DOF pose stored in wire fixed-point counts (0.1 mm / 0.01 deg)."""

    x_q: int
    y_q: int
    z_q: int
    roll_q: int
    pitch_q: int
    yaw_q: int

    @classmethod
    def from_pose(
        cls,
        x_mm: float,
        y_mm: float,
        z_mm: float,
        roll_deg: float,
        pitch_deg: float,
        yaw_deg: float,
    ) -> "PosePayload":
        return cls(
            _quantize(x_mm, POS_QUANTUM_MM, "x_mm"),
            _quantize(y_mm, POS_QUANTUM_MM, "y_mm"),
            _quantize(z_mm, POS_QUANTUM_MM, "z_mm"),
            _quantize(roll_deg, ANG_QUANTUM_DEG, "roll_deg"),
            _quantize(pitch_deg, ANG_QUANTUM_DEG, "pitch_deg"),
            _quantize(yaw_deg, ANG_QUANTUM_DEG, "yaw_deg"),
        )

    def position_mm(self) -> tuple[float, float, float]:
        return (
            self.x_q * POS_QUANTUM_MM,
            self.y_q * POS_QUANTUM_MM,
            self.z_q * POS_QUANTUM_MM,
        )

    def angles_deg(self) -> tuple[float, float, float]:
        return (
            self.roll_q * ANG_QUANTUM_DEG,
            self.pitch_q * ANG_QUANTUM_DEG,
            self.yaw_q * ANG_QUANTUM_DEG,
        )

    def pose(self) -> tuple[float, float, float, float, float, float]:
        return self.position_mm() + self.angles_deg()


@dataclass(frozen=True)
class FeedbackPayload:
    ref_seq: int
    status: FeedbackStatus
    detail: int = 0


@dataclass(frozen=True)
class QueryPayload:
    op: QueryOp = QueryOp.STATUS


# PROBE / PROBE_ECHO carry no payload fields
Payload = PosePayload | FeedbackPayload | QueryPayload | None

_PAYLOAD_CLASS: dict[FrameType, type | None] = {
    FrameType.MOVE: PosePayload,
    FrameType.QUERY: QueryPayload,
    FrameType.FEEDBACK: FeedbackPayload,
    FrameType.PROBE: type(None),
    FrameType.PROBE_ECHO: type(None),
}


@dataclass(frozen=True)
class Frame:
    frame_type: FrameType
    seq: int
    timestamp_ns: int
    payload: Payload = None
    flags: int = 0

    def flag(self, bit: int) -> bool:
        return bool(self.flags & bit)


def crc32(data: bytes) -> int:
    return zlib.crc32(data) & 0xFFFFFFFF


def _encode_payload(frame: Frame) -> bytes:
    p = frame.payload
    if not isinstance(p, _PAYLOAD_CLASS[frame.frame_type]):
        raise EncodeError(
            f"payload {type(p).__name__} does not match frame type {frame.frame_type.name}"
        )
    if isinstance(p, PosePayload):
        for q in (p.x_q, p.y_q, p.z_q, p.roll_q, p.pitch_q, p.yaw_q):
            if not _I16_MIN <= q <= _I16_MAX:
                raise PoseOverflow(f"fixed-point count {q} out of range")
        return struct.pack(_POSE_FMT, p.x_q, p.y_q, p.z_q, p.roll_q, p.pitch_q, p.yaw_q)
    if isinstance(p, FeedbackPayload):
        if not 0 <= p.ref_seq < 2**32 or not 0 <= p.detail < 2**32:
            raise EncodeError("feedback field out of u32 range")
        return struct.pack(_FEEDBACK_FMT, p.ref_seq, int(p.status), p.detail)
    if isinstance(p, QueryPayload):
        return struct.pack(_QUERY_FMT, int(p.op))
    return bytes(PAYLOAD_SIZE)


def encode_frame(frame: Frame) -> bytes:
    """Encode a frame to its exact 32-byte wire form."""
    if not 0 <= frame.seq < 2**32:
        raise EncodeError(f"seq {frame.seq} out of u32 range")
    if not 0 <= frame.timestamp_ns < 2**64:
        raise EncodeError(f"timestamp_ns {frame.timestamp_ns} out of u64 range")
    if not 0 <= frame.flags < 2**8:
        raise EncodeError(f"flags {frame.flags} out of u8 range")
    body = struct.pack(
        HEADER_FMT, MAGIC, int(frame.frame_type), frame.flags, frame.seq, frame.timestamp_ns
    ) + _encode_payload(frame)
    return body + struct.pack("<I", crc32(body))


def decode_frame(data: bytes) -> Frame:
    """Decode one frame from the head of ``data``.

    Raises BadMagic / ShortFrame / BadChecksum / UnknownType; on any failure
    the caller's buffer is untouched (nothing is consumed).
    """
    if len(data) >= 2:
        (magic,) = struct.unpack_from("<H", data)
        if magic != MAGIC:
            raise BadMagic(f"magic 0x{magic:04X}")
    if len(data) < FRAME_SIZE:
        raise ShortFrame(f"{len(data)} bytes, need {FRAME_SIZE}")
    body, (stored,) = data[: FRAME_SIZE - CRC_SIZE], struct.unpack_from(
        "<I", data, FRAME_SIZE - CRC_SIZE
    )
    if crc32(body) != stored:
        raise BadChecksum(f"crc 0x{crc32(body):08X} != stored 0x{stored:08X}")
    _, raw_type, flags, seq, timestamp_ns = struct.unpack_from(HEADER_FMT, body)
    try:
        frame_type = FrameType(raw_type)
    except ValueError:
        raise UnknownType(f"frame type {raw_type}") from None
    raw = body[HEADER_SIZE:]
    payload: Payload
    if frame_type is FrameType.MOVE:
        payload = PosePayload(*struct.unpack(_POSE_FMT, raw))
    elif frame_type is FrameType.FEEDBACK:
        ref_seq, raw_status, detail = struct.unpack(_FEEDBACK_FMT, raw)
        try:
            status = FeedbackStatus(raw_status)
        except ValueError:
            raise UnknownType(f"feedback status {raw_status}") from None
        payload = FeedbackPayload(ref_seq, status, detail)
    elif frame_type is FrameType.QUERY:
        (raw_op,) = struct.unpack(_QUERY_FMT, raw)
        try:
            payload = QueryPayload(QueryOp(raw_op))
        except ValueError:
            raise UnknownType(f"query op {raw_op}") from None
    else:
        payload = None
    return Frame(frame_type, seq, timestamp_ns, payload, flags)


def set_flags(frame_bytes: bytes, bits: int) -> bytes:
    """Return frame bytes with extra flag bits set and the CRC fixed up."""
    if len(frame_bytes) != FRAME_SIZE:
        raise ShortFrame(f"{len(frame_bytes)} bytes, need {FRAME_SIZE}")
    body = bytearray(frame_bytes[: FRAME_SIZE - CRC_SIZE])
    body[3] |= bits
    return bytes(body) + struct.pack("<I", crc32(bytes(body)))


def move_frame(
    seq: int,
    timestamp_ns: int,
    x_mm: float,
    y_mm: float,
    z_mm: float,
    roll_deg: float = 0.0,
    pitch_deg: float = 0.0,
    yaw_deg: float = 0.0,
    flags: int = 0,
) -> Frame:
    pose = PosePayload.from_pose(x_mm, y_mm, z_mm, roll_deg, pitch_deg, yaw_deg)
    return Frame(FrameType.MOVE, seq, timestamp_ns, pose, flags)


def feedback_frame(
    seq: int,
    timestamp_ns: int,
    ref_seq: int,
    status: FeedbackStatus,
    detail: int = 0,
    flags: int = 0,
) -> Frame:
    return Frame(FrameType.FEEDBACK, seq, timestamp_ns, FeedbackPayload(ref_seq, status, detail), flags)


def probe_frame(seq: int, timestamp_ns: int) -> Frame:
    return Frame(FrameType.PROBE, seq, timestamp_ns)


def probe_echo(probe: Frame) -> Frame:
    """Echo reply preserving the probe's seq and sender timestamp."""
    return Frame(FrameType.PROBE_ECHO, probe.seq, probe.timestamp_ns)


def query_frame(seq: int, timestamp_ns: int, op: QueryOp = QueryOp.STATUS) -> Frame:
    return Frame(FrameType.QUERY, seq, timestamp_ns, QueryPayload(op))


class Deframer:
    """Incremental frame extractor for a reliable byte stream.

    Feeds arbitrary chunks; yields complete decoded frames.  On garbage it
    resynchronises by scanning forward one byte at a time for the magic.
    """

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[Frame]:
        self._buf.extend(data)
        frames: list[Frame] = []
        while True:
            if len(self._buf) < FRAME_SIZE:
                return frames
            try:
                frames.append(decode_frame(bytes(self._buf[:FRAME_SIZE])))
                del self._buf[:FRAME_SIZE]
            except DecodeError:
                del self._buf[:1]


def next_seq(seq: int) -> int:
    """Strictly increasing u32 sequence with wrap (wrap treated as exhaustion)."""
    if seq >= 2**32 - 1:
        raise EncodeError("sequence space exhausted")
    return seq + 1
