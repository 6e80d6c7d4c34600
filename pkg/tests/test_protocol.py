"""Wire framing: exact layout, round trips, corruption detection."""

from __future__ import annotations

import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from telearm import protocol as P


def make_move(seq=1, ts=0, pose=(100.0, 0.0, 0.0, 0.0, 0.0, 0.0), flags=0):
    return P.move_frame(seq, ts, *pose, flags=flags)


class TestLayout:
    def test_move_frame_is_exactly_32_bytes(self):
        for pose in [(0, 0, 0, 0, 0, 0), (100.5, -50.2, 3276.7, -180.0, 90.0, -0.01)]:
            assert len(P.encode_frame(make_move(pose=pose))) == 32

    def test_all_frame_types_are_32_bytes(self):
        frames = [
            make_move(),
            P.query_frame(2, 10),
            P.feedback_frame(3, 20, 1, P.FeedbackStatus.EXECUTED),
            P.probe_frame(4, 30),
            P.Frame(P.FrameType.PROBE_ECHO, 5, 40),
        ]
        for frame in frames:
            assert len(P.encode_frame(frame)) == P.FRAME_SIZES[frame.frame_type] == 32

    def test_pose_bytes_hand_layout(self):
        # header is 16 bytes (magic 2 + type 1 + flags 1 + seq 4 + ts 8);
        # x at offset 16 holds 1000 counts of 0.1 mm for x = 100.0 mm
        data = P.encode_frame(make_move(seq=1, pose=(100.0, 0, 0, 0, 0, 0)))
        assert struct.unpack_from("<h", data, 16)[0] == 1000
        assert struct.unpack_from("<H", data, 0)[0] == 0x6A67
        assert data[2] == P.FrameType.MOVE
        assert struct.unpack_from("<I", data, 4)[0] == 1

    def test_little_endian_multibyte_fields(self):
        frame = P.Frame(P.FrameType.PROBE, seq=0x01020304, timestamp_ns=0x1122334455667788)
        data = P.encode_frame(frame)
        assert data[4:8] == bytes([0x04, 0x03, 0x02, 0x01])
        assert data[8:16] == bytes([0x88, 0x77, 0x66, 0x55, 0x44, 0x33, 0x22, 0x11])

    def test_crc_covers_header_and_payload(self):
        data = P.encode_frame(make_move())
        assert struct.unpack_from("<I", data, 28)[0] == P.crc32(data[:28])


class TestRoundTrip:
    def test_feedback_roundtrip_zero_fields(self):
        frame = P.feedback_frame(0, 0, 0, P.FeedbackStatus.EXECUTED, detail=0)
        assert P.decode_frame(P.encode_frame(frame)) == frame

    @pytest.mark.parametrize(
        "frame",
        [
            make_move(seq=7, ts=123456789, pose=(1.5, -2.5, 3.0, 10.0, -20.0, 30.0), flags=3),
            P.query_frame(9, 55, P.QueryOp.CLEAR_ALARM),
            P.feedback_frame(11, 99, 7, P.FeedbackStatus.ALARM, detail=42),
            P.probe_frame(2**32 - 2, 2**63),
        ],
    )
    def test_each_type_roundtrips(self, frame):
        assert P.decode_frame(P.encode_frame(frame)) == frame

    def test_pose_quantization_within_one_quantum(self):
        pose = P.PosePayload.from_pose(12.3456, -0.04, 99.99, 1.2345, -9.8765, 179.999)
        back = pose.pose()
        for real, got, quantum in zip(
            (12.3456, -0.04, 99.99, 1.2345, -9.8765, 179.999),
            back,
            (0.1, 0.1, 0.1, 0.01, 0.01, 0.01),
        ):
            assert abs(real - got) <= quantum

    def test_pose_overflow(self):
        with pytest.raises(P.PoseOverflow):
            P.PosePayload.from_pose(3276.9, 0, 0, 0, 0, 0)
        with pytest.raises(P.PoseOverflow):
            P.PosePayload.from_pose(0, 0, 0, 0, 0, 400.0)


class TestDecodeErrors:
    def test_truncated_move_is_short_frame(self):
        data = P.encode_frame(make_move())
        with pytest.raises(P.ShortFrame):
            P.decode_frame(data[:31])

    def test_corrupt_last_byte_is_bad_checksum(self):
        data = bytearray(P.encode_frame(make_move()))
        data[-1] ^= 0xFF
        with pytest.raises(P.BadChecksum):
            P.decode_frame(bytes(data))

    def test_bad_magic(self):
        data = bytearray(P.encode_frame(make_move()))
        data[0] ^= 0x55
        with pytest.raises(P.BadMagic):
            P.decode_frame(bytes(data))

    def test_unknown_type_with_valid_crc(self):
        body = struct.pack(P.HEADER_FMT, P.MAGIC, 99, 0, 1, 2) + bytes(12)
        data = body + struct.pack("<I", P.crc32(body))
        with pytest.raises(P.UnknownType):
            P.decode_frame(data)

    def test_payload_type_mismatch_is_encode_error(self):
        bad = P.Frame(P.FrameType.MOVE, 1, 2, P.FeedbackPayload(0, P.FeedbackStatus.QUEUED))
        with pytest.raises(P.EncodeError):
            P.encode_frame(bad)

    def test_field_range_errors(self):
        with pytest.raises(P.EncodeError):
            P.encode_frame(P.Frame(P.FrameType.PROBE, -1, 0))
        with pytest.raises(P.EncodeError):
            P.encode_frame(P.Frame(P.FrameType.PROBE, 0, 2**64))


def test_set_flags_rewrites_crc():
    data = P.encode_frame(make_move())
    flagged = P.set_flags(data, P.FLAG_DEADLINE_MISSED)
    frame = P.decode_frame(flagged)
    assert frame.flag(P.FLAG_DEADLINE_MISSED)
    assert frame.payload == P.decode_frame(data).payload


def test_next_seq_strictly_increasing():
    seq = 0
    seen = []
    for _ in range(10):
        seq = P.next_seq(seq)
        seen.append(seq)
    assert seen == sorted(set(seen))
    with pytest.raises(P.EncodeError):
        P.next_seq(2**32 - 1)


class TestDeframer:
    def test_reassembles_across_chunks(self):
        frames = [make_move(seq=i) for i in range(1, 6)]
        stream = b"".join(P.encode_frame(f) for f in frames)
        deframer = P.Deframer()
        out = []
        for i in range(0, len(stream), 7):  # deliberately frame-misaligned chunks
            out.extend(deframer.feed(stream[i : i + 7]))
        assert out == frames

    def test_resyncs_after_garbage(self):
        frame = make_move(seq=9)
        stream = b"\xde\xad\xbe\xef" + P.encode_frame(frame)
        deframer = P.Deframer()
        out = deframer.feed(stream)
        assert out == [frame]


_i16 = st.integers(min_value=-(2**15), max_value=2**15 - 1)
_u32 = st.integers(min_value=0, max_value=2**32 - 1)
_u64 = st.integers(min_value=0, max_value=2**64 - 1)


@st.composite
def valid_frames(draw):
    ftype = draw(st.sampled_from(list(P.FrameType)))
    seq = draw(_u32)
    ts = draw(_u64)
    flags = draw(st.integers(min_value=0, max_value=255))
    if ftype is P.FrameType.MOVE:
        payload = P.PosePayload(*[draw(_i16) for _ in range(6)])
    elif ftype is P.FrameType.FEEDBACK:
        payload = P.FeedbackPayload(
            draw(_u32), draw(st.sampled_from(list(P.FeedbackStatus))), draw(_u32)
        )
    elif ftype is P.FrameType.QUERY:
        payload = P.QueryPayload(draw(st.sampled_from(list(P.QueryOp))))
    else:
        payload = None
    return P.Frame(ftype, seq, ts, payload, flags)


@given(valid_frames())
@settings(max_examples=300, deadline=None)
def test_property_decode_encode_identity(frame):
    assert P.decode_frame(P.encode_frame(frame)) == frame


@given(st.binary(min_size=0, max_size=64))
@settings(max_examples=300, deadline=None)
def test_property_random_noise_never_panics(data):
    try:
        P.decode_frame(data)
    except P.DecodeError:
        pass  # typed rejection is the contract


@given(valid_frames(), st.integers(min_value=0, max_value=31), st.integers(min_value=1, max_value=255))
@settings(max_examples=300, deadline=None)
def test_property_single_byte_corruption_detected(frame, pos, mask):
    # CRC-32 detects every burst error of <= 32 bits, so any single flipped
    # byte must be rejected
    data = bytearray(P.encode_frame(frame))
    data[pos] ^= mask
    with pytest.raises(P.DecodeError):
        P.decode_frame(bytes(data))
