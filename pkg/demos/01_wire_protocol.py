"""Tour of the 32-byte wire framing.

Every frame type fits one fixed-size little-endian layout, so the latency
probes and the motion commands share the same tiny packet shape.
"""

from telearm import protocol as P

# Step 1: a motion command, built from real units (mm / degrees)
move = P.move_frame(seq=1, timestamp_ns=0, x_mm=100.0, y_mm=-25.5, z_mm=400.0,
                    roll_deg=0.0, pitch_deg=-90.0, yaw_deg=180.0)
data = P.encode_frame(move)
print(f"MOVE frame: {len(data)} bytes")
print(" ", data.hex(" "))

# Step 2: decode is the exact inverse
back = P.decode_frame(data)
print("round trip equal:", back == move)
print("decoded pose    :", back.payload.pose())

# Step 3: the CRC rejects any single corrupted byte
corrupt = bytearray(data)
corrupt[20] ^= 0x01
try:
    P.decode_frame(bytes(corrupt))
except P.BadChecksum as exc:
    print("one flipped bit ->", type(exc).__name__, "-", exc)

# Step 4: probes and their echoes reuse the same layout; an echo preserves
# the probe's seq and send timestamp so RTT needs no clock sync
probe = P.probe_frame(seq=7, timestamp_ns=123_456)
echo = P.probe_echo(probe)
print("echo keeps (seq, timestamp):", (echo.seq, echo.timestamp_ns))

# Step 5: frames self-delimit on a byte stream
stream = P.encode_frame(move) + P.encode_frame(probe)
deframer = P.Deframer()
frames = deframer.feed(stream[:40])  # deliberately split mid-frame
frames += deframer.feed(stream[40:])
print("stream yielded:", [f.frame_type.name for f in frames])
