"""Micro-buffering haptic packets so they land with their video partners.

Humans tolerate ~100 ms of visual delay but only ~10 ms of tactile delay.
The scheduler holds the earlier packet of each haptic/video pair until both
can release within the skew budget, but never holds a packet past its own
modality deadline.
"""

from telearm.gateway import ModalPacket, SkewPolicy, schedule_skew

MS = 1_000_000
policy = SkewPolicy()  # 10 ms skew budget, 10 ms haptic / 100 ms visual deadline

print("case 1: haptic arrives 8 ms early -> buffered into alignment")
rel = schedule_skew(
    [ModalPacket("haptic", 0, 2 * MS, 0)], [ModalPacket("video", 0, 10 * MS, 0)], policy
)
for r in rel:
    print(f"  {r.packet.stream:6s} arrival {r.packet.arrival_ns/MS:5.1f} ms "
          f"release {r.release_ns/MS:5.1f} ms  buffered {r.buffered_ns/MS:4.1f} ms  {r.flag or 'ok'}")

print("case 2: video 60 ms late -> aligning would bust the 10 ms haptic deadline")
rel = schedule_skew(
    [ModalPacket("haptic", 0, 0, 1)], [ModalPacket("video", 0, 60 * MS, 1)], policy
)
for r in rel:
    print(f"  {r.packet.stream:6s} arrival {r.packet.arrival_ns/MS:5.1f} ms "
          f"release {r.release_ns/MS:5.1f} ms  buffered {r.buffered_ns/MS:4.1f} ms  {r.flag or 'ok'}")

print("case 3: a packet with no partner inside the 50 ms pairing window")
rel = schedule_skew(
    [ModalPacket("haptic", 0, 1 * MS, 2)], [ModalPacket("video", 500 * MS, 505 * MS, 3)], policy
)
for r in rel:
    print(f"  {r.packet.stream:6s} release {r.release_ns/MS:6.1f} ms  {r.flag or 'ok'}")
