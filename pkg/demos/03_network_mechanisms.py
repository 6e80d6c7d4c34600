"""The transport-layer mechanisms, one by one.

Parametric link profiles, URLLC/eMBB slicing, TSN-style hold-and-forward
jitter bounding, and threshold-driven adaptive modulation.
"""

import numpy as np

from telearm import netem, protocol
from telearm.netem import (
    EventQueue, InFlightPacket, ModulationOrder, ModulationState, SliceClass,
)

MS = 1_000_000

# Step 1: the three built-in link classes (losses come back as None)
for name in ("ethernet", "wifi", "oran"):
    profile = netem.default_profile(name)
    link = netem.Link(profile, seed=0)
    transits = [link.transit(i * MS) for i in range(2000)]
    delays = [d - i * MS for i, d in enumerate(transits) if d is not None]
    print(f"{name:9s} mean {np.mean(delays)/MS:6.2f} ms   p99 {np.percentile(delays, 99)/MS:6.2f} ms"
          f"   lost {link.lost}")

# Step 2: slicing - haptic/control ride URLLC, video rides eMBB, and URLLC
# is never queued behind eMBB
print("\nslices:", {m: netem.classify_slice("s", m).name for m in ("haptic", "control", "video")})
queue = EventQueue()
for seq, modality in enumerate(("video", "haptic", "video", "control")):
    slice_ = netem.classify_slice(f"st-{seq}", modality)
    frame = protocol.encode_frame(protocol.probe_frame(seq, 0))
    queue.push(InFlightPacket(frame, 0, 5 * MS, slice_, modality, seq), 5 * MS)
print("delivery order at t=5ms:", [p.stream_id for p in queue.step(5 * MS)])

# Step 3: hold-and-forward turns variable delay into constant delay when the
# budget covers the worst realized delay; tighter budgets flag late packets
link = netem.Link(netem.default_profile("oran"), seed=42)
arrivals = []
for i in range(1000):
    ingress = i * MS
    delivery = link.transit(ingress)
    if delivery is not None:
        arrivals.append((i, ingress, delivery))
max_delay = max(d - t for _, t, d in arrivals)

def egress_spread(budget_ns):
    releases, misses = [], 0
    for seq, ingress, delivery in arrivals:
        pkt = InFlightPacket(
            protocol.encode_frame(protocol.probe_frame(seq, ingress)),
            ingress, delivery, SliceClass.URLLC, "control", seq,
        )
        release, missed = netem.hold_and_forward(pkt, budget_ns)
        releases.append(release - ingress)
        misses += missed
    return (max(releases) - min(releases)) / MS, misses

spread, misses = egress_spread(max_delay)
print(f"\nhold-and-forward, budget == max delay ({max_delay/MS:.2f} ms): "
      f"egress spread {spread:.3f} ms, {misses} deadline misses")
spread, misses = egress_spread(8 * MS)
print(f"hold-and-forward, tight 8 ms budget: egress spread {spread:.3f} ms, "
      f"{misses} late packets flagged deadline-missed")

# Step 4: adaptive modulation walks down under bad channel quality and back up
state = ModulationState(ModulationOrder.QAM256)
for quality in (0.9, 0.2, 0.1, 0.25, 0.5, 0.8, 0.95):
    state = netem.adapt_modulation(state, quality)
    print(f"quality {quality:.2f} -> {state.order.name:7s} "
          f"err={state.error_prob:.0e} throughput x{state.throughput:.0f}")
