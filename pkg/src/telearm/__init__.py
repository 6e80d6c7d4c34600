"""telearm: a desk-scale teleoperation testbed.

A haptic-style command source drives a simulated 6-axis arm across an
emulated multi-profile network through a measuring gateway.  Everything runs
on a deterministic virtual clock by default; a live mode maps the same
components onto real sockets.
"""

from . import arm, gateway, harness, netem, protocol, stylus

__all__ = ["arm", "gateway", "harness", "netem", "protocol", "stylus"]
__version__ = "0.1.0"
