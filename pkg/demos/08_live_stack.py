"""Run the components on real loopback sockets.

Default: a self-contained loopback measurement (operator + gateway + arm in
one process) printing the measured gateway forwarding overhead.

With --serve: keeps a full stack running and exposes the /telemetry
websocket for the browser cockpit (see frontend/):

    python demos/08_live_stack.py --serve
    # then, in frontend/:  npm install && npm run dev
"""

import argparse
import asyncio
import json

from telearm.live import run_live_loopback, serve_cockpit


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--serve", action="store_true", help="serve the cockpit telemetry stack")
    parser.add_argument("--port", type=int, default=8765)
    args = parser.parse_args()
    if args.serve:
        asyncio.run(serve_cockpit(args.port))
        return
    stats = run_live_loopback(duration_s=1.0, probe_count=200)
    print(json.dumps(stats, indent=2, sort_keys=True))
    mean = stats["overhead_mean_us"]
    print(f"\ngateway forwarding overhead: {mean:.1f} us mean "
          f"({'below' if mean < 2000 else 'ABOVE'} the 2 ms figure; hardware-dependent)")


if __name__ == "__main__":
    main()
