"""Reproduce the latency comparison: ethernet vs wifi vs O-RAN.

10,000 probe round trips per link; one-way latency estimated as half the
round-trip time.  The O-RAN profile carries two intentional line-of-sight
blockage windows that show up as spikes in the series.
"""

from telearm import harness

report = harness.run_scenario(harness.builtin_scenarios()["latency-compare"], "/tmp/demo_latency")

print(f"{'link':10s} {'probes':>7s} {'mean':>9s} {'p50':>9s} {'p99':>9s} {'jitter':>9s} {'spikes':>6s}")
for name in ("ethernet", "wifi", "oran"):
    s = report["links"][name]
    print(
        f"{name:10s} {s['count']:7d} {s['mean_us']/1000:8.2f}m {s['p50_us']/1000:8.2f}m "
        f"{s['p99_us']/1000:8.2f}m {s['jitter_p99_p50_us']/1000:8.2f}m {s['spike_count']:6d}"
    )

oran = report["links"]["oran"]
print("\noran blockage spike intervals (probe indices):", oran["spike_intervals"])
print("raw per-probe series: /tmp/demo_latency/probes_oran.csv")
print("aggregates:           /tmp/demo_latency/report.json")
