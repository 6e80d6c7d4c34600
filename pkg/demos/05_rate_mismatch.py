"""The lag anecdote: two commanded rotations, half a rotation executed.

Commands stream at 200 Hz while the arm executes at 50 Hz.  A naive queue
covers a quarter of the path inside the input window; discarding stale
commands keeps up with the newest target; the precise path executes every
waypoint and simply finishes late.
"""

from telearm import harness

scenarios = harness.builtin_scenarios()
rows = []
for name in ("rate-mismatch", "rate-mismatch-downsample",
             "rate-mismatch-predictive", "rate-mismatch-precise"):
    report = harness.run_scenario(scenarios[name], f"/tmp/demo_rate/{name}")
    fid = report["fidelity"]
    arm = report["arm"]
    rows.append(
        (
            name.removeprefix("rate-mismatch-") if name != "rate-mismatch" else "naive",
            fid.get("completion_ratio_window"),
            fid["completion_ratio"],
            fid["rms_mm"],
            arm["executed"],
            arm["discarded"],
        )
    )

print(f"{'strategy':12s} {'in-window':>10s} {'final':>7s} {'rms mm':>8s} {'executed':>9s} {'dropped':>8s}")
for name, window, final, rms, executed, discarded in rows:
    window_s = f"{window:.3f}" if window is not None else "n/a"
    print(f"{name:12s} {window_s:>10s} {final:7.3f} {rms:8.3f} {executed:9d} {discarded:8d}")

print("\nnaive in-window completion ~0.25: two commanded revolutions, half executed.")
print("per-tick joint trail: /tmp/demo_rate/rate-mismatch/arm_telemetry.csv")
