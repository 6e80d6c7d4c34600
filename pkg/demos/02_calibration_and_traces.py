"""Workspace alignment and synthetic stylus traces.

The stylus and the arm live in different coordinate frames; a similarity
transform fitted from a few touched reference points aligns them.  Button
state gates the conversion of samples into MOVE commands.
"""

import numpy as np

from telearm import stylus

# Step 1: pretend the operator touched four reference points with the stylus
# while the true arm-frame positions are known
rng = np.random.default_rng(1)
true_rot = stylus.CalibrationTransform.identity().rotation  # start from identity
angle = np.deg2rad(30.0)
true_rot = np.array(
    [[np.cos(angle), -np.sin(angle), 0.0], [np.sin(angle), np.cos(angle), 0.0], [0.0, 0.0, 1.0]]
)
true = stylus.CalibrationTransform(true_rot, np.array([250.0, -40.0, 380.0]), 1.25)

stylus_points = rng.uniform(-80, 80, (4, 3))
arm_points = true.apply(stylus_points) + rng.normal(0, 0.3, (4, 3))  # 0.3 mm touch noise

cal, rms = stylus.calibrate_workspace(stylus_points, arm_points)
print(f"fitted scale {cal.scale:.4f} (true 1.25), residual {rms:.3f} mm")
print("fitted translation:", np.round(cal.translation, 2))

# Step 2: generate a deterministic circle trace (two revolutions, 200 Hz)
trace = stylus.generate_trace(
    "circle", {"radius_mm": 50.0, "revolutions": 2.0}, rate_hz=200.0, duration_s=4.0
)
print(f"trace: {len(trace.samples)} samples, closes on itself:",
      bool(np.allclose(trace.samples[0].position, trace.samples[-1].position)))

# Step 3: button gating - only pressed samples become commands
for i, sample in enumerate(trace.samples):
    sample.button_down = i % 2 == 0  # press on alternating samples
frames = stylus.map_trace(trace, cal)
print(f"button held for {sum(s.button_down for s in trace.samples)} samples "
      f"-> {len(frames)} MOVE commands")

# Step 4: traces persist as plain CSV
stylus.save_trace(trace, "/tmp/demo_trace.csv")
loaded = stylus.load_trace("/tmp/demo_trace.csv")
print("saved + loaded:", len(loaded.samples), "samples at", round(loaded.rate_hz), "Hz")
