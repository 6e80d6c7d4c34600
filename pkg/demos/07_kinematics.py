"""The simulated arm: DH chain, damped-least-squares IK, alarms, feedback.

The arm accepts Cartesian targets, solves joints itself, and latches an
alarm the moment a target exceeds its feasible range.
"""

import numpy as np

from telearm import protocol
from telearm.arm import ArmSim, default_model, forward_kinematics, inverse_kinematics
from telearm.protocol import QueryOp

model = default_model()
print("DH table (a_mm, alpha_rad, d_mm, offset_rad):")
print(model.dh_table)
print("total reach:", model.max_reach_mm(), "mm")

home = forward_kinematics(model, np.zeros(6))
print("home pose:", np.round(home.position_mm, 1), "mm, rpy", np.round(home.rpy_deg, 1), "deg")

# IK round trip: pick a pose the arm can reach, solve joints, verify with FK
rng = np.random.default_rng(3)
q_true = rng.uniform(model.joint_limits[:, 0], model.joint_limits[:, 1])
target = forward_kinematics(model, q_true)
q_solved = inverse_kinematics(model, target, np.zeros(6))
err = np.linalg.norm(forward_kinematics(model, q_solved).position_mm - target.position_mm)
print(f"IK round trip: {err:.2e} mm position error "
      f"(different joint branch is fine: {np.round(q_solved, 2)})")

# The command/feedback loop with an alarm in the middle
arm = ArmSim(model)
tick = 0
def show(fb):
    print(f"  -> {fb.payload.status.name:12s} detail={fb.payload.detail}")

print("\nenqueue a reachable MOVE:")
show(arm.enqueue_command(protocol.move_frame(1, 0, 350.0, 0.0, 400.0, 0.0, -90.0, 180.0), tick))
for k in range(40):
    for fb in arm.execute_tick(k * 20_000_000):
        show(fb)

print("enqueue a MOVE beyond total reach:")
show(arm.enqueue_command(protocol.move_frame(2, 0, 2000.0, 0.0, 0.0, 0.0, 0.0, 0.0), tick))
print("another (reachable) MOVE while alarmed:")
show(arm.enqueue_command(protocol.move_frame(3, 0, 350.0, 0.0, 400.0, 0.0, -90.0, 180.0), tick))
print("alarm poll, then clear, then retry:")
show(arm.enqueue_command(protocol.query_frame(4, 0), tick))
show(arm.enqueue_command(protocol.query_frame(5, 0, QueryOp.CLEAR_ALARM), tick))
show(arm.enqueue_command(protocol.move_frame(6, 0, 350.0, 0.0, 400.0, 0.0, -90.0, 180.0), tick))
