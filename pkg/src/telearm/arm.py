"""Simulated 6-axis arm: kinematics, command queue, and execution strategies.

The arm accepts Cartesian MOVE targets over the wire, solves joint angles
internally (damped least squares over a Denavit-Hartenberg chain), enforces
joint and speed limits at every control tick, latches an alarm on infeasible
targets, and answers every command with an execution-status feedback frame.

Telemetry record per tick (CSV): ``t_ns,q1..q6,x,y,z,alarm,queue_depth``.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import protocol
from .protocol import FeedbackStatus, Frame, FrameType, QueryOp

ALARM_NONE = 0
ALARM_OUT_OF_REACH = 1
ALARM_IK_FAILED = 2


class Unreachable(Exception):
    """Target pose outside the kinematically feasible range."""


@dataclass
class ArmModel:
    """Kinematic description: standard DH rows (a_mm, alpha_rad, d_mm, offset_rad)."""

    dh_table: np.ndarray  # (6, 4)
    joint_limits: np.ndarray  # (6, 2) rad, min < max
    max_joint_speed_rad_s: np.ndarray  # (6,)
    control_rate_hz: float = 50.0

    def __post_init__(self) -> None:
        self.dh_table = np.asarray(self.dh_table, dtype=float)
        self.joint_limits = np.asarray(self.joint_limits, dtype=float)
        self.max_joint_speed_rad_s = np.asarray(self.max_joint_speed_rad_s, dtype=float)
        if self.dh_table.shape != (6, 4):
            raise ValueError("dh_table must be (6, 4)")
        if np.any(self.joint_limits[:, 0] >= self.joint_limits[:, 1]):
            raise ValueError("joint limits need min < max")
        if np.any(self.max_joint_speed_rad_s <= 0):
            raise ValueError("joint speeds must be positive")
        if self.control_rate_hz <= 0:
            raise ValueError("control rate must be positive")

    def max_reach_mm(self) -> float:
        """Upper bound on end-effector distance from the base origin."""
        return float(np.abs(self.dh_table[:, 0]).sum() + np.abs(self.dh_table[:, 2]).sum())


def default_model() -> ArmModel:
    """Generic anthropomorphic 6R arm with a spherical wrist (reach ~1 m)."""
    dh = np.array(
        [
            # a_mm   alpha        d_mm  theta_offset
            [0.0, -np.pi / 2, 290.0, 0.0],
            [270.0, 0.0, 0.0, -np.pi / 2],
            [70.0, -np.pi / 2, 0.0, 0.0],
            [0.0, np.pi / 2, 302.0, 0.0],
            [0.0, -np.pi / 2, 0.0, 0.0],
            [0.0, 0.0, 72.0, 0.0],
        ]
    )
    deg = np.pi / 180.0
    limits = np.array(
        [
            [-165 * deg, 165 * deg],
            [-110 * deg, 110 * deg],
            [-140 * deg, 140 * deg],
            [-170 * deg, 170 * deg],
            [-120 * deg, 120 * deg],
            [-170 * deg, 170 * deg],
        ]
    )
    speeds = np.array([np.pi, np.pi, np.pi, 2 * np.pi, 2 * np.pi, 2 * np.pi])
    return ArmModel(dh, limits, speeds, control_rate_hz=50.0)


def link_transform(a_mm: float, alpha: float, d_mm: float, theta: float) -> np.ndarray:
    """Standard DH link transform Rz(theta) Tz(d) Tx(a) Rx(alpha)."""
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    t = np.empty((4, 4))
    t[0, 0] = ct
    t[0, 1] = -st * ca
    t[0, 2] = st * sa
    t[0, 3] = a_mm * ct
    t[1, 0] = st
    t[1, 1] = ct * ca
    t[1, 2] = -ct * sa
    t[1, 3] = a_mm * st
    t[2, 0] = 0.0
    t[2, 1] = sa
    t[2, 2] = ca
    t[2, 3] = d_mm
    t[3, :3] = 0.0
    t[3, 3] = 1.0
    return t


def fk_chain(model: ArmModel, joints: np.ndarray) -> np.ndarray:
    """Cumulative base->frame_i transforms, shape (6, 4, 4)."""
    chain = np.empty((6, 4, 4))
    t = np.eye(4)
    dh = model.dh_table
    for i in range(6):
        t = t @ link_transform(dh[i, 0], dh[i, 1], dh[i, 2], float(joints[i]) + dh[i, 3])
        chain[i] = t
    return chain


def rpy_to_matrix(rpy_deg: np.ndarray) -> np.ndarray:
    """R = Rz(yaw) @ Ry(pitch) @ Rx(roll), angles in degrees."""
    roll, pitch, yaw = np.deg2rad(np.asarray(rpy_deg, dtype=float))
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1.0]])
    ry = np.array([[cp, 0, sp], [0, 1.0, 0], [-sp, 0, cp]])
    rx = np.array([[1.0, 0, 0], [0, cr, -sr], [0, sr, cr]])
    return rz @ ry @ rx


def matrix_to_rpy(r: np.ndarray) -> np.ndarray:
    """Inverse of rpy_to_matrix, degrees; roll fixed to 0 at the pitch singularity."""
    sp = -float(r[2, 0])
    sp = max(-1.0, min(1.0, sp))
    pitch = np.arcsin(sp)
    if abs(sp) > 1.0 - 1e-12:
        roll = 0.0
        yaw = np.arctan2(-r[0, 1], r[1, 1])
    else:
        roll = np.arctan2(r[2, 1], r[2, 2])
        yaw = np.arctan2(r[1, 0], r[0, 0])
    return np.rad2deg(np.array([roll, pitch, yaw]))


@dataclass
class EePose:
    position_mm: np.ndarray  # (3,)
    rpy_deg: np.ndarray  # (3,)

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(self.position_mm) + tuple(self.rpy_deg)

    def rotation(self) -> np.ndarray:
        return rpy_to_matrix(self.rpy_deg)


def forward_kinematics(model: ArmModel, joints: np.ndarray) -> EePose:
    """End-effector pose from the product of the six DH link transforms."""
    t = fk_chain(model, joints)[-1]
    return EePose(t[:3, 3].copy(), matrix_to_rpy(t[:3, :3]))


def jacobian_from_chain(chain: np.ndarray) -> np.ndarray:
    """Geometric Jacobian (6x6): rows = [v_mm; omega], columns = joints."""
    p_e = chain[5, :3, 3]
    axes = np.empty((6, 3))
    origins = np.empty((6, 3))
    axes[0] = (0.0, 0.0, 1.0)
    origins[0] = 0.0
    axes[1:] = chain[:5, :3, 2]
    origins[1:] = chain[:5, :3, 3]
    jac = np.empty((6, 6))
    jac[:3] = np.cross(axes, p_e - origins).T
    jac[3:] = axes.T
    return jac


def jacobian(model: ArmModel, joints: np.ndarray) -> np.ndarray:
    return jacobian_from_chain(fk_chain(model, joints))


def rotation_vector(r: np.ndarray) -> np.ndarray:
    """Axis-angle log map of a rotation matrix (radians)."""
    v = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    cos_a = max(-1.0, min(1.0, (r[0, 0] + r[1, 1] + r[2, 2] - 1.0) / 2.0))
    sin_a = 0.5 * math.sqrt(float(v @ v))
    angle = math.atan2(sin_a, cos_a)
    if angle < 1e-12:
        return np.zeros(3)
    if sin_a > 1e-7:
        return (angle / (2.0 * sin_a)) * v
    # angle near pi: (R + I)/2 approaches the outer product of the axis
    b = 0.5 * (r + np.eye(3))
    u = np.sqrt(np.clip(np.diag(b), 0.0, None))
    k = int(np.argmax(u))
    if u[k] > 0:
        u = b[:, k] / u[k]
        u = u / np.linalg.norm(u)
    return angle * u


def _pose_error(target_pos: np.ndarray, target_rot: np.ndarray, t: np.ndarray) -> np.ndarray:
    err = np.empty(6)
    err[:3] = target_pos - t[:3, 3]
    err[3:] = rotation_vector(target_rot @ t[:3, :3].T)
    return err


def inverse_kinematics(
    model: ArmModel,
    target_pose: EePose,
    seed_joints: np.ndarray,
    pos_tol_mm: float = 1e-3,
    rot_tol_rad: float = 1e-4,
    max_iters: int = 200,
    restarts: int = 60,
) -> np.ndarray:
    """Damped least-squares IK from the seed posture.

    Succeeds when position error < pos_tol_mm and orientation error
    < rot_tol_rad with the solution inside joint limits; raises Unreachable
    otherwise.  Damping doubles adaptively when a step fails to reduce the
    error (robust near singularities).  Deterministic: restart postures come
    from a fixed-seed generator.
    """
    target_pos = np.asarray(target_pose.position_mm, dtype=float)
    if np.linalg.norm(target_pos) > model.max_reach_mm():
        raise Unreachable("target beyond total reach")
    target_rot = target_pose.rotation()
    lo, hi = model.joint_limits[:, 0], model.joint_limits[:, 1]
    rng = np.random.default_rng(0)
    lam0 = 0.01
    # orientation error in rad weighted to workspace-scale mm so both error
    # components converge together
    weights = np.array([1.0, 1.0, 1.0, 250.0, 250.0, 250.0])
    eye6 = np.eye(6)
    seed = np.clip(np.asarray(seed_joints, dtype=float), lo, hi)

    def converged(err: np.ndarray) -> bool:
        return (
            float(np.linalg.norm(err[:3])) < pos_tol_mm
            and float(np.linalg.norm(err[3:])) < rot_tol_rad
        )

    def into_limits(q: np.ndarray) -> np.ndarray | None:
        # a joint shifted by 2*pi reaches the identical pose
        q = q.copy()
        for i in range(6):
            while q[i] < lo[i] and q[i] + 2 * np.pi <= hi[i]:
                q[i] += 2 * np.pi
            while q[i] > hi[i] and q[i] - 2 * np.pi >= lo[i]:
                q[i] -= 2 * np.pi
        if np.all(q >= lo) and np.all(q <= hi):
            return q
        return None

    for attempt in range(restarts + 1):
        q = (seed if attempt == 0 else rng.uniform(lo, hi)).copy()
        chain = fk_chain(model, q)
        err = _pose_error(target_pos, target_rot, chain[5])
        lam = lam0
        for _ in range(max_iters):
            if converged(err):
                break
            jw = weights[:, None] * jacobian_from_chain(chain)
            ew = weights * err
            try:
                dq = jw.T @ np.linalg.solve(jw @ jw.T + lam * lam * eye6, ew)
            except np.linalg.LinAlgError:
                lam *= 2.0
                continue
            q_new = q + dq
            chain_new = fk_chain(model, q_new)
            err_new = _pose_error(target_pos, target_rot, chain_new[5])
            if float(np.linalg.norm(weights * err_new)) < float(np.linalg.norm(ew)):
                q, err, chain = q_new, err_new, chain_new
                lam = max(lam0, lam / 2.0)
            else:
                lam *= 2.0
                if lam > 1e7:
                    break
        if converged(err):
            # the converged branch may sit outside the limits while an
            # equivalent one (2*pi shifts, spherical-wrist flip) fits
            for candidate in _equivalent_branches(q):
                solution = into_limits(candidate)
                if solution is None:
                    continue
                if converged(_pose_error(target_pos, target_rot, fk_chain(model, solution)[5])):
                    return solution
    raise Unreachable("iteration budget exhausted without convergence")


def _equivalent_branches(q: np.ndarray):
    """The solution itself plus wrist-flipped variants reaching the same pose."""
    yield q
    for s4 in (np.pi, -np.pi):
        for s6 in (np.pi, -np.pi):
            flipped = q.copy()
            flipped[3] += s4
            flipped[4] = -flipped[4]
            flipped[5] += s6
            yield flipped


class StrategyKind(enum.Enum):
    NAIVE_QUEUE = "naive_queue"
    DOWNSAMPLE = "downsample"
    PREDICTIVE = "predictive"
    PRECISE_PATH = "precise_path"


@dataclass
class ExecutionStrategy:
    kind: StrategyKind = StrategyKind.NAIVE_QUEUE
    keep_ratio: float = 1.0  # DOWNSAMPLE only
    extrapolate: bool = True  # PREDICTIVE only
    velocity_window: int = 5  # PREDICTIVE: targets used for the velocity estimate

    def __post_init__(self) -> None:
        if not 0.0 < self.keep_ratio <= 1.0:
            raise ValueError("keep_ratio must lie in (0, 1]")


@dataclass
class PendingCommand:
    seq: int
    pose: EePose
    t_sent_ns: int


@dataclass
class ArmState:
    joints: np.ndarray
    ee_pose: EePose
    alarm: bool = False
    alarm_code: int = ALARM_NONE
    pending: deque[PendingCommand] = field(default_factory=deque)
    received_count: int = 0
    executed_count: int = 0
    rejected_count: int = 0
    discarded_count: int = 0

    def queue_depth(self) -> int:
        return len(self.pending)


@dataclass
class ExecutedWaypoint:
    seq: int
    pose: EePose
    t_done_ns: int


class ArmSim:
    """Single logical control loop: wire ingress queue drained by ticks."""

    def __init__(
        self,
        model: ArmModel | None = None,
        strategy: ExecutionStrategy | None = None,
        home_joints: np.ndarray | None = None,
    ):
        self.model = model if model is not None else default_model()
        self.strategy = strategy if strategy is not None else ExecutionStrategy()
        joints = (
            np.asarray(home_joints, dtype=float)
            if home_joints is not None
            else np.zeros(6)
        )
        self.state = ArmState(joints, forward_kinematics(self.model, joints))
        self.executed_waypoints: list[ExecutedWaypoint] = []
        self._feedback_seq = 0
        self._ingress_index = 0  # MOVE arrival counter for the downsample filter
        self._active: PendingCommand | None = None
        self._active_target_q: np.ndarray | None = None
        self._recent_targets: deque[tuple[int, np.ndarray]] = deque(maxlen=16)
        self._fresh_command = False

    # -- ingress ---------------------------------------------------------

    def _feedback(
        self, now_ns: int, ref_seq: int, status: FeedbackStatus, detail: int = 0
    ) -> Frame:
        self._feedback_seq = protocol.next_seq(self._feedback_seq)
        flags = protocol.FLAG_ALARM if self.state.alarm else 0
        return protocol.feedback_frame(self._feedback_seq, now_ns, ref_seq, status, detail, flags)

    def _query_result(self, now_ns: int, ref_seq: int) -> Frame:
        depth = min(self.state.queue_depth() + (1 if self._active else 0), 0xFFFFFF)
        detail = (depth << 8) | (self.state.alarm_code << 1) | int(self.state.alarm)
        return self._feedback(now_ns, ref_seq, FeedbackStatus.QUERY_RESULT, detail)

    def enqueue_command(self, frame: Frame, now_ns: int) -> Frame | None:
        """Wire ingress.  Returns the immediate feedback frame.

        MOVE: queued (QUEUED) or alarm (ALARM); a downsample-discarded MOVE
        returns no feedback.  QUERY: immediate QUERY_RESULT, never queued;
        the CLEAR_ALARM op resets a latched alarm.
        """
        if frame.frame_type is FrameType.QUERY:
            if frame.payload.op is QueryOp.CLEAR_ALARM:
                self.state.alarm = False
                self.state.alarm_code = ALARM_NONE
            return self._query_result(now_ns, frame.seq)
        if frame.frame_type is not FrameType.MOVE:
            raise protocol.EncodeError(f"arm cannot ingest {frame.frame_type.name} frames")

        self.state.received_count += 1
        if self.state.alarm:
            self.state.rejected_count += 1
            return self._feedback(now_ns, frame.seq, FeedbackStatus.ALARM, self.state.alarm_code)

        pose = EePose(
            np.array(frame.payload.position_mm()), np.array(frame.payload.angles_deg())
        )
        if np.linalg.norm(pose.position_mm) > self.model.max_reach_mm():
            self.state.alarm = True
            self.state.alarm_code = ALARM_OUT_OF_REACH
            self.state.rejected_count += 1
            return self._feedback(now_ns, frame.seq, FeedbackStatus.ALARM, ALARM_OUT_OF_REACH)

        if self.strategy.kind is StrategyKind.DOWNSAMPLE:
            stride = int(np.ceil(1.0 / self.strategy.keep_ratio))
            keep = self._ingress_index % stride == 0
            self._ingress_index += 1
            if not keep:
                self.state.discarded_count += 1
                return None
        self.state.pending.append(PendingCommand(frame.seq, pose, frame.timestamp_ns))
        self._fresh_command = True
        return self._feedback(now_ns, frame.seq, FeedbackStatus.QUEUED)

    # -- execution -------------------------------------------------------

    def _alarm_now(self, now_ns: int, cmd: PendingCommand, code: int) -> Frame:
        if self._active is not None and self._active is not cmd:
            self.state.discarded_count += 1  # motion halted mid-command
        self.state.alarm = True
        self.state.alarm_code = code
        self.state.rejected_count += 1
        self._active = None
        self._active_target_q = None
        return self._feedback(now_ns, cmd.seq, FeedbackStatus.ALARM, code)

    def _solve(self, cmd: PendingCommand) -> np.ndarray | None:
        try:
            return inverse_kinematics(self.model, cmd.pose, self.state.joints)
        except Unreachable:
            return None

    def _step_towards(self, target_q: np.ndarray, dt: float) -> bool:
        """Clamped joint-space step; True when the target is reached exactly."""
        budget = self.model.max_joint_speed_rad_s * dt
        delta = target_q - self.state.joints
        step = np.clip(delta, -budget, budget)
        self.state.joints = np.clip(
            self.state.joints + step,
            self.model.joint_limits[:, 0],
            self.model.joint_limits[:, 1],
        )
        return bool(np.all(np.abs(target_q - self.state.joints) < 1e-12))

    def _retire(self, now_ns: int, cmd: PendingCommand) -> Frame:
        self.state.executed_count += 1
        self.executed_waypoints.append(ExecutedWaypoint(cmd.seq, cmd.pose, now_ns))
        self._active = None
        self._active_target_q = None
        return self._feedback(now_ns, cmd.seq, FeedbackStatus.EXECUTED)

    def _predictive_target(self, cmd: PendingCommand) -> tuple[EePose, bool]:
        """Constant-velocity forecast one command interval ahead of the newest target."""
        hist = list(self._recent_targets)[-self.strategy.velocity_window :]
        if not self.strategy.extrapolate or len(hist) < 2:
            return cmd.pose, False
        t0, p0 = hist[0]
        t1, p1 = hist[-1]
        span_ns = t1 - t0
        if span_ns <= 0:
            return cmd.pose, False
        vel = (p1 - p0) / span_ns  # mm per ns
        interval_ns = span_ns / (len(hist) - 1)
        return EePose(cmd.pose.position_mm + vel * interval_ns, cmd.pose.rpy_deg), True

    def execute_tick(self, now_ns: int, dt: float | None = None) -> list[Frame]:
        """One control tick; returns the feedback frames it emitted."""
        if dt is None:
            dt = 1.0 / self.model.control_rate_hz
        if dt <= 0:
            raise ValueError("dt must be positive")
        feedbacks: list[Frame] = []
        st = self.state
        if st.alarm:
            st.ee_pose = forward_kinematics(self.model, st.joints)
            return feedbacks

        kind = self.strategy.kind
        if kind in (StrategyKind.NAIVE_QUEUE, StrategyKind.DOWNSAMPLE):
            # pop one command per tick; a still-unreached target is retired
            # the moment its successor pops (the queue, not the motion, paces it)
            if st.pending:
                cmd = st.pending.popleft()
                target_q = self._solve(cmd)
                if target_q is None:
                    feedbacks.append(self._alarm_now(now_ns, cmd, ALARM_IK_FAILED))
                else:
                    if self._active is not None:
                        feedbacks.append(self._retire(now_ns, self._active))
                    self._active = cmd
                    self._active_target_q = target_q
            if self._active is not None and not st.alarm:
                if self._step_towards(self._active_target_q, dt):
                    feedbacks.append(self._retire(now_ns, self._active))
        elif kind is StrategyKind.PRECISE_PATH:
            # never discard; stay on a waypoint until reached, <= 1 pop per tick
            if self._active is None and st.pending:
                cmd = st.pending.popleft()
                target_q = self._solve(cmd)
                if target_q is None:
                    feedbacks.append(self._alarm_now(now_ns, cmd, ALARM_IK_FAILED))
                else:
                    self._active = cmd
                    self._active_target_q = target_q
            if self._active is not None:
                if self._step_towards(self._active_target_q, dt):
                    feedbacks.append(self._retire(now_ns, self._active))
        elif kind is StrategyKind.PREDICTIVE:
            # keep only the newest queued command; stale ones are discarded
            if st.pending:
                while len(st.pending) > 1:
                    st.pending.popleft()
                    st.discarded_count += 1
                newest = st.pending.popleft()
                if self._active is not None:
                    st.discarded_count += 1  # superseded before being reached
                self._active = newest
                self._recent_targets.append((newest.t_sent_ns, newest.pose.position_mm.copy()))
            if self._active is not None:
                cmd = self._active
                forecasting = self._fresh_command
                drive_pose, forecasting = (
                    self._predictive_target(cmd) if forecasting else (cmd.pose, False)
                )
                target_q = self._solve(
                    PendingCommand(cmd.seq, drive_pose, cmd.t_sent_ns)
                )
                if target_q is None and forecasting:
                    drive_pose, forecasting = cmd.pose, False  # forecast overshot reach
                    target_q = self._solve(cmd)
                if target_q is None:
                    feedbacks.append(self._alarm_now(now_ns, cmd, ALARM_IK_FAILED))
                else:
                    reached = self._step_towards(target_q, dt)
                    if reached and not forecasting:
                        feedbacks.append(self._retire(now_ns, cmd))
        self._fresh_command = False
        st.ee_pose = forward_kinematics(self.model, st.joints)
        return feedbacks

    def telemetry_row(self, now_ns: int) -> list:
        st = self.state
        depth = st.queue_depth() + (1 if self._active else 0)
        return (
            [now_ns]
            + [repr(float(q)) for q in st.joints]
            + [repr(float(v)) for v in st.ee_pose.position_mm]
            + [int(st.alarm), depth]
        )


TELEMETRY_HEADER = ["t_ns", "q1", "q2", "q3", "q4", "q5", "q6", "x", "y", "z", "alarm", "queue_depth"]
