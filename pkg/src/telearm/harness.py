"""Experiment runner: wires source -> network -> gateway -> network -> arm.

A Scenario describes one experiment (trace, link profiles, guardrails,
execution strategy, probe schedule).  run_scenario executes it on a
single-threaded virtual clock, writes raw per-packet and per-tick CSVs plus
an aggregated JSON report, and is bit-reproducible for a fixed seed.

Raw files written to the output directory:

    commands.csv        seq,t_sent_ns,x_mm,y_mm,z_mm,roll_deg,pitch_deg,yaw_deg
    waypoints.csv       seq,t_done_ns,x_mm,y_mm,z_mm,roll_deg,pitch_deg,yaw_deg
    arm_telemetry.csv   t_ns,q1..q6,x,y,z,alarm,queue_depth
    feedback.csv        t_ns,ref_seq,status,detail,flags
    probes_<link>.csv   kind,t_ns,value_ns,flag
    gateway.csv         kind,t_ns,value_ns,flag
    skew.csv            stream,seq,source_ts_ns,arrival_ns,release_ns,flag
    report.json         aggregated Report
"""

from __future__ import annotations

import csv
import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import arm as arm_mod
from . import gateway as gw_mod
from . import netem, protocol, stylus
from .arm import ArmSim, ExecutionStrategy, StrategyKind
from .gateway import Gateway, GuardrailPolicy, LinkMetrics, ModalPacket, SkewPolicy
from .netem import ConfigError, EventQueue, InFlightPacket, Link, NetworkProfile, SliceClass
from .protocol import FrameType


@dataclass
class Scenario:
    name: str
    mode: str = "virtual"
    seed: int = 0
    duration_s: float = 4.0
    # command stream (None -> probe-only scenario)
    trace_kind: str | None = None
    trace_params: dict = field(default_factory=dict)
    command_rate_hz: float = 200.0
    control_rate_hz: float = 50.0
    strategy: ExecutionStrategy = field(default_factory=ExecutionStrategy)
    calibration: stylus.CalibrationTransform = field(
        default_factory=stylus.CalibrationTransform.identity
    )
    # transport
    operator_profile: NetworkProfile = field(default_factory=lambda: netem.default_profile("zero"))
    arm_profile: NetworkProfile = field(default_factory=lambda: netem.default_profile("zero"))
    operator_budget_ns: int | None = None  # hold-and-forward budgets; None = off
    arm_budget_ns: int | None = None
    slice_map: dict[str, SliceClass] | None = None
    # modulation applied to the operator (wireless) hop at setup; the
    # thresholds parameterise adapt_modulation for quality-driven runs
    modulation: netem.ModulationState | None = None
    modulation_low_threshold: float = 0.3
    modulation_high_threshold: float = 0.7
    # gateway
    guardrail: GuardrailPolicy = field(
        default_factory=lambda: GuardrailPolicy(
            np.array([-900.0, -900.0, -100.0]), np.array([900.0, 900.0, 1000.0]), 400.0
        )
    )
    proc_delay_ns: int = 1_000_000
    skew_policy: SkewPolicy = field(default_factory=SkewPolicy)
    # standalone probe runs, one per profile
    probe_profiles: list[NetworkProfile] = field(default_factory=list)
    probe_count: int = 10_000
    probe_interval_ns: int = 1_000_000
    # synthetic paired haptic/video streams through the skew scheduler
    skew_pairs: int = 0
    skew_pair_interval_ns: int = 33_000_000
    skew_video_profile: NetworkProfile | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("virtual", "live"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.mode == "virtual" and self.seed is None:
            raise ConfigError("virtual mode requires a seed")
        if self.duration_s <= 0:
            raise ConfigError("duration_s must be positive")
        if not 0.0 <= self.modulation_low_threshold < self.modulation_high_threshold <= 1.0:
            raise ConfigError("modulation thresholds need 0 <= low < high <= 1")


# -- fidelity ------------------------------------------------------------


def _arc_lengths(points: np.ndarray) -> np.ndarray:
    if len(points) < 2:
        return np.zeros(len(points))
    steps = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(steps)])


def _point_at_arc(points: np.ndarray, arcs: np.ndarray, s: float) -> np.ndarray:
    s = min(max(s, 0.0), arcs[-1])
    i = int(np.searchsorted(arcs, s, side="right")) - 1
    i = min(max(i, 0), len(points) - 2) if len(points) > 1 else 0
    if len(points) == 1 or arcs[i + 1] == arcs[i]:
        return points[i]
    frac = (s - arcs[i]) / (arcs[i + 1] - arcs[i])
    return points[i] + frac * (points[i + 1] - points[i])


def compute_fidelity(
    commanded: np.ndarray, executed: np.ndarray
) -> tuple[float, float]:
    """Trajectory fidelity of an executed path against the commanded path.

    rms_mm: RMS distance of each executed point to the commanded point at the
    same cumulative arc length.  completion_ratio: executed arc length over
    commanded arc length, capped at 1.
    """
    commanded = np.asarray(commanded, dtype=float)
    executed = np.asarray(executed, dtype=float)
    if len(commanded) == 0 or len(executed) == 0:
        raise ValueError("pose sequences must be non-empty")
    cmd_arcs = _arc_lengths(commanded)
    exe_arcs = _arc_lengths(executed)
    if cmd_arcs[-1] == 0.0:
        completion = 1.0
    else:
        completion = min(1.0, float(exe_arcs[-1] / cmd_arcs[-1]))
    d2 = [
        float(np.sum((executed[i] - _point_at_arc(commanded, cmd_arcs, exe_arcs[i])) ** 2))
        for i in range(len(executed))
    ]
    rms = float(np.sqrt(np.mean(d2)))
    return rms, completion


# -- latency statistics ---------------------------------------------------


def latency_stats_us(one_way_ns: np.ndarray) -> dict:
    if len(one_way_ns) == 0:
        return {"count": 0}
    us = np.asarray(one_way_ns, dtype=float) / 1000.0
    p50 = float(np.percentile(us, 50))
    p99 = float(np.percentile(us, 99))
    return {
        "count": int(len(us)),
        "mean_us": float(us.mean()),
        "p50_us": p50,
        "p99_us": p99,
        "max_us": float(us.max()),
        "jitter_p99_p50_us": p99 - p50,
        "jitter_max_min_us": float(us.max() - us.min()),
    }


def spike_intervals(values: np.ndarray, factor: float = 3.0, min_run: int = 3) -> list[tuple[int, int]]:
    """Maximal runs of >= min_run consecutive samples above factor x median.

    The run-length floor keeps isolated jitter outliers from masquerading as
    line-of-sight blockage events.
    """
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        return []
    threshold = factor * float(np.median(values))
    above = values > threshold
    runs: list[tuple[int, int]] = []
    start = None
    for i, flag in enumerate(above):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            if i - start >= min_run:
                runs.append((start, i - 1))
            start = None
    if start is not None and len(values) - start >= min_run:
        runs.append((start, len(values) - 1))
    return runs


# -- the virtual-time engine ----------------------------------------------


class _EventLoop:
    def __init__(self) -> None:
        self._heap: list[tuple[int, int, object]] = []
        self._n = 0

    def push(self, t_ns: int, fn) -> None:
        self._n += 1
        heapq.heappush(self._heap, (t_ns, self._n, fn))

    def run(self) -> None:
        while self._heap:
            _, _, fn = heapq.heappop(self._heap)
            fn()

    def peek_time(self) -> int | None:
        return self._heap[0][0] if self._heap else None


@dataclass
class RunArtifacts:
    """Everything a scenario run produced, before aggregation."""

    commands: list[tuple[int, int, tuple]] = field(default_factory=list)  # seq, t, pose6
    waypoints: list[tuple[int, int, tuple]] = field(default_factory=list)
    telemetry: list[list] = field(default_factory=list)
    feedback: list[tuple[int, int, str, int, int]] = field(default_factory=list)
    probe_metrics: dict[str, LinkMetrics] = field(default_factory=dict)
    gateway_metrics: LinkMetrics | None = None
    skew_rows: list[tuple[str, int, int, int, int, str]] = field(default_factory=list)
    lost_uplink: int = 0
    lost_downlink: int = 0
    forwarded: int = 0
    arm: ArmSim | None = None


def _derive_seeds(seed: int, labels: list[str]) -> dict[str, int]:
    """Stable per-consumer RNG seeds from the scenario seed."""
    children = np.random.SeedSequence(seed).spawn(len(labels))
    return {
        label: int(child.generate_state(1, dtype=np.uint64)[0])
        for label, child in zip(labels, children)
    }


def _run_probe_stage(scenario: Scenario, artifacts: RunArtifacts, seeds: dict[str, int]) -> None:
    for profile in scenario.probe_profiles:
        out_link = Link(profile, seeds[f"probe:{profile.name}:out"])
        back_link = Link(profile, seeds[f"probe:{profile.name}:back"])
        metrics = LinkMetrics()
        gw_mod.probe_route(
            metrics,
            scenario.probe_count,
            out_link,
            back_link,
            scenario.probe_interval_ns,
        )
        artifacts.probe_metrics[profile.name] = metrics


def _run_skew_stage(scenario: Scenario, artifacts: RunArtifacts, seeds: dict[str, int]) -> None:
    if scenario.skew_pairs <= 0:
        return
    haptic_profile = scenario.operator_profile
    video_profile = scenario.skew_video_profile or netem.default_profile("wifi")
    h_link = Link(haptic_profile, seeds["skew:haptic"])
    v_link = Link(video_profile, seeds["skew:video"])
    haptic, video = [], []
    for k in range(scenario.skew_pairs):
        ts = k * scenario.skew_pair_interval_ns
        ha = h_link.transit(ts)
        va = v_link.transit(ts)
        if ha is not None:
            haptic.append(ModalPacket("haptic", ts, ha, k))
        if va is not None:
            video.append(ModalPacket("video", ts, va, k))
    releases = gw_mod.schedule_skew(haptic, video, scenario.skew_policy)
    gw = artifacts.gateway_metrics
    for rel in releases:
        if rel.flag == "skew_violation":
            gw.skew_violations += 1
        elif rel.flag == "unpaired":
            gw.unpaired += 1
        artifacts.skew_rows.append(
            (
                rel.packet.stream,
                rel.packet.seq,
                rel.packet.source_ts_ns,
                rel.packet.arrival_ns,
                rel.release_ns,
                rel.flag,
            )
        )
    # violations are double-counted per pair member otherwise
    gw.skew_violations //= 2


def _run_command_stage(scenario: Scenario, artifacts: RunArtifacts, seeds: dict[str, int]) -> None:
    if scenario.trace_kind is None:
        return
    trace = stylus.generate_trace(
        scenario.trace_kind,
        scenario.trace_params,
        scenario.command_rate_hz,
        scenario.duration_s,
        seeds["trace"],
    )
    frames = stylus.map_trace(trace, scenario.calibration)
    model = arm_mod.default_model()
    model.control_rate_hz = scenario.control_rate_hz
    arm = ArmSim(model, scenario.strategy)
    artifacts.arm = arm
    gw = Gateway(scenario.guardrail, scenario.proc_delay_ns, scenario.skew_policy)
    artifacts.gateway_metrics = gw.metrics

    op_profile = scenario.operator_profile
    if scenario.modulation is not None:
        op_profile = netem.apply_modulation(op_profile, scenario.modulation)
    link_up = Link(op_profile, seeds["op:fwd"])
    link_up_back = Link(op_profile, seeds["op:back"])
    link_down = Link(scenario.arm_profile, seeds["arm:fwd"])
    link_down_back = Link(scenario.arm_profile, seeds["arm:back"])
    command_slice = netem.classify_slice("commands", "control", scenario.slice_map)

    loop = _EventLoop()
    arm_ingress = EventQueue()
    duration_ns = int(scenario.duration_s * 1e9)
    tick_ns = int(round(1e9 / scenario.control_rate_hz))
    drain_cap_ns = duration_ns * 12

    def send_feedback_to_operator(fb_frame, t_ns):
        fb_bytes = protocol.encode_frame(fb_frame)
        arrival_gw = link_down_back.transit(t_ns)
        if arrival_gw is None:
            artifacts.lost_downlink += 1
            return
        egress = arrival_gw + scenario.proc_delay_ns
        gw.metrics.record_overhead(arrival_gw, scenario.proc_delay_ns)
        arrival_op = link_up_back.transit(egress)
        if arrival_op is None:
            artifacts.lost_downlink += 1
            return

        def deliver():
            fb = protocol.decode_frame(fb_bytes)
            artifacts.feedback.append(
                (arrival_op, fb.payload.ref_seq, fb.payload.status.name, fb.payload.detail, fb.flags)
            )

        loop.push(arrival_op, deliver)

    def gw_ingress(frame_bytes, arrival_ns):
        outcome, t_out, result = gw.handle_ingress(frame_bytes, arrival_ns)
        if outcome == "reject":
            send_feedback_to_operator(result, t_out)
            return
        artifacts.forwarded += 1
        arm_arrival = link_down.transit(t_out)
        if arm_arrival is None:
            artifacts.lost_uplink += 1
            return
        frame = protocol.decode_frame(result)
        pkt = InFlightPacket(
            result, t_out, arm_arrival, command_slice, "control", frame.seq
        )
        if scenario.arm_budget_ns is not None:
            release, missed = netem.hold_and_forward(pkt, scenario.arm_budget_ns)
            if missed:
                gw.metrics.deadline_misses += 1
        else:
            release = arm_arrival
        arm_ingress.push(pkt, release)

    def send_command(frame):
        frame_bytes = protocol.encode_frame(frame)
        arrival = link_up.transit(frame.timestamp_ns)
        if arrival is None:
            artifacts.lost_uplink += 1
            return
        loop.push(arrival, lambda: gw_ingress(frame_bytes, arrival))

    def arm_tick(t_ns):
        for pkt in arm_ingress.step(t_ns):
            frame = protocol.decode_frame(pkt.frame_bytes)
            fb = arm.enqueue_command(frame, t_ns)
            if fb is not None:
                send_feedback_to_operator(fb, t_ns)
        for fb in arm.execute_tick(t_ns):
            send_feedback_to_operator(fb, t_ns)
        artifacts.telemetry.append(arm.telemetry_row(t_ns))
        next_t = t_ns + tick_ns
        work_left = (
            len(arm_ingress) > 0
            or arm.state.queue_depth() > 0
            or arm._active is not None
            or loop.peek_time() is not None
        )
        if next_t <= duration_ns or (work_left and next_t <= drain_cap_ns):
            loop.push(next_t, lambda: arm_tick(next_t))

    for frame in frames:
        pose6 = frame.payload.pose()
        artifacts.commands.append((frame.seq, frame.timestamp_ns, pose6))
        loop.push(frame.timestamp_ns, lambda f=frame: send_command(f))
    loop.push(0, lambda: arm_tick(0))
    loop.run()

    for wp in arm.executed_waypoints:
        artifacts.waypoints.append((wp.seq, wp.t_done_ns, wp.pose.as_tuple()))


def _write_csvs(out_dir: Path, artifacts: RunArtifacts) -> None:
    pose_cols = ["x_mm", "y_mm", "z_mm", "roll_deg", "pitch_deg", "yaw_deg"]
    with open(out_dir / "commands.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seq", "t_sent_ns"] + pose_cols)
        for seq, t, pose in artifacts.commands:
            w.writerow([seq, t] + [repr(float(v)) for v in pose])
    with open(out_dir / "waypoints.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seq", "t_done_ns"] + pose_cols)
        for seq, t, pose in artifacts.waypoints:
            w.writerow([seq, t] + [repr(float(v)) for v in pose])
    with open(out_dir / "arm_telemetry.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(arm_mod.TELEMETRY_HEADER)
        w.writerows(artifacts.telemetry)
    with open(out_dir / "feedback.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_ns", "ref_seq", "status", "detail", "flags"])
        w.writerows(artifacts.feedback)
    for name, metrics in artifacts.probe_metrics.items():
        metrics.write_csv(out_dir / f"probes_{name}.csv")
    if artifacts.gateway_metrics is not None:
        artifacts.gateway_metrics.write_csv(out_dir / "gateway.csv")
    if artifacts.skew_rows:
        with open(out_dir / "skew.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["stream", "seq", "source_ts_ns", "arrival_ns", "release_ns", "flag"])
            w.writerows(artifacts.skew_rows)


def _aggregate(scenario: Scenario, artifacts: RunArtifacts) -> dict:
    report: dict = {
        "scenario": scenario.name,
        "seed": scenario.seed,
        "mode": scenario.mode,
        "links": {},
    }
    for name, metrics in artifacts.probe_metrics.items():
        one_way = metrics.one_way_values()
        stats = latency_stats_us(one_way)
        runs = spike_intervals(one_way)
        stats["spike_count"] = len(runs)
        stats["spike_intervals"] = [[int(a), int(b)] for a, b in runs]
        stats["losses"] = metrics.losses
        report["links"][name] = stats
    gwm = artifacts.gateway_metrics
    if gwm is not None:
        overheads = np.array([v for _, v in gwm.forward_overhead_ns], dtype=float)
        report["gateway"] = {
            "forwarded": artifacts.forwarded,
            "overhead_mean_ns": float(overheads.mean()) if len(overheads) else 0.0,
            "overhead_max_ns": float(overheads.max()) if len(overheads) else 0.0,
            "rejects": dict(sorted(gwm.rejects.items())),
            "deadline_misses": gwm.deadline_misses,
            "skew_violations": gwm.skew_violations,
            "unpaired": gwm.unpaired,
        }
    if artifacts.arm is not None:
        st = artifacts.arm.state
        report["arm"] = {
            "received": st.received_count,
            "executed": st.executed_count,
            "rejected": st.rejected_count,
            "discarded": st.discarded_count,
            "queued_final": st.queue_depth() + (1 if artifacts.arm._active else 0),
            "alarm": bool(st.alarm),
            "alarm_code": st.alarm_code,
        }
        report["commands"] = {
            "mapped": len(artifacts.commands),
            "lost_uplink": artifacts.lost_uplink,
            "lost_downlink": artifacts.lost_downlink,
            "feedback_received": len(artifacts.feedback),
        }
    if artifacts.commands and artifacts.waypoints:
        duration_ns = int(scenario.duration_s * 1e9)
        commanded = np.array([list(pose[:3]) for _, _, pose in artifacts.commands])
        executed = np.array([list(pose[:3]) for _, _, pose in artifacts.waypoints])
        in_window = np.array(
            [list(pose[:3]) for _, t, pose in artifacts.waypoints if t <= duration_ns]
        )
        rms, completion = compute_fidelity(commanded, executed)
        report["fidelity"] = {"rms_mm": rms, "completion_ratio": completion}
        if len(in_window):
            rms_w, completion_w = compute_fidelity(commanded, in_window)
            report["fidelity"]["rms_mm_window"] = rms_w
            report["fidelity"]["completion_ratio_window"] = completion_w
    return report


def run_scenario(scenario: Scenario, out_dir: str | Path) -> dict:
    """Execute a scenario, write raw CSVs plus report.json, return the report."""
    if scenario.mode != "virtual":
        raise ConfigError("live mode runs through telearm.live, not run_scenario")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = (
        ["trace", "op:fwd", "op:back", "arm:fwd", "arm:back", "skew:haptic", "skew:video"]
        + [f"probe:{p.name}:out" for p in scenario.probe_profiles]
        + [f"probe:{p.name}:back" for p in scenario.probe_profiles]
    )
    seeds = _derive_seeds(scenario.seed, labels)
    artifacts = RunArtifacts()
    if artifacts.gateway_metrics is None:
        artifacts.gateway_metrics = LinkMetrics()
    _run_probe_stage(scenario, artifacts, seeds)
    _run_command_stage(scenario, artifacts, seeds)
    _run_skew_stage(scenario, artifacts, seeds)
    _write_csvs(out, artifacts)
    report = _aggregate(scenario, artifacts)
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


# -- report recomputation (independent re-reader) --------------------------


def recompute_report(out_dir: str | Path) -> dict:
    """Rebuild the aggregate latency/fidelity numbers from the raw CSVs.

    Deliberately a plain re-reader so report.json can be cross-checked
    against an independent path over the same raw data.
    """
    out = Path(out_dir)
    result: dict = {"links": {}}
    for probe_file in sorted(out.glob("probes_*.csv")):
        name = probe_file.stem[len("probes_") :]
        one_way = []
        losses = 0
        with open(probe_file, newline="") as fh:
            for row in csv.DictReader(fh):
                if row["kind"] == "one_way":
                    one_way.append(float(row["value_ns"]))
                elif row["kind"] == "losses":
                    losses = int(row["value_ns"])
        stats = latency_stats_us(np.array(one_way))
        runs = spike_intervals(np.array(one_way))
        stats["spike_count"] = len(runs)
        stats["spike_intervals"] = [[int(a), int(b)] for a, b in runs]
        stats["losses"] = losses
        result["links"][name] = stats
    cmd_file = out / "commands.csv"
    wp_file = out / "waypoints.csv"
    if cmd_file.exists() and wp_file.exists():
        commanded = _read_positions(cmd_file)
        executed = _read_positions(wp_file)
        if len(commanded) and len(executed):
            rms, completion = compute_fidelity(commanded, executed)
            result["fidelity"] = {"rms_mm": rms, "completion_ratio": completion}
    return result


def _read_positions(path: Path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append([float(row["x_mm"]), float(row["y_mm"]), float(row["z_mm"])])
    return np.array(rows)


# -- scenario construction --------------------------------------------------


def _profile_from_config(cfg, default_seed_label: str = "") -> NetworkProfile:
    if isinstance(cfg, str):
        return netem.default_profile(cfg)
    if isinstance(cfg, NetworkProfile):
        return cfg
    if isinstance(cfg, dict):
        jitter_cfg = cfg.get("jitter", {})
        jitter = netem.JitterSpec(
            jitter_cfg.get("kind", "none"),
            float(jitter_cfg.get("mean_us", 0.0)),
            float(jitter_cfg.get("sigma_us", 0.0)),
            float(jitter_cfg.get("median_us", 0.0)),
            float(jitter_cfg.get("sigma_log", 0.0)),
        )
        windows = [
            (int(w[0]), int(w[1]), float(w[2])) for w in cfg.get("blockage_windows", [])
        ]
        return NetworkProfile(
            cfg.get("name", "custom"),
            float(cfg.get("base_delay_us", 0.0)),
            jitter,
            float(cfg.get("loss_prob", 0.0)),
            windows,
            cfg.get("seed"),
            float(cfg.get("serialization_us", 0.0)),
        )
    raise ConfigError(f"cannot build a profile from {cfg!r}")


def _slice_map_from_config(cfg: dict) -> dict[str, SliceClass]:
    try:
        return {modality: SliceClass(slice_name) for modality, slice_name in cfg.items()}
    except ValueError as exc:
        raise ConfigError(f"bad slice_map: {exc}") from exc


def _modulation_from_config(cfg: dict) -> netem.ModulationState:
    order_names = {o.name.lower(): o for o in netem.ModulationOrder}
    try:
        order = order_names[str(cfg.get("initial_order", "qam64")).lower()]
    except KeyError:
        raise ConfigError(f"unknown modulation order {cfg.get('initial_order')!r}") from None
    error_prob = dict(netem.DEFAULT_ERROR_PROB)
    throughput = dict(netem.DEFAULT_THROUGHPUT)
    for name, value in cfg.get("error_prob", {}).items():
        error_prob[order_names[name.lower()]] = float(value)
    for name, value in cfg.get("throughput", {}).items():
        throughput[order_names[name.lower()]] = float(value)
    return netem.ModulationState(order, error_prob, throughput)


def _strategy_from_config(cfg) -> ExecutionStrategy:
    if isinstance(cfg, ExecutionStrategy):
        return cfg
    if isinstance(cfg, str):
        return ExecutionStrategy(StrategyKind(cfg))
    if isinstance(cfg, dict):
        return ExecutionStrategy(
            StrategyKind(cfg.get("kind", "naive_queue")),
            float(cfg.get("keep_ratio", 1.0)),
            bool(cfg.get("extrapolate", True)),
            int(cfg.get("velocity_window", 5)),
        )
    raise ConfigError(f"cannot build a strategy from {cfg!r}")


def load_scenario(path: str | Path) -> Scenario:
    """Load a scenario config file (YAML key/value text)."""
    with open(path) as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, dict) or "name" not in cfg:
        raise ConfigError(f"{path}: scenario file needs a top-level mapping with a name")
    try:
        scenario = Scenario(
            name=cfg["name"],
            mode=cfg.get("mode", "virtual"),
            seed=int(cfg.get("seed", 0)),
            duration_s=float(cfg.get("duration_s", 4.0)),
            trace_kind=cfg.get("trace", {}).get("kind") if "trace" in cfg else None,
            trace_params=cfg.get("trace", {}).get("params", {}),
            command_rate_hz=float(cfg.get("trace", {}).get("rate_hz", 200.0)),
            control_rate_hz=float(cfg.get("control_rate_hz", 50.0)),
            strategy=_strategy_from_config(cfg.get("strategy", "naive_queue")),
            operator_profile=_profile_from_config(cfg.get("operator_profile", "zero")),
            arm_profile=_profile_from_config(cfg.get("arm_profile", "zero")),
            operator_budget_ns=cfg.get("operator_budget_ns"),
            arm_budget_ns=cfg.get("arm_budget_ns"),
            proc_delay_ns=int(cfg.get("proc_delay_ns", 1_000_000)),
            probe_profiles=[_profile_from_config(p) for p in cfg.get("probe_profiles", [])],
            probe_count=int(cfg.get("probe_count", 10_000)),
            probe_interval_ns=int(cfg.get("probe_interval_ns", 1_000_000)),
            skew_pairs=int(cfg.get("skew_pairs", 0)),
            slice_map=_slice_map_from_config(cfg["slice_map"]) if "slice_map" in cfg else None,
            modulation=_modulation_from_config(cfg["modulation"]) if "modulation" in cfg else None,
            modulation_low_threshold=float(cfg.get("modulation", {}).get("low_threshold", 0.3)),
            modulation_high_threshold=float(cfg.get("modulation", {}).get("high_threshold", 0.7)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if "guardrail" in cfg:
        g = cfg["guardrail"]
        scenario.guardrail = GuardrailPolicy(
            np.asarray(g["workspace_min_mm"], dtype=float),
            np.asarray(g["workspace_max_mm"], dtype=float),
            float(g.get("max_command_rate_hz", 400.0)),
        )
    if "skew" in cfg:
        s = cfg["skew"]
        scenario.skew_policy = SkewPolicy(
            int(s.get("skew_budget_ns", 10_000_000)),
            int(s.get("haptic_deadline_ns", 10_000_000)),
            int(s.get("visual_deadline_ns", 100_000_000)),
            int(s.get("pairing_window_ns", 50_000_000)),
        )
    return scenario


# circle comfortably inside the default arm workspace; the tool points
# forward (the arm's natural orientation at the home posture)
CIRCLE_PARAMS = {
    "radius_mm": 50.0,
    "revolutions": 2.0,
    "center": (350.0, 0.0, 400.0),
    "orientation_deg": (0.0, -90.0, 180.0),
}


def builtin_scenarios() -> dict[str, Scenario]:
    scenarios: dict[str, Scenario] = {}
    scenarios["latency-compare"] = Scenario(
        name="latency-compare",
        duration_s=10.0,
        probe_profiles=[
            netem.default_profile("ethernet"),
            netem.default_profile("wifi"),
            netem.default_profile("oran"),
        ],
        probe_count=10_000,
        probe_interval_ns=1_000_000,
    )
    for label, strategy in [
        ("rate-mismatch", ExecutionStrategy(StrategyKind.NAIVE_QUEUE)),
        ("rate-mismatch-downsample", ExecutionStrategy(StrategyKind.DOWNSAMPLE, keep_ratio=0.25)),
        ("rate-mismatch-predictive", ExecutionStrategy(StrategyKind.PREDICTIVE)),
        ("rate-mismatch-precise", ExecutionStrategy(StrategyKind.PRECISE_PATH)),
    ]:
        scenarios[label] = Scenario(
            name=label,
            duration_s=4.0,
            trace_kind="circle",
            trace_params=dict(CIRCLE_PARAMS),
            command_rate_hz=200.0,
            control_rate_hz=50.0,
            strategy=strategy,
            proc_delay_ns=0,
        )
    scenarios["zero-delay"] = Scenario(
        name="zero-delay",
        duration_s=4.0,
        trace_kind="circle",
        trace_params=dict(CIRCLE_PARAMS),
        command_rate_hz=50.0,
        control_rate_hz=50.0,
        strategy=ExecutionStrategy(StrategyKind.PRECISE_PATH),
        proc_delay_ns=0,
        probe_profiles=[netem.default_profile("zero")],
        probe_count=1000,
    )
    scenarios["oran-teleop"] = Scenario(
        name="oran-teleop",
        duration_s=4.0,
        trace_kind="circle",
        trace_params=dict(CIRCLE_PARAMS),
        command_rate_hz=200.0,
        control_rate_hz=50.0,
        strategy=ExecutionStrategy(StrategyKind.PREDICTIVE),
        operator_profile=netem.default_profile("oran"),
        arm_profile=netem.default_profile("ethernet"),
        arm_budget_ns=15_000_000,
    )
    scenarios["skew-align"] = Scenario(
        name="skew-align",
        duration_s=10.0,
        operator_profile=netem.default_profile("oran"),
        skew_pairs=300,
        skew_video_profile=netem.default_profile("wifi"),
    )
    return scenarios
