"""Stylus-side command source.

Produces timestamped 6-DOF samples (synthetic traces or live cockpit input),
aligns the stylus workspace with the arm workspace through a similarity
transform fitted from point correspondences, and converts samples into MOVE
frames while the transmit button is held.

Trace file format: CSV with header
``t_ns,x_mm,y_mm,z_mm,roll_deg,pitch_deg,yaw_deg,button``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import protocol
from .protocol import Frame

DEFAULT_RATE_HZ = 200.0  # nominal Touch-like sampling rate; configurable

TRACE_HEADER = ["t_ns", "x_mm", "y_mm", "z_mm", "roll_deg", "pitch_deg", "yaw_deg", "button"]


class DegenerateCalibration(Exception):
    """Fewer than 3 correspondences, or a collinear configuration."""


@dataclass
class StylusSample:
    t_ns: int
    position: np.ndarray  # (3,) mm, stylus frame
    orientation: np.ndarray  # (3,) roll/pitch/yaw deg
    button_down: bool


@dataclass
class CalibrationTransform:
    """Similarity transform stylus frame -> arm frame: p_arm = scale * R @ p + t."""

    rotation: np.ndarray  # (3,3) orthonormal, det +1
    translation: np.ndarray  # (3,) mm
    scale: float

    def __post_init__(self) -> None:
        self.rotation = np.asarray(self.rotation, dtype=float)
        self.translation = np.asarray(self.translation, dtype=float)
        r = self.rotation
        if r.shape != (3, 3) or np.abs(r @ r.T - np.eye(3)).max() > 1e-9:
            raise ValueError("rotation must be orthonormal")
        if abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise ValueError("rotation must be proper (det +1)")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    @classmethod
    def identity(cls) -> "CalibrationTransform":
        return cls(np.eye(3), np.zeros(3), 1.0)

    def apply(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return self.scale * p @ self.rotation.T + self.translation


@dataclass
class StylusTrace:
    samples: list[StylusSample]
    rate_hz: float

    def __post_init__(self) -> None:
        ts = [s.t_ns for s in self.samples]
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ValueError("sample timestamps must be non-decreasing")
        if len(ts) >= 2 and self.rate_hz > 0:
            nominal = 1e9 / self.rate_hz
            gaps = np.diff(ts)
            if gaps.max() > 1.1 * nominal or gaps.min() < 0.9 * nominal:
                raise ValueError("inter-sample spacing deviates >10% from nominal rate")

    def positions(self) -> np.ndarray:
        return np.array([s.position for s in self.samples])


def calibrate_workspace(
    stylus_points: np.ndarray, arm_points: np.ndarray
) -> tuple[CalibrationTransform, float]:
    """Fit the least-squares similarity transform mapping stylus onto arm points.

    Closed-form absolute-orientation solution via the SVD of the
    cross-covariance.  Returns the transform and the RMS residual in mm.
    """
    x = np.asarray(stylus_points, dtype=float)
    y = np.asarray(arm_points, dtype=float)
    if x.shape != y.shape or x.ndim != 2 or x.shape[1] != 3:
        raise ValueError("point sets must both be (n, 3)")
    n = x.shape[0]
    if n < 3:
        raise DegenerateCalibration(f"need >= 3 correspondences, got {n}")
    mu_x = x.mean(axis=0)
    mu_y = y.mean(axis=0)
    xc = x - mu_x
    yc = y - mu_y
    spread = np.linalg.svd(xc, compute_uv=False)
    if spread[0] <= 0 or spread[1] <= 1e-9 * spread[0]:
        raise DegenerateCalibration("stylus points are collinear")
    sigma_x2 = (xc**2).sum() / n
    cov = yc.T @ xc / n
    u, d, vt = np.linalg.svd(cov)
    s_fix = np.eye(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        s_fix[2, 2] = -1.0
    rotation = u @ s_fix @ vt
    scale = float(np.trace(np.diag(d) @ s_fix) / sigma_x2)
    translation = mu_y - scale * rotation @ mu_x
    cal = CalibrationTransform(rotation, translation, scale)
    residuals = y - cal.apply(x)
    rms = float(np.sqrt((residuals**2).sum(axis=1).mean()))
    return cal, rms


def map_sample(
    sample: StylusSample, cal: CalibrationTransform, seq: int = 0
) -> Frame | None:
    """Convert one sample into a MOVE frame, or None while the button is up.

    The orientation vector is rotated into the arm frame by the calibration
    rotation.  Raises PoseOverflow when the mapped pose exceeds the wire
    fixed-point range.
    """
    if not sample.button_down:
        return None
    pos = cal.apply(sample.position)
    ang = cal.rotation @ np.asarray(sample.orientation, dtype=float)
    return protocol.move_frame(seq, sample.t_ns, *pos, *ang)


def map_trace(
    trace: StylusTrace, cal: CalibrationTransform, start_seq: int = 1
) -> list[Frame]:
    """Map a whole trace; emits one MOVE per button-down sample, seqs increasing."""
    frames: list[Frame] = []
    seq = start_seq
    for sample in trace.samples:
        frame = map_sample(sample, cal, seq)
        if frame is not None:
            frames.append(frame)
            seq = protocol.next_seq(seq)
    return frames


def generate_trace(
    kind: str,
    params: dict | None = None,
    rate_hz: float = DEFAULT_RATE_HZ,
    duration_s: float = 4.0,
    seed: int = 0,
) -> StylusTrace:
    """Deterministic synthetic traces standing in for a human moving the stylus.

    kinds:
        circle    params: radius_mm (50), revolutions (2), center (0,0,0)
        line      params: start (0,0,0), end (100,0,0)
        lissajous params: amplitude_mm (50,50,10), freq_hz (1,2,3), phase_rad (pi/2,0,0), center
    common params: orientation_deg (0,0,0), button (True), noise_mm (0)
    """
    if rate_hz <= 0:
        raise ValueError("rate_hz must be positive")
    p = dict(params or {})
    n = max(2, round(rate_hz * duration_s))
    u = np.arange(n) / (n - 1)  # path parameter 0..1 inclusive
    t_ns = np.round(np.arange(n) * 1e9 / rate_hz).astype(np.int64)
    center = np.asarray(p.get("center", (0.0, 0.0, 0.0)), dtype=float)
    if kind == "circle":
        radius = float(p.get("radius_mm", 50.0))
        revolutions = float(p.get("revolutions", 2.0))
        theta = 2.0 * np.pi * revolutions * u
        pos = center + np.column_stack(
            [radius * np.cos(theta), radius * np.sin(theta), np.zeros(n)]
        )
    elif kind == "line":
        a = np.asarray(p.get("start", (0.0, 0.0, 0.0)), dtype=float)
        b = np.asarray(p.get("end", (100.0, 0.0, 0.0)), dtype=float)
        pos = a + u[:, None] * (b - a)
    elif kind == "lissajous":
        amp = np.asarray(p.get("amplitude_mm", (50.0, 50.0, 10.0)), dtype=float)
        freq = np.asarray(p.get("freq_hz", (1.0, 2.0, 3.0)), dtype=float)
        phase = np.asarray(p.get("phase_rad", (np.pi / 2, 0.0, 0.0)), dtype=float)
        t_s = np.arange(n) / rate_hz
        pos = center + amp * np.sin(2.0 * np.pi * freq * t_s[:, None] + phase)
    else:
        raise ValueError(f"unknown trace kind {kind!r}")
    noise_mm = float(p.get("noise_mm", 0.0))
    if noise_mm > 0:
        rng = np.random.default_rng(seed)
        pos = pos + rng.normal(0.0, noise_mm, pos.shape)
    orientation = np.asarray(p.get("orientation_deg", (0.0, 0.0, 0.0)), dtype=float)
    button = bool(p.get("button", True))
    samples = [
        StylusSample(int(t_ns[i]), pos[i].copy(), orientation.copy(), button)
        for i in range(n)
    ]
    return StylusTrace(samples, rate_hz)


def save_trace(trace: StylusTrace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for s in trace.samples:
            writer.writerow(
                [s.t_ns, *(repr(float(v)) for v in s.position),
                 *(repr(float(v)) for v in s.orientation), int(s.button_down)]
            )


def load_trace(path: str | Path, rate_hz: float | None = None) -> StylusTrace:
    samples: list[StylusSample] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != TRACE_HEADER:
            raise ValueError(f"unexpected trace header {header!r}")
        for row in reader:
            samples.append(
                StylusSample(
                    int(row[0]),
                    np.array([float(row[1]), float(row[2]), float(row[3])]),
                    np.array([float(row[4]), float(row[5]), float(row[6])]),
                    bool(int(row[7])),
                )
            )
    if rate_hz is None:
        if len(samples) >= 2:
            gaps = np.diff([s.t_ns for s in samples])
            rate_hz = 1e9 / float(np.median(gaps))
        else:
            rate_hz = DEFAULT_RATE_HZ
    return StylusTrace(samples, rate_hz)
