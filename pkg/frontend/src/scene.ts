// Render-agnostic scene model: reduces telemetry events into the state the
// view draws each frame (cursor, trail, arm end-effector, live coordinates).

import { TrailBuffer } from "./trail"
import type {
  ArmStatePayload,
  StylusPayload,
  TelemetryEvent,
  Vec3,
} from "./types"

export const STALE_AFTER_MS = 2000

export class SceneState {
  cursor: Vec3 | null = null
  arm: Vec3 | null = null
  armAlarm = false
  queueDepth = 0
  trail: TrailBuffer
  private lastEventWallMs: number | null = null

  constructor(trailWindowNs: number = 5_000_000_000) {
    this.trail = new TrailBuffer(trailWindowNs)
  }

  apply(event: TelemetryEvent, wallMs: number): void {
    this.lastEventWallMs = wallMs
    if (event.kind === "stylus") {
      const p = event.payload as StylusPayload
      this.cursor = { x: p.x_mm, y: p.y_mm, z: p.z_mm }
      this.trail.add(event.t_ns, this.cursor)
    } else if (event.kind === "arm_state") {
      const p = event.payload as ArmStatePayload
      this.arm = { x: p.x, y: p.y, z: p.z }
      this.armAlarm = p.alarm !== 0
      this.queueDepth = p.queue_depth
    }
  }

  /** No telemetry for more than STALE_AFTER_MS -> show the stale banner. */
  isStale(nowMs: number): boolean {
    if (this.lastEventWallMs === null) return false
    return nowMs - this.lastEventWallMs > STALE_AFTER_MS
  }

  /** Live coordinate rows for the side table. */
  coordinateRows(): Array<[string, string]> {
    const fmt = (v: Vec3 | null) =>
      v === null ? "-" : `${v.x.toFixed(1)}, ${v.y.toFixed(1)}, ${v.z.toFixed(1)}`
    return [
      ["stylus (mm)", fmt(this.cursor)],
      ["arm ee (mm)", fmt(this.arm)],
      ["queue depth", this.arm === null ? "-" : String(this.queueDepth)],
    ]
  }
}
