// Pointer steering: the mouse stands in for the haptic stylus.
//
// Drag moves x/y, the wheel (or keys) moves z.  Samples stream at a fixed
// rate only while the transmit toggle is held; releasing the toggle stops
// conversion entirely, matching the stylus button semantics.

import type { StylusPayload } from "./types"

export interface SteerOptions {
  rateHz?: number
  mmPerPixel?: number
  mmPerWheelStep?: number
  start?: { x: number; y: number; z: number }
  bounds?: { min: [number, number, number]; max: [number, number, number] }
}

export class Steering {
  pose: { x: number; y: number; z: number }
  transmit = false
  readonly intervalMs: number
  private readonly mmPerPixel: number
  private readonly mmPerWheelStep: number
  private readonly bounds: SteerOptions["bounds"]
  private emitted = 0

  constructor(opts: SteerOptions = {}) {
    this.intervalMs = 1000 / (opts.rateHz ?? 50)
    this.mmPerPixel = opts.mmPerPixel ?? 0.8
    this.mmPerWheelStep = opts.mmPerWheelStep ?? 5
    this.pose = { ...(opts.start ?? { x: 350, y: 0, z: 400 }) }
    this.bounds = opts.bounds
  }

  setTransmit(held: boolean): void {
    this.transmit = held
  }

  pointerDelta(dxPx: number, dyPx: number): void {
    this.pose.x += dxPx * this.mmPerPixel
    this.pose.y -= dyPx * this.mmPerPixel // screen y grows downward
    this.clamp()
  }

  wheel(steps: number): void {
    this.pose.z += steps * this.mmPerWheelStep
    this.clamp()
  }

  keyZ(direction: 1 | -1): void {
    this.pose.z += direction * this.mmPerWheelStep
    this.clamp()
  }

  private clamp(): void {
    if (!this.bounds) return
    const { min, max } = this.bounds
    this.pose.x = Math.min(Math.max(this.pose.x, min[0]), max[0])
    this.pose.y = Math.min(Math.max(this.pose.y, min[1]), max[1])
    this.pose.z = Math.min(Math.max(this.pose.z, min[2]), max[2])
  }

  /**
   * Called on the fixed-rate timer: returns the sample to send, or null
   * while the transmit toggle is up.
   */
  tick(): StylusPayload | null {
    if (!this.transmit) return null
    this.emitted += 1
    return {
      x_mm: this.pose.x,
      y_mm: this.pose.y,
      z_mm: this.pose.z,
      roll_deg: 0,
      pitch_deg: -90,
      yaw_deg: 180,
      button: 1,
    }
  }

  emittedCount(): number {
    return this.emitted
  }
}
