// Short-term motion trail: the last windowNs of cursor positions.

import type { Vec3 } from "./types"

export interface TrailPoint extends Vec3 {
  t_ns: number
}

export class TrailBuffer {
  private points: TrailPoint[] = []

  constructor(readonly windowNs: number = 5_000_000_000) {}

  add(t_ns: number, p: Vec3): void {
    this.points.push({ t_ns, ...p })
    this.prune(t_ns)
  }

  /** Drop everything older than the window relative to `now_ns`. */
  prune(now_ns: number): void {
    const cutoff = now_ns - this.windowNs
    let firstKept = 0
    while (firstKept < this.points.length && this.points[firstKept].t_ns < cutoff) {
      firstKept++
    }
    if (firstKept > 0) this.points.splice(0, firstKept)
  }

  get length(): number {
    return this.points.length
  }

  vertices(): TrailPoint[] {
    return this.points
  }

  spanNs(): number {
    if (this.points.length < 2) return 0
    return this.points[this.points.length - 1].t_ns - this.points[0].t_ns
  }

  clear(): void {
    this.points = []
  }
}
