// Connection status bar and notification banners (rejects, alarms, staleness).

import type { ConnStatusPayload, FeedbackPayload, TelemetryEvent } from "./types"

export type LinkState = "connected" | "disconnected" | "unknown"

export interface Banner {
  kind: "reject" | "alarm" | "stale" | "conn_lost"
  text: string
  shownAtMs: number
}

const BANNER_TTL_MS = 4000

export class StatusModel {
  socket: LinkState = "unknown"
  operator: LinkState = "unknown"
  arm: LinkState = "unknown"
  private banners: Banner[] = []

  socketOpened(): void {
    this.socket = "connected"
  }

  /** The websocket dropping flips the bar immediately. */
  socketClosed(nowMs: number): void {
    this.socket = "disconnected"
    this.push({ kind: "conn_lost", text: "gateway connection lost", shownAtMs: nowMs })
  }

  apply(event: TelemetryEvent, nowMs: number): void {
    if (event.kind === "conn_status") {
      const p = event.payload as ConnStatusPayload
      const state: LinkState = p.connected ? "connected" : "disconnected"
      if (p.endpoint === "operator") this.operator = state
      else this.arm = state
    } else if (event.kind === "feedback") {
      const p = event.payload as FeedbackPayload
      if (p.status === "REJECTED") {
        this.push({
          kind: "reject",
          text: `command ${p.ref_seq} REJECTED (reason ${p.detail})`,
          shownAtMs: nowMs,
        })
      } else if (p.status === "ALARM") {
        this.push({
          kind: "alarm",
          text: `arm ALARM (code ${p.detail}) - clear before continuing`,
          shownAtMs: nowMs,
        })
      }
    }
  }

  markStale(nowMs: number): void {
    if (!this.banners.some((b) => b.kind === "stale")) {
      this.push({ kind: "stale", text: "telemetry stale (no data > 2 s)", shownAtMs: nowMs })
    }
  }

  private push(banner: Banner): void {
    this.banners.push(banner)
  }

  /** Banners still inside their display window. */
  activeBanners(nowMs: number): Banner[] {
    this.banners = this.banners.filter(
      (b) => nowMs - b.shownAtMs < BANNER_TTL_MS || b.kind === "conn_lost"
    )
    return this.banners
  }

  statusLine(): string {
    return `ws: ${this.socket} | operator: ${this.operator} | arm: ${this.arm}`
  }

  connected(): boolean {
    return this.socket === "connected"
  }
}
