import { describe, expect, it } from "vitest"

import { StatusModel } from "../src/status"
import type { TelemetryEvent } from "../src/types"

function feedback(status: "REJECTED" | "ALARM" | "EXECUTED", detail = 2): TelemetryEvent {
  return {
    kind: "feedback",
    t_ns: 0,
    payload: { ref_seq: 7, status, detail, flags: 0 },
  }
}

describe("StatusModel", () => {
  it("socket drop flips the bar immediately (well under 2 s)", () => {
    const status = new StatusModel()
    status.socketOpened()
    expect(status.connected()).toBe(true)
    expect(status.statusLine()).toContain("ws: connected")
    status.socketClosed(1000)
    expect(status.connected()).toBe(false)
    expect(status.statusLine()).toContain("ws: disconnected")
    expect(status.activeBanners(1001).some((b) => b.kind === "conn_lost")).toBe(true)
  })

  it("REJECTED feedback raises a visible banner", () => {
    const status = new StatusModel()
    status.apply(feedback("REJECTED"), 500)
    const banners = status.activeBanners(600)
    expect(banners).toHaveLength(1)
    expect(banners[0].kind).toBe("reject")
    expect(banners[0].text).toContain("REJECTED")
    expect(banners[0].text).toContain("7") // which command was refused
  })

  it("ALARM feedback raises an alarm banner", () => {
    const status = new StatusModel()
    status.apply(feedback("ALARM", 1), 0)
    expect(status.activeBanners(1).some((b) => b.kind === "alarm")).toBe(true)
  })

  it("EXECUTED feedback raises nothing", () => {
    const status = new StatusModel()
    status.apply(feedback("EXECUTED"), 0)
    expect(status.activeBanners(1)).toHaveLength(0)
  })

  it("banners expire after their display window", () => {
    const status = new StatusModel()
    status.apply(feedback("REJECTED"), 0)
    expect(status.activeBanners(3999)).toHaveLength(1)
    expect(status.activeBanners(4001)).toHaveLength(0)
  })

  it("tracks per-endpoint connection state from conn_status events", () => {
    const status = new StatusModel()
    status.apply(
      { kind: "conn_status", t_ns: 0, payload: { endpoint: "arm", connected: true } },
      0
    )
    expect(status.statusLine()).toContain("arm: connected")
    status.apply(
      { kind: "conn_status", t_ns: 0, payload: { endpoint: "arm", connected: false } },
      0
    )
    expect(status.statusLine()).toContain("arm: disconnected")
  })

  it("stale banner appears once, not per frame", () => {
    const status = new StatusModel()
    status.markStale(0)
    status.markStale(10)
    status.markStale(20)
    expect(status.activeBanners(30).filter((b) => b.kind === "stale")).toHaveLength(1)
  })
})
