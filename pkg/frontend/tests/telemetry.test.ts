import { describe, expect, it } from "vitest"

import { TelemetryClient, type SocketLike } from "../src/telemetry"
import type { TelemetryEvent } from "../src/types"

class FakeSocket implements SocketLike {
  onopen: (() => void) | null = null
  onclose: (() => void) | null = null
  onmessage: ((ev: { data: string }) => void) | null = null
  sent: string[] = []
  send(data: string): void {
    this.sent.push(data)
  }
  close(): void {
    this.onclose?.()
  }
}

function makeClient(nowRef: { t: number }) {
  const sockets: FakeSocket[] = []
  const client = new TelemetryClient("ws://test/telemetry", {
    socketFactory: () => {
      const s = new FakeSocket()
      sockets.push(s)
      return s
    },
    now: () => nowRef.t,
  })
  return { client, sockets }
}

const SAMPLE = {
  x_mm: 1, y_mm: 2, z_mm: 3, roll_deg: 0, pitch_deg: 0, yaw_deg: 0, button: 1,
}

describe("TelemetryClient", () => {
  it("dispatches parsed events and ignores garbage frames", () => {
    const { client, sockets } = makeClient({ t: 0 })
    const seen: TelemetryEvent[] = []
    client.onEvent = (e) => seen.push(e)
    client.connect()
    sockets[0].onopen?.()
    sockets[0].onmessage?.({ data: JSON.stringify({ kind: "stylus", t_ns: 1, payload: SAMPLE }) })
    sockets[0].onmessage?.({ data: "{not json" })
    sockets[0].onmessage?.({ data: JSON.stringify({ kind: "metrics", t_ns: 2, payload: { metric: "m", value_ns: 5 } }) })
    expect(seen.map((e) => e.kind)).toEqual(["stylus", "metrics"])
  })

  it("open socket sends immediately", () => {
    const { client, sockets } = makeClient({ t: 0 })
    client.connect()
    sockets[0].onopen?.()
    client.sendStylus(123, SAMPLE)
    expect(sockets[0].sent).toHaveLength(1)
    expect(JSON.parse(sockets[0].sent[0]).kind).toBe("stylus")
  })

  it("buffers while down and flushes within the 1 s budget", () => {
    const now = { t: 0 }
    const { client, sockets } = makeClient(now)
    client.connect()
    client.sendStylus(1, SAMPLE) // socket not open yet
    now.t = 400
    client.sendStylus(2, SAMPLE)
    expect(client.pendingCount()).toBe(2)
    now.t = 800
    sockets[0].onopen?.()
    expect(sockets[0].sent).toHaveLength(2) // both inside 1 s, both flushed
    expect(client.pendingCount()).toBe(0)
  })

  it("drops stale buffered sends after 1 s and surfaces the failure", () => {
    const now = { t: 0 }
    const { client, sockets } = makeClient(now)
    let failures = 0
    client.onSendFailure = () => failures++
    client.connect()
    client.sendStylus(1, SAMPLE)
    now.t = 1500 // past the buffer budget
    client.sendStylus(2, SAMPLE)
    expect(failures).toBeGreaterThan(0)
    sockets[0].onopen?.()
    expect(sockets[0].sent).toHaveLength(1) // only the fresh one survived
  })

  it("close notifies and marks the link down", () => {
    const { client, sockets } = makeClient({ t: 0 })
    let closed = false
    client.onClose = () => (closed = true)
    client.connect()
    sockets[0].onopen?.()
    expect(client.isOpen()).toBe(true)
    sockets[0].onclose?.()
    expect(closed).toBe(true)
    expect(client.isOpen()).toBe(false)
  })
})
