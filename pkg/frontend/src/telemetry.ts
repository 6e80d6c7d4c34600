// Websocket client for the gateway /telemetry endpoint.
//
// One bidirectional socket: telemetry events arrive as JSON text frames;
// stylus samples go back the same way.  Sends made while the socket is down
// are buffered for up to one second, after which the buffered samples are
// dropped and the failure surfaces as a connection-loss notification.

import type { StylusPayload, TelemetryEvent } from "./types"

export interface SocketLike {
  onopen: (() => void) | null
  onclose: (() => void) | null
  onmessage: ((ev: { data: string }) => void) | null
  send(data: string): void
  close(): void
}

export type SocketFactory = (url: string) => SocketLike

export interface TelemetryClientOptions {
  socketFactory?: SocketFactory
  now?: () => number
  sendBufferMs?: number
}

interface PendingSend {
  text: string
  queuedAtMs: number
}

export class TelemetryClient {
  onEvent: ((event: TelemetryEvent) => void) | null = null
  onOpen: (() => void) | null = null
  onClose: (() => void) | null = null
  onSendFailure: (() => void) | null = null

  private socket: SocketLike | null = null
  private open = false
  private pending: PendingSend[] = []
  private readonly makeSocket: SocketFactory
  private readonly now: () => number
  private readonly sendBufferMs: number

  constructor(readonly url: string, opts: TelemetryClientOptions = {}) {
    this.makeSocket =
      opts.socketFactory ?? ((u) => new WebSocket(u) as unknown as SocketLike)
    this.now = opts.now ?? (() => Date.now())
    this.sendBufferMs = opts.sendBufferMs ?? 1000
  }

  connect(): void {
    const sock = this.makeSocket(this.url)
    this.socket = sock
    sock.onopen = () => {
      this.open = true
      this.flushPending()
      this.onOpen?.()
    }
    sock.onclose = () => {
      this.open = false
      this.socket = null
      this.onClose?.()
    }
    sock.onmessage = (ev) => {
      let event: TelemetryEvent
      try {
        event = JSON.parse(ev.data)
      } catch {
        return // garbage frame: ignore rather than kill the stream
      }
      if (event && typeof event.kind === "string") this.onEvent?.(event)
    }
  }

  disconnect(): void {
    this.socket?.close()
    this.socket = null
    this.open = false
  }

  isOpen(): boolean {
    return this.open
  }

  /** Send one stylus sample; buffered up to sendBufferMs while reconnecting. */
  sendStylus(t_ns: number, payload: StylusPayload): void {
    const text = JSON.stringify({ kind: "stylus", t_ns, payload })
    this.expirePending()
    if (this.open && this.socket) {
      try {
        this.socket.send(text)
        return
      } catch {
        this.open = false
      }
    }
    this.pending.push({ text, queuedAtMs: this.now() })
  }

  private flushPending(): void {
    this.expirePending()
    if (!this.socket) return
    for (const item of this.pending) this.socket.send(item.text)
    this.pending = []
  }

  private expirePending(): void {
    const cutoff = this.now() - this.sendBufferMs
    const before = this.pending.length
    this.pending = this.pending.filter((p) => p.queuedAtMs > cutoff)
    if (before > 0 && this.pending.length < before) {
      this.onSendFailure?.()
    }
  }

  pendingCount(): number {
    return this.pending.length
  }
}
