// Telemetry schema shared with the gateway websocket: line-delimited JSON
// events { kind, t_ns, payload }, payload fields matching the primary-side
// CSV columns.

export type TelemetryKind = "stylus" | "arm_state" | "feedback" | "metrics" | "conn_status"

export interface StylusPayload {
  x_mm: number
  y_mm: number
  z_mm: number
  roll_deg: number
  pitch_deg: number
  yaw_deg: number
  button: number
}

export interface ArmStatePayload {
  q1: number
  q2: number
  q3: number
  q4: number
  q5: number
  q6: number
  x: number
  y: number
  z: number
  alarm: number
  queue_depth: number
}

export interface FeedbackPayload {
  ref_seq: number
  status: "EXECUTED" | "QUEUED" | "REJECTED" | "ALARM" | "QUERY_RESULT"
  detail: number
  flags: number
}

export interface MetricsPayload {
  metric: string
  value_ns: number
}

export interface ConnStatusPayload {
  endpoint: "operator" | "arm"
  connected: boolean
}

export interface TelemetryEvent {
  kind: TelemetryKind
  t_ns: number
  payload: StylusPayload | ArmStatePayload | FeedbackPayload | MetricsPayload | ConnStatusPayload
}

export interface Vec3 {
  x: number
  y: number
  z: number
}
