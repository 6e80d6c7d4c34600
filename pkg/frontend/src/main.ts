// Wiring: websocket telemetry -> scene/status models -> three.js view,
// pointer input -> fixed-rate stylus sample stream back to the gateway.

import { CockpitView } from "./render3d"
import { SceneState } from "./scene"
import { StatusModel } from "./status"
import { Steering } from "./steer"
import { TelemetryClient } from "./telemetry"

const WS_URL =
  new URLSearchParams(location.search).get("ws") ?? "ws://127.0.0.1:8765/telemetry"

const canvas = document.getElementById("view") as HTMLCanvasElement
const statusBar = document.getElementById("status-bar") as HTMLDivElement
const bannerBox = document.getElementById("banners") as HTMLDivElement
const coordTable = document.getElementById("coords") as HTMLTableElement
const transmitBtn = document.getElementById("transmit") as HTMLButtonElement

const scene = new SceneState()
const status = new StatusModel()
const steering = new Steering({
  bounds: { min: [-800, -800, 0], max: [800, 800, 900] },
})
const view = new CockpitView(canvas)
const client = new TelemetryClient(WS_URL)

client.onOpen = () => status.socketOpened()
client.onClose = () => status.socketClosed(Date.now())
client.onSendFailure = () => status.socketClosed(Date.now())
client.onEvent = (event) => {
  const now = Date.now()
  scene.apply(event, now)
  status.apply(event, now)
}
client.connect()

// -- steering input ---------------------------------------------------------

let dragging = false
canvas.addEventListener("pointerdown", (ev) => {
  dragging = true
  canvas.setPointerCapture(ev.pointerId)
})
canvas.addEventListener("pointerup", () => (dragging = false))
canvas.addEventListener("pointermove", (ev) => {
  if (dragging) steering.pointerDelta(ev.movementX, ev.movementY)
})
canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault()
  steering.wheel(ev.deltaY > 0 ? -1 : 1)
})
window.addEventListener("keydown", (ev) => {
  if (ev.key === "PageUp") steering.keyZ(1)
  if (ev.key === "PageDown") steering.keyZ(-1)
})

let holdTimeout: number | undefined
function setTransmit(held: boolean): void {
  steering.setTransmit(held)
  transmitBtn.classList.toggle("held", held)
  transmitBtn.textContent = held ? "TRANSMITTING (release to stop)" : "hold to transmit"
}
transmitBtn.addEventListener("pointerdown", () => {
  // 5 ms debounce on the UI toggle edge
  window.clearTimeout(holdTimeout)
  holdTimeout = window.setTimeout(() => setTransmit(true), 5)
})
const releaseTransmit = () => {
  window.clearTimeout(holdTimeout)
  holdTimeout = window.setTimeout(() => setTransmit(false), 5)
}
transmitBtn.addEventListener("pointerup", releaseTransmit)
transmitBtn.addEventListener("pointerleave", releaseTransmit)

window.setInterval(() => {
  const sample = steering.tick()
  if (sample !== null) {
    client.sendStylus(Date.now() * 1_000_000, sample)
    // echo locally so the cursor stays live even before the gateway loops it back
    scene.apply(
      { kind: "stylus", t_ns: Date.now() * 1_000_000, payload: sample },
      Date.now()
    )
  }
}, steering.intervalMs)

// -- render loop --------------------------------------------------------------

function frame(): void {
  const now = Date.now()
  if (scene.isStale(now)) status.markStale(now)
  statusBar.textContent = status.statusLine()
  statusBar.className = status.connected() ? "connected" : "disconnected"
  bannerBox.innerHTML = ""
  for (const banner of status.activeBanners(now)) {
    const div = document.createElement("div")
    div.className = `banner ${banner.kind}`
    div.textContent = banner.text
    bannerBox.appendChild(div)
  }
  coordTable.innerHTML = ""
  for (const [label, value] of scene.coordinateRows()) {
    const row = coordTable.insertRow()
    row.insertCell().textContent = label
    row.insertCell().textContent = value
  }
  view.render(scene)
  requestAnimationFrame(frame)
}
requestAnimationFrame(frame)
