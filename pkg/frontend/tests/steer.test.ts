import { describe, expect, it } from "vitest"

import { Steering } from "../src/steer"

describe("Steering", () => {
  it("toggle off: dragging emits zero samples", () => {
    const steer = new Steering()
    steer.pointerDelta(50, -30)
    steer.pointerDelta(10, 5)
    for (let i = 0; i < 20; i++) {
      expect(steer.tick()).toBeNull()
    }
    expect(steer.emittedCount()).toBe(0)
  })

  it("toggle on with a stationary pointer: constant-pose samples at rate", () => {
    const steer = new Steering({ start: { x: 350, y: 0, z: 400 } })
    steer.setTransmit(true)
    const samples = []
    for (let i = 0; i < 10; i++) {
      const s = steer.tick()
      expect(s).not.toBeNull()
      samples.push(s!)
    }
    expect(steer.emittedCount()).toBe(10)
    for (const s of samples) {
      expect(s.x_mm).toBe(350)
      expect(s.y_mm).toBe(0)
      expect(s.z_mm).toBe(400)
      expect(s.button).toBe(1)
    }
  })

  it("drag maps to x/y with screen-y inverted; wheel and keys move z", () => {
    const steer = new Steering({ start: { x: 0, y: 0, z: 100 }, mmPerPixel: 1 })
    steer.pointerDelta(30, 10)
    expect(steer.pose).toEqual({ x: 30, y: -10, z: 100 })
    steer.wheel(2)
    expect(steer.pose.z).toBe(110)
    steer.keyZ(-1)
    expect(steer.pose.z).toBe(105)
  })

  it("pose clamps to the configured workspace bounds", () => {
    const steer = new Steering({
      start: { x: 0, y: 0, z: 0 },
      mmPerPixel: 1,
      bounds: { min: [-10, -10, 0], max: [10, 10, 20] },
    })
    steer.pointerDelta(500, 500)
    expect(steer.pose.x).toBe(10)
    expect(steer.pose.y).toBe(-10)
    steer.wheel(100)
    expect(steer.pose.z).toBe(20)
  })

  it("releasing the toggle stops the stream mid-flight", () => {
    const steer = new Steering()
    steer.setTransmit(true)
    expect(steer.tick()).not.toBeNull()
    steer.setTransmit(false)
    expect(steer.tick()).toBeNull()
    expect(steer.emittedCount()).toBe(1)
  })
})
