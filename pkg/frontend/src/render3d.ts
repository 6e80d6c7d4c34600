// three.js view of the SceneState: graduated axes, stylus cursor with its
// motion trail, and the arm end-effector marker.

import * as THREE from "three"
import type { SceneState } from "./scene"

const WORKSPACE_MM = 800
const TRAIL_MAX_VERTICES = 4096

export class CockpitView {
  private renderer: THREE.WebGLRenderer
  private scene = new THREE.Scene()
  private camera: THREE.PerspectiveCamera
  private cursor: THREE.Mesh
  private armMarker: THREE.Mesh
  private trailGeometry: THREE.BufferGeometry
  private trailPositions: Float32Array

  constructor(canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true })
    this.renderer.setSize(canvas.clientWidth, canvas.clientHeight, false)
    this.camera = new THREE.PerspectiveCamera(
      50,
      canvas.clientWidth / canvas.clientHeight,
      1,
      10_000
    )
    this.camera.position.set(900, -900, 700)
    this.camera.up.set(0, 0, 1)
    this.camera.lookAt(300, 0, 300)
    this.scene.background = new THREE.Color(0x10141a)

    const grid = new THREE.GridHelper(WORKSPACE_MM * 2, 16, 0x2a3442, 0x1d242e)
    grid.rotation.x = Math.PI / 2 // z-up workspace
    this.scene.add(grid)
    this.scene.add(new THREE.AxesHelper(WORKSPACE_MM))
    for (const tick of [200, 400, 600]) {
      const dot = new THREE.Mesh(
        new THREE.SphereGeometry(4),
        new THREE.MeshBasicMaterial({ color: 0x3a4656 })
      )
      dot.position.set(tick, 0, 0)
      this.scene.add(dot)
    }

    this.cursor = new THREE.Mesh(
      new THREE.SphereGeometry(10),
      new THREE.MeshBasicMaterial({ color: 0x4dd0e1 })
    )
    this.armMarker = new THREE.Mesh(
      new THREE.SphereGeometry(12),
      new THREE.MeshBasicMaterial({ color: 0xffb74d })
    )
    this.scene.add(this.cursor, this.armMarker)

    this.trailPositions = new Float32Array(TRAIL_MAX_VERTICES * 3)
    this.trailGeometry = new THREE.BufferGeometry()
    this.trailGeometry.setAttribute(
      "position",
      new THREE.BufferAttribute(this.trailPositions, 3)
    )
    const trailLine = new THREE.Line(
      this.trailGeometry,
      new THREE.LineBasicMaterial({ color: 0x4dd0e1 })
    )
    this.scene.add(trailLine)

    const light = new THREE.DirectionalLight(0xffffff, 1.0)
    light.position.set(500, -500, 1000)
    this.scene.add(light, new THREE.AmbientLight(0x667788, 0.6))
  }

  render(state: SceneState): void {
    if (state.cursor) {
      this.cursor.position.set(state.cursor.x, state.cursor.y, state.cursor.z)
    }
    if (state.arm) {
      this.armMarker.position.set(state.arm.x, state.arm.y, state.arm.z)
      ;(this.armMarker.material as THREE.MeshBasicMaterial).color.setHex(
        state.armAlarm ? 0xef5350 : 0xffb74d
      )
    }
    const vertices = state.trail.vertices().slice(-TRAIL_MAX_VERTICES)
    for (let i = 0; i < vertices.length; i++) {
      this.trailPositions[i * 3] = vertices[i].x
      this.trailPositions[i * 3 + 1] = vertices[i].y
      this.trailPositions[i * 3 + 2] = vertices[i].z
    }
    this.trailGeometry.setDrawRange(0, vertices.length)
    this.trailGeometry.attributes.position.needsUpdate = true
    this.renderer.render(this.scene, this.camera)
  }
}
