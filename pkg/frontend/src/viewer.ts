import * as THREE from 'three'
import { OrbitControls } from 'three/examples/jsm/controls/OrbitControls.js'

import { TASK_COLORS, fivePointProjection, skeletonSegments } from './geometry'
import type { ObjectDetail } from './types'

/** 3D view of one object: shaded mesh, per-task affordance overlays, the
 *  rendered preview cloud, and one 5-point skeleton polyline per grasp
 *  colored by task. */
export class ObjectViewer {
  private renderer: THREE.WebGLRenderer
  private scene = new THREE.Scene()
  private camera: THREE.PerspectiveCamera
  private controls: OrbitControls
  private content = new THREE.Group()
  private skeletons = new Map<string, THREE.Group>()

  constructor(container: HTMLElement) {
    this.renderer = new THREE.WebGLRenderer({ antialias: true })
    this.renderer.setSize(container.clientWidth, container.clientHeight)
    container.appendChild(this.renderer.domElement)
    this.camera = new THREE.PerspectiveCamera(
      50, container.clientWidth / container.clientHeight, 0.001, 10)
    this.camera.position.set(0.25, 0.2, 0.25)
    this.camera.up.set(0, 0, 1)
    this.controls = new OrbitControls(this.camera, this.renderer.domElement)
    this.scene.background = new THREE.Color('#15181d')
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.55))
    const key = new THREE.DirectionalLight(0xffffff, 1.0)
    key.position.set(1, 0.6, 1.2)
    this.scene.add(key)
    this.scene.add(this.content)
    const animate = () => {
      requestAnimationFrame(animate)
      this.controls.update()
      this.renderer.render(this.scene, this.camera)
    }
    animate()
    new ResizeObserver(() => {
      this.renderer.setSize(container.clientWidth, container.clientHeight)
      this.camera.aspect = container.clientWidth / container.clientHeight
      this.camera.updateProjectionMatrix()
    }).observe(container)
  }

  show(detail: ObjectDetail, visibleTasks: Set<string>): void {
    this.content.clear()
    this.skeletons.clear()

    const vertices = new Float32Array(detail.mesh.vertices.flat())
    const geometry = new THREE.BufferGeometry()
    geometry.setAttribute('position', new THREE.BufferAttribute(vertices, 3))
    geometry.setIndex(detail.mesh.faces.flat())
    geometry.computeVertexNormals()
    const mesh = new THREE.Mesh(geometry, new THREE.MeshLambertMaterial({
      color: '#8a93a5', side: THREE.DoubleSide,
    }))
    this.content.add(mesh)

    // Affordance overlays: the region's triangles, nudged along the view
    // normal so they read on top of the base mesh.
    for (const [task, faceIdx] of Object.entries(detail.affordances)) {
      if (!visibleTasks.has(task) || faceIdx.length === 0) continue
      const tris = new Float32Array(faceIdx.length * 9)
      faceIdx.forEach((f, k) => {
        const face = detail.mesh.faces[f]
        for (let c = 0; c < 3; c += 1) {
          const v = detail.mesh.vertices[face[c]]
          tris.set(v, k * 9 + c * 3)
        }
      })
      const regionGeo = new THREE.BufferGeometry()
      regionGeo.setAttribute('position', new THREE.BufferAttribute(tris, 3))
      regionGeo.computeVertexNormals()
      const region = new THREE.Mesh(regionGeo, new THREE.MeshBasicMaterial({
        color: TASK_COLORS[task],
        transparent: true,
        opacity: 0.45,
        side: THREE.DoubleSide,
        depthWrite: false,
        polygonOffset: true,
        polygonOffsetFactor: -2,
      }))
      this.content.add(region)
    }

    if (detail.cloud.points.length > 0) {
      const pts = new Float32Array(detail.cloud.points.flat())
      const cloudGeo = new THREE.BufferGeometry()
      cloudGeo.setAttribute('position', new THREE.BufferAttribute(pts, 3))
      this.content.add(new THREE.Points(cloudGeo, new THREE.PointsMaterial({
        color: '#5c6470', size: 0.0015,
      })))
    }

    for (const grasp of detail.grasps) {
      const tasks = grasp.tasks.filter((t) => visibleTasks.has(t))
      if (tasks.length === 0) continue
      const group = new THREE.Group()
      const points = fivePointProjection(
        grasp.rotation, grasp.translation, grasp.width, detail.gripper)
      tasks.forEach((task, rank) => {
        // multi-task grasps draw one skeleton per task, slightly offset
        const offset = rank * 0.0012
        const positions: number[] = []
        for (const [p, q] of skeletonSegments(points)) {
          positions.push(p[0], p[1], p[2] + offset, q[0], q[1], q[2] + offset)
        }
        const lineGeo = new THREE.BufferGeometry()
        lineGeo.setAttribute('position',
          new THREE.BufferAttribute(new Float32Array(positions), 3))
        group.add(new THREE.LineSegments(lineGeo, new THREE.LineBasicMaterial({
          color: TASK_COLORS[task], linewidth: 2,
        })))
      })
      this.content.add(group)
      this.skeletons.set(grasp.grasp_id, group)
    }

    geometry.computeBoundingSphere()
    const sphere = geometry.boundingSphere
    if (sphere) {
      this.controls.target.copy(sphere.center)
      const d = Math.max(sphere.radius * 3.2, 0.15)
      this.camera.position.set(sphere.center.x + d * 0.8,
        sphere.center.y + d * 0.55, sphere.center.z + d * 0.7)
    }
  }

  /** Dim every skeleton except the selected grasp. */
  highlight(graspId: string | null): void {
    for (const [id, group] of this.skeletons) {
      const dim = graspId !== null && id !== graspId
      group.traverse((node) => {
        const line = node as THREE.LineSegments
        const material = line.material as THREE.LineBasicMaterial | undefined
        if (material) {
          material.transparent = dim
          material.opacity = dim ? 0.25 : 1.0
        }
      })
    }
  }
}
