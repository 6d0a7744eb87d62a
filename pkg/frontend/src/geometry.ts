import type { GripperDims } from './types'

export type Vec3 = [number, number, number]

/** Project a grasp pose to its 5 skeleton points: gripper root, left and
 *  right finger bases, left and right finger tips.
 *
 *  Rotation is 9 reals row-major; column 0 is the baseline (finger to
 *  finger), column 2 the approach. Must stay in lockstep with the Python
 *  kernel; the golden-fixture test pins that agreement. */
export function fivePointProjection(
  rotation: number[],
  translation: number[],
  width: number,
  gripper: GripperDims,
): Vec3[] {
  const b: Vec3 = [rotation[0], rotation[3], rotation[6]]
  const a: Vec3 = [rotation[2], rotation[5], rotation[8]]
  const t = translation as Vec3
  const half = width / 2

  const point = (alongA: number, alongB: number): Vec3 => [
    t[0] + alongA * a[0] + alongB * b[0],
    t[1] + alongA * a[1] + alongB * b[1],
    t[2] + alongA * a[2] + alongB * b[2],
  ]

  return [
    point(-gripper.base_depth, 0),
    point(0, -half),
    point(0, half),
    point(gripper.finger_length, -half),
    point(gripper.finger_length, half),
  ]
}

/** Polyline segments of the skeleton: base bar, both fingers, root stem. */
export function skeletonSegments(points: Vec3[]): [Vec3, Vec3][] {
  const [root, baseL, baseR, tipL, tipR] = points
  const mid: Vec3 = [
    (baseL[0] + baseR[0]) / 2,
    (baseL[1] + baseR[1]) / 2,
    (baseL[2] + baseR[2]) / 2,
  ]
  return [
    [baseL, baseR],
    [baseL, tipL],
    [baseR, tipR],
    [root, mid],
  ]
}

// One distinct color per task, fixed across the whole UI (legend, grasp
// markers, affordance overlays).
export const TASK_COLORS: Record<string, string> = {
  Grasp: '#4e79a7',
  Wrap: '#f28e2b',
  Pour: '#59a14f',
  Contain: '#b07aa1',
  Handover: '#edc948',
  Cut: '#e15759',
  Wear: '#76b7b2',
}

export const TASK_ORDER = Object.keys(TASK_COLORS)
