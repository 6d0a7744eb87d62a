// Payload shapes of the review service JSON API.

export type Verdict = 'accepted' | 'rejected'
export type VerdictState = Verdict | 'unreviewed'

export interface LabelCounts {
  unreviewed: number
  accepted: number
  rejected: number
}

export interface ObjectSummary {
  object_id: string
  category: string
  labels: LabelCounts
}

export interface ObjectListResponse {
  format_version: number
  objects: ObjectSummary[]
}

export interface GripperDims {
  max_width: number
  finger_length: number
  base_depth: number
  finger_thickness: number
}

export interface GraspEntry {
  grasp_id: string
  rotation: number[]      // 9 reals, row-major
  translation: number[]   // 3 reals, meters
  width: number
  tasks: string[]
  verdicts: Record<string, VerdictState>
  five_points: number[][] // server-side skeleton, cross-checked in tests
}

export interface ObjectDetail {
  format_version: number
  object_id: string
  category: string
  gripper: GripperDims
  mesh: { vertices: number[][]; faces: number[][]; decimated: boolean }
  affordances: Record<string, number[]>
  grasps: GraspEntry[]
  cloud: { points: number[][] }
}

export interface VerdictRequest {
  grasp_id: string
  task: string
  verdict: Verdict
  reviewer: string
}

export interface VerdictRecord extends VerdictRequest {
  object_id: string
  timestamp: number
}

export interface ExportedGrasp {
  grasp_id: string
  rotation: number[]
  translation: number[]
  width: number
  tasks: string[]
}

export interface ExportResponse {
  format_version: number
  objects: { object_id: string; category: string; grasps: ExportedGrasp[] }[]
}
