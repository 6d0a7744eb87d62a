"""Object catalog: meshes, per-task affordance regions, labeled grasps.

Objects carry their stable grasps in the object frame. Task labels are
derived from where each grasp touches the surface relative to the
affordance regions, then refined by human accept/reject verdicts.
"""

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .collision import closest_point_on_mesh_to_segment
from .errors import GraspForgeError
from .geometry import GraspPose, GripperSpec, five_point_projection
from .meshio import ParseError, TriMesh, load_mesh

TASKS = ("Grasp", "Wrap", "Pour", "Contain", "Handover", "Cut", "Wear")

CATEGORY_TASKS = {
    "Mug": ("Grasp", "Wrap", "Pour", "Contain"),
    "Bottle": ("Grasp", "Wrap", "Contain"),
    "Knife": ("Handover", "Cut"),
    "Hat": ("Grasp", "Wear"),
    "Bowl": ("Grasp", "Wrap"),
    "Scissor": ("Handover", "Cut"),
}

CATEGORIES = tuple(CATEGORY_TASKS)

# Categories that get a cube placed underneath them in scenes.
SMALL_CATEGORIES = ("Knife", "Scissor")

VERDICT_ACCEPTED = "accepted"
VERDICT_REJECTED = "rejected"
VERDICT_UNREVIEWED = "unreviewed"

AFFORDANCE_SNAP_RADIUS = 0.005  # meters; absorbs mesh discretization
_MIN_TRIANGLE_AREA = 1e-12      # square meters
_DIAMETER_RANGE = (0.01, 2.0)   # meters, sane desk-object sizes


class UnitError(GraspForgeError):
    """Mesh scale produces a diameter outside plausible object sizes."""


class CategoryUnknown(GraspForgeError):
    """Category name not present in the category/task table."""


class NoContact(GraspForgeError):
    """The gripper closing segment misses the object entirely."""


class UnknownGrasp(GraspForgeError):
    """grasp_id not present on the object."""


class TaskNotAssigned(GraspForgeError):
    """Verdict for a task the grasp does not carry."""


@dataclass(frozen=True, eq=False)
class AnnotatedGrasp:
    grasp_id: str
    pose: GraspPose
    tasks: frozenset
    verdicts: dict  # task -> accepted | rejected | unreviewed

    def effective_tasks(self) -> frozenset:
        """Tasks that survive verdicts (accepted or unreviewed)."""
        return frozenset(
            t for t in self.tasks if self.verdicts.get(t, VERDICT_UNREVIEWED) != VERDICT_REJECTED
        )


@dataclass(frozen=True, eq=False)
class ObjectModel:
    id: str
    category: str
    mesh: TriMesh
    scale: float
    affordances: dict  # task -> frozenset of triangle indices
    grasps: tuple

    def __post_init__(self):
        if self.category not in CATEGORY_TASKS:
            raise CategoryUnknown(f"unknown category {self.category!r}")
        allowed = set(CATEGORY_TASKS[self.category])
        if len(self.mesh.faces) == 0:
            raise ParseError(f"{self.id}: mesh has no triangles")
        if self.mesh.triangle_areas().min() <= _MIN_TRIANGLE_AREA:
            raise ParseError(f"{self.id}: mesh contains degenerate triangles")
        for task, tris in self.affordances.items():
            if task not in allowed:
                raise ParseError(f"{self.id}: task {task!r} not allowed for {self.category}")
            idx = np.fromiter(tris, dtype=np.int64) if tris else np.empty(0, dtype=np.int64)
            if len(idx) and (idx.min() < 0 or idx.max() >= len(self.mesh.faces)):
                raise ParseError(f"{self.id}: affordance triangle index out of range")
        for g in self.grasps:
            if not set(g.tasks) <= allowed:
                raise ParseError(f"{self.id}: grasp {g.grasp_id} carries disallowed tasks")

    def grasp_by_id(self, grasp_id: str) -> AnnotatedGrasp:
        for g in self.grasps:
            if g.grasp_id == grasp_id:
                return g
        raise UnknownGrasp(f"{self.id}: no grasp {grasp_id!r}")


def load_object(mesh_source, category: str, affordance_source=None, grasp_source=None,
                object_id: str | None = None, scale: float = 1.0) -> ObjectModel:
    """Build a validated ObjectModel from mesh/affordance/grasp files.

    Grasps come in with empty task sets and unreviewed verdicts; run
    assign_task_labels afterwards. affordance_source and grasp_source may
    be None for bare meshes.
    """
    if category not in CATEGORY_TASKS:
        raise CategoryUnknown(f"unknown category {category!r}")
    mesh = load_mesh(mesh_source)
    if scale != 1.0:
        mesh = TriMesh(mesh.vertices * float(scale), mesh.faces)
    diameter = mesh.diameter()
    if not (_DIAMETER_RANGE[0] <= diameter <= _DIAMETER_RANGE[1]):
        raise UnitError(
            f"mesh diameter {diameter:.4g} m outside {_DIAMETER_RANGE}; check units/scale"
        )
    affordances = _load_affordances(affordance_source, len(mesh.faces)) if affordance_source else {}
    grasps = _load_grasps(grasp_source) if grasp_source else ()
    return ObjectModel(
        id=object_id or Path(mesh_source).stem,
        category=category,
        mesh=mesh,
        scale=float(scale),
        affordances=affordances,
        grasps=grasps,
    )


def _load_affordances(path, n_faces: int) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot parse affordance file {path}: {exc}") from exc
    regions = data.get("regions")
    if not isinstance(regions, dict):
        raise ParseError(f"{path}: expected top-level 'regions' mapping")
    out = {}
    for task, indices in regions.items():
        if task not in TASKS:
            raise ParseError(f"{path}: unknown task {task!r}")
        try:
            idx = [int(i) for i in indices]
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{path}: bad index list for {task!r}") from exc
        if any(i < 0 or i >= n_faces for i in idx):
            raise ParseError(f"{path}: triangle index out of range for {task!r}")
        out[task] = frozenset(idx)
    return out


def _load_grasps(path) -> tuple:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot parse grasp file {path}: {exc}") from exc
    records = data.get("grasps")
    if not isinstance(records, list):
        raise ParseError(f"{path}: expected top-level 'grasps' list")
    grasps = []
    for rec in records:
        try:
            pose = GraspPose(
                np.array(rec["rotation"], dtype=float).reshape(3, 3),
                np.array(rec["translation"], dtype=float),
                float(rec["width"]),
            )
            grasp_id = str(rec["grasp_id"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}: malformed grasp record: {exc}") from exc
        grasps.append(AnnotatedGrasp(grasp_id, pose, frozenset(), {}))
    return tuple(grasps)


def grasp_point(g: GraspPose, obj: ObjectModel, spec: GripperSpec) -> np.ndarray:
    """Object-frame surface point nearest to the fingertip-to-fingertip segment.

    Raises NoContact when the nearest surface point is farther than the
    gripper's max width from the closing segment.
    """
    points = five_point_projection(g, spec)
    surface, dist = closest_point_on_mesh_to_segment(obj.mesh, points[3], points[4])
    if dist > spec.max_width:
        raise NoContact(f"grasp misses {obj.id}: nearest surface {dist:.3f} m away")
    return surface


def assign_task_labels(obj: ObjectModel, spec: GripperSpec) -> ObjectModel:
    """Label every grasp with the tasks whose affordance region it touches.

    A task applies when the grasp point lies on a region triangle or within
    the snap radius of one. Grasps that miss the object get empty task sets.
    Existing verdicts are kept for tasks that remain assigned.
    """
    region_meshes = {
        task: TriMesh(obj.mesh.vertices, obj.mesh.faces[sorted(tris)])
        for task, tris in obj.affordances.items() if tris
    }
    new_grasps = []
    for g in obj.grasps:
        try:
            point = grasp_point(g.pose, obj, spec)
        except NoContact:
            new_grasps.append(replace(g, tasks=frozenset(), verdicts={}))
            continue
        tasks = set()
        for task, region in region_meshes.items():
            _, dist = closest_point_on_mesh_to_segment(region, point, point)
            if dist <= AFFORDANCE_SNAP_RADIUS:
                tasks.add(task)
        verdicts = {t: g.verdicts.get(t, VERDICT_UNREVIEWED) for t in tasks}
        new_grasps.append(replace(g, tasks=frozenset(tasks), verdicts=verdicts))
    return replace(obj, grasps=tuple(new_grasps))


def apply_verdict(obj: ObjectModel, grasp_id: str, task: str, verdict: str) -> ObjectModel:
    """Record a human verdict for one (grasp, task) label; idempotent."""
    if verdict not in (VERDICT_ACCEPTED, VERDICT_REJECTED):
        raise ValueError(f"verdict must be accepted or rejected, got {verdict!r}")
    target = obj.grasp_by_id(grasp_id)
    if task not in target.tasks:
        raise TaskNotAssigned(f"{obj.id}/{grasp_id}: task {task!r} not assigned")
    new_grasps = tuple(
        replace(g, verdicts={**g.verdicts, task: verdict}) if g.grasp_id == grasp_id else g
        for g in obj.grasps
    )
    return replace(obj, grasps=new_grasps)
