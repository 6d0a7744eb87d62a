"""Single-view labeled point cloud rendering by ray casting.

One ray per pixel through the pinhole model; the nearest triangle hit
yields a surface point, the owning placement index (0 is table or other
background geometry) and the local triangle index used for task labels.
Output order is row-major over pixels and independent of how the work is
chunked, so renders are deterministic.
"""

from dataclasses import dataclass

import numpy as np

from .catalog import CATEGORY_TASKS, CategoryUnknown
from .errors import GraspForgeError
from .meshio import TriMesh
from .scenes import Scene, catalog_as_map

_CHUNK = 16384


class InvalidCamera(GraspForgeError):
    """Camera index out of range for the scene."""


class TaskNotAllowedForCategory(GraspForgeError):
    """Asked for point labels of a task the target category cannot perform."""


@dataclass(frozen=True, eq=False)
class LabeledCloud:
    """Rendered point cloud with per-point provenance.

    object_ids: 0 = table/background, k >= 1 = scene placement k-1.
    triangle_ids: local triangle index in the owning object's mesh
    (-1 for background geometry).
    """

    scene_id: str
    camera_index: int
    frame: str
    points: np.ndarray        # (N, 3) float32
    object_ids: np.ndarray    # (N,) int32
    triangle_ids: np.ndarray  # (N,) int32

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float32).reshape(-1, 3)
        oids = np.asarray(self.object_ids, dtype=np.int32).reshape(-1)
        tids = np.asarray(self.triangle_ids, dtype=np.int32).reshape(-1)
        if not (len(pts) == len(oids) == len(tids)):
            raise ValueError("points/object_ids/triangle_ids lengths differ")
        for arr in (pts, oids, tids):
            arr.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "object_ids", oids)
        object.__setattr__(self, "triangle_ids", tids)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True, eq=False)
class PointLabels:
    """Nested per-point supervision bits: taskness => target_objectness => objectness."""

    objectness: np.ndarray
    target_objectness: np.ndarray
    taskness: np.ndarray

    def __post_init__(self):
        o = np.asarray(self.objectness, dtype=bool)
        to = np.asarray(self.target_objectness, dtype=bool)
        task = np.asarray(self.taskness, dtype=bool)
        if not (len(o) == len(to) == len(task)):
            raise ValueError("label arrays must have equal length")
        if np.any(to & ~o) or np.any(task & ~to):
            raise ValueError("label nesting violated")
        object.__setattr__(self, "objectness", o)
        object.__setattr__(self, "target_objectness", to)
        object.__setattr__(self, "taskness", task)


def _cast_mesh(cam, dirs_flat, origin, mesh, depth, hit_tri):
    """Update the depth buffer and triangle ids with nearest hits on mesh.

    Each triangle is tested only against the rays inside its projected
    pixel rectangle (projection of a triangle with positive depth is the
    triangle of its projected vertices, so the rectangle is conservative).
    Moller-Trumbore runs with a fixed ray origin, so the tvec-dependent
    terms are per-triangle constants.
    """
    tris = mesh.triangles
    v0t = tris[:, 0]
    e1 = tris[:, 1] - v0t
    e2 = tris[:, 2] - v0t
    tvec = origin - v0t
    neg_n = np.cross(e2, e1)             # det  = d . neg_n
    c_u = np.cross(e2, tvec)             # u*det = d . c_u
    q = np.cross(tvec, e1)               # v*det = d . q
    t_num = np.einsum("ij,ij->i", e2, q)  # t*det

    # Project all mesh vertices once; per-face pixel rects by gather.
    rel = (mesh.vertices - origin) @ cam.rotation
    in_front = rel[:, 2] > 1e-6
    z = np.where(in_front, rel[:, 2], 1.0)
    pu = np.where(in_front, cam.fx * rel[:, 0] / z + cam.cx, np.nan)
    pv = np.where(in_front, cam.fy * rel[:, 1] / z + cam.cy, np.nan)
    fu, fv = pu[mesh.faces], pv[mesh.faces]
    bad = ~np.all(in_front[mesh.faces], axis=1)
    u_lo = np.maximum(np.floor(fu.min(axis=1)).astype(np.int64) - 1, 0)
    u_hi = np.minimum(np.ceil(fu.max(axis=1)).astype(np.int64) + 2, cam.width)
    v_lo = np.maximum(np.floor(fv.min(axis=1)).astype(np.int64) - 1, 0)
    v_hi = np.minimum(np.ceil(fv.max(axis=1)).astype(np.int64) + 2, cam.height)
    u_lo[bad], u_hi[bad], v_lo[bad], v_hi[bad] = 0, cam.width, 0, cam.height

    changed = []
    eps = 1e-12
    for k in range(len(tris)):
        if u_lo[k] >= u_hi[k] or v_lo[k] >= v_hi[k]:
            continue
        cols = np.arange(u_lo[k], u_hi[k])
        rows = np.arange(v_lo[k], v_hi[k])
        idx = (rows[:, None] * cam.width + cols[None, :]).ravel()
        d = dirs_flat[idx]
        det = d @ neg_n[k]
        ok = np.abs(det) > 1e-14
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        u = (d @ c_u[k]) * inv
        v = (d @ q[k]) * inv
        t = t_num[k] * inv
        hit = ok & (u >= -eps) & (v >= -eps) & (u + v <= 1.0 + eps) & (t > 1e-6)
        better = hit & (t < depth[idx])
        if not better.any():
            continue
        sel = idx[better]
        depth[sel] = t[better]
        hit_tri[sel] = k
        changed.append(sel)
    return np.concatenate(changed) if changed else np.zeros(0, dtype=np.int64)


def render_cloud(scene: Scene, camera_index: int, catalog,
                 depth_noise_sigma: float = 0.0, rng=None) -> LabeledCloud:
    """Render one camera of a scene into a labeled point cloud (world frame).

    Pixels whose ray hits nothing are omitted. Optional additive depth noise
    (meters along the ray) supports robustness studies; it is off by default
    and requires an explicit rng.
    """
    if not (0 <= camera_index < len(scene.cameras)):
        raise InvalidCamera(f"camera {camera_index} not in scene {scene.scene_id}")
    cam = scene.cameras[camera_index]
    catalog_map = catalog_as_map(catalog)

    # Background geometry first so exact depth ties resolve to it stably.
    geoms: list[tuple[TriMesh, int]] = []
    if scene.table is not None:
        geoms.append((scene.table.mesh(), 0))
    for cube in scene.lift_cubes:
        geoms.append((cube.mesh(), 0))
    for i in range(len(scene.placements)):
        geoms.append((scene.posed_mesh(catalog_map, i), i + 1))

    w, h = cam.width, cam.height
    us = (np.arange(w) + 0.5 - cam.cx) / cam.fx
    vs = (np.arange(h) + 0.5 - cam.cy) / cam.fy
    uu, vv = np.meshgrid(us, vs)
    dirs_cam = np.stack([uu, vv, np.ones_like(uu)], axis=-1).reshape(-1, 3)
    dirs = dirs_cam @ cam.rotation.T
    origin = cam.translation

    depth = np.full(w * h, np.inf)
    oid = np.zeros(w * h, dtype=np.int32)
    tid = np.full(w * h, -1, dtype=np.int32)
    for mesh, obj_index in geoms:
        tri_hits = np.full(w * h, -1, dtype=np.int64)
        sel = _cast_mesh(cam, dirs, origin, mesh, depth, tri_hits)
        if len(sel):
            oid[sel] = obj_index
            tid[sel] = np.where(obj_index > 0, tri_hits[sel], -1).astype(np.int32)

    mask = np.isfinite(depth)
    t = depth[mask]
    if depth_noise_sigma > 0.0:
        if rng is None:
            raise ValueError("depth noise requires an rng for determinism")
        t = t + rng.normal(0.0, depth_noise_sigma, len(t))
    points = origin + t[:, None] * dirs[mask]
    return LabeledCloud(
        scene_id=scene.scene_id,
        camera_index=camera_index,
        frame="world",
        points=points.astype(np.float32),
        object_ids=oid[mask],
        triangle_ids=tid[mask],
    )


def compute_point_labels(cloud: LabeledCloud, scene: Scene, catalog,
                         o: str, t: str) -> PointLabels:
    """Objectness / target-objectness / taskness bits for a (cloud, o, t) query.

    Target objectness covers every instance of category o in the scene;
    taskness additionally requires the hit triangle to lie in that
    object's affordance region for t.
    """
    if o not in CATEGORY_TASKS:
        raise CategoryUnknown(f"unknown category {o!r}")
    if t not in CATEGORY_TASKS[o]:
        raise TaskNotAllowedForCategory(f"category {o} does not perform {t}")
    catalog_map = catalog_as_map(catalog)
    objectness = cloud.object_ids > 0
    target = np.zeros(len(cloud), dtype=bool)
    taskness = np.zeros(len(cloud), dtype=bool)
    for i, placement in enumerate(scene.placements):
        obj = catalog_map[placement.object_id]
        if obj.category != o:
            continue
        sel = cloud.object_ids == i + 1
        target |= sel
        region = obj.affordances.get(t, frozenset())
        if region and sel.any():
            member = np.zeros(len(obj.mesh.faces), dtype=bool)
            member[list(region)] = True
            taskness[sel] = member[cloud.triangle_ids[sel]]
    return PointLabels(objectness, target, taskness)
