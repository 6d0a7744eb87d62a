"""Cluttered tabletop scene generation and grasp propagation.

Objects are drawn from the catalog, dropped at 2D-Gaussian locations
around the table center with uniform yaw, and rejected until the whole
configuration is collision-free. Small objects (knives, scissors) sit on
a 5 cm cube. Object-frame grasps propagate into the scene frame through
the placement poses, dropping any grasp whose gripper model collides
with scene geometry other than its own object.

Scene generation is embarrassingly parallel: every scene derives its own
sub-seed from (master seed, scene index) through a splitmix64-style
mixer, so serial and parallel runs agree bit for bit.
"""

import math
from dataclasses import dataclass

import numpy as np

from .catalog import SMALL_CATEGORIES, AnnotatedGrasp, ObjectModel
from .collision import check_mesh_collision, meshes_collide_or_contain
from .errors import GraspForgeError
from .geometry import GraspPose, GripperSpec, is_rotation, rotation_z
from .meshio import TriMesh, box_mesh, oriented_box_mesh

LIFT_CUBE_EDGE = 0.05

DEFAULT_SIGMA = 0.12
DEFAULT_MAX_ATTEMPTS = 50


class CatalogTooSmall(GraspForgeError):
    """Catalog has too few objects or categories to build a scene."""


class PlacementFailed(GraspForgeError):
    """An object could not be placed collision-free within max_attempts."""

    def __init__(self, object_id: str, attempts: int):
        super().__init__(f"could not place {object_id!r} after {attempts} attempts")
        self.object_id = object_id


class UnknownObject(GraspForgeError):
    """Referenced object is not part of the scene or catalog."""


@dataclass(frozen=True)
class TableSpec:
    half_extents: tuple = (0.3, 0.3)
    top_z: float = 0.75
    thickness: float = 0.04

    def mesh(self) -> TriMesh:
        hx, hy = self.half_extents
        return box_mesh(
            (2.0 * hx, 2.0 * hy, self.thickness),
            center=(0.0, 0.0, self.top_z - 0.5 * self.thickness),
        )


@dataclass(frozen=True, eq=False)
class Placement:
    object_id: str
    rotation: np.ndarray
    translation: np.ndarray
    lifted: bool

    def __post_init__(self):
        r = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        if not is_rotation(r):
            raise ValueError("placement rotation must be a proper rotation")
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)


@dataclass(frozen=True, eq=False)
class LiftCube:
    center: np.ndarray
    edge: float = LIFT_CUBE_EDGE

    def __post_init__(self):
        c = np.array(self.center, dtype=float).reshape(3)
        c.setflags(write=False)
        object.__setattr__(self, "center", c)

    def mesh(self) -> TriMesh:
        return box_mesh((self.edge,) * 3, center=self.center)


@dataclass(frozen=True, eq=False)
class CameraSpec:
    """Pinhole camera; rotation/translation are the camera-to-world pose.

    Camera axes follow the usual depth-sensor convention: +z forward
    (optical axis), +x right, +y down in the image.
    """

    rotation: np.ndarray
    translation: np.ndarray
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        r = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        if not is_rotation(r):
            raise ValueError("camera rotation must be a proper rotation")
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (self.width > 0 and self.height > 0):
            raise ValueError("resolution must be positive")
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    def project(self, point) -> tuple[float, float, float]:
        """World point to (u, v, camera depth)."""
        p = self.rotation.T @ (np.asarray(point, dtype=float) - self.translation)
        return (
            float(self.fx * p[0] / p[2] + self.cx),
            float(self.fy * p[1] / p[2] + self.cy),
            float(p[2]),
        )


@dataclass(frozen=True, eq=False)
class Scene:
    scene_id: str
    table: TableSpec | None
    placements: tuple
    lift_cubes: tuple
    cameras: tuple

    def __post_init__(self):
        ids = [p.object_id for p in self.placements]
        if len(set(ids)) != len(ids):
            raise ValueError("placements must have unique object ids")

    def placement_index(self, object_id: str) -> int:
        for i, p in enumerate(self.placements):
            if p.object_id == object_id:
                return i
        raise UnknownObject(f"{object_id!r} not placed in scene {self.scene_id}")

    def posed_mesh(self, catalog_map: dict, index: int) -> TriMesh:
        p = self.placements[index]
        return catalog_map[p.object_id].mesh.transformed(p.rotation, p.translation)


def catalog_as_map(catalog) -> dict:
    if isinstance(catalog, dict):
        return catalog
    return {obj.id: obj for obj in catalog}


# ---------------------------------------------------------------------------
# Seeding
# ---------------------------------------------------------------------------

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def mix_seed(master_seed: int, *indices: int) -> int:
    """Derive an independent 64-bit sub-seed from a master seed and indices."""
    h = _splitmix64(master_seed & _MASK64)
    for i in indices:
        h = _splitmix64(h ^ (i & _MASK64))
    return h


# ---------------------------------------------------------------------------
# Object-set sampling and placement
# ---------------------------------------------------------------------------

def _sample_object_set(catalog, rng) -> list:
    catalog = list(catalog)
    categories = {}
    for obj in catalog:
        categories.setdefault(obj.category, []).append(obj)
    if len(catalog) < 3 or len(categories) < 2:
        raise CatalogTooSmall(
            f"need >= 3 objects over >= 2 categories, have {len(catalog)} over {len(categories)}"
        )
    n = min(int(rng.integers(3, 7)), len(catalog))
    # One object per category first (category diversity), then fill with the
    # remaining unused objects.
    cat_names = sorted(categories)
    order = rng.permutation(len(cat_names))
    chosen = []
    used = set()
    for k in order:
        if len(chosen) == n:
            break
        group = categories[cat_names[k]]
        obj = group[int(rng.integers(0, len(group)))]
        chosen.append(obj)
        used.add(obj.id)
    rest = [o for o in catalog if o.id not in used]
    perm = rng.permutation(len(rest))
    for k in perm:
        if len(chosen) == n:
            break
        chosen.append(rest[int(k)])
    return chosen


def sample_object_set(catalog, rng_seed: int) -> list:
    """Pick 3-6 distinct objects spanning at least two categories."""
    return _sample_object_set(catalog, np.random.default_rng(rng_seed & _MASK64))


def _try_place(obj: ObjectModel, table: TableSpec, sigma: float, rng,
               placed_parts: list) -> tuple[Placement, LiftCube | None] | None:
    x, y = rng.normal(0.0, sigma, 2)
    yaw = rng.uniform(0.0, 2.0 * math.pi)
    rot = rotation_z(yaw)
    lifted = obj.category in SMALL_CATEGORIES
    support = table.top_z + (LIFT_CUBE_EDGE if lifted else 0.0)
    min_z = (obj.mesh.vertices @ rot.T)[:, 2].min()
    translation = np.array([x, y, support - min_z])
    mesh_w = obj.mesh.transformed(rot, translation)
    lo, hi = mesh_w.aabb()
    hx, hy = table.half_extents
    if lo[0] < -hx or hi[0] > hx or lo[1] < -hy or hi[1] > hy:
        return None
    cube = LiftCube(np.array([x, y, table.top_z + 0.5 * LIFT_CUBE_EDGE])) if lifted else None
    parts = [mesh_w] + ([cube.mesh()] if cube else [])
    for other in placed_parts:
        for part in parts:
            if meshes_collide_or_contain(part, other):
                return None
    placement = Placement(obj.id, rot, translation, lifted)
    placed_parts.extend(parts)
    return placement, cube


def _place_objects(objects, table: TableSpec, sigma: float, max_attempts: int, rng,
                   scene_id: str) -> Scene:
    placements, cubes = [], []
    placed_parts: list[TriMesh] = []
    for obj in objects:
        for _ in range(max_attempts):
            result = _try_place(obj, table, sigma, rng, placed_parts)
            if result is not None:
                placement, cube = result
                placements.append(placement)
                if cube is not None:
                    cubes.append(cube)
                break
        else:
            raise PlacementFailed(obj.id, max_attempts)
    return Scene(scene_id, table, tuple(placements), tuple(cubes), ())


def place_objects(objects, table: TableSpec, sigma: float = DEFAULT_SIGMA,
                  max_attempts: int = DEFAULT_MAX_ATTEMPTS, rng_seed: int = 0,
                  scene_id: str = "scene") -> Scene:
    """Sequentially drop objects at Gaussian locations until collision-free.

    Each candidate pose is (x, y) ~ N(table center, sigma^2), yaw uniform,
    resting z from the lowest rotated vertex; knives and scissors rest on a
    5 cm lift cube. Candidates colliding with any already-placed geometry
    (or hanging off the table) are resampled up to max_attempts.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    rng = np.random.default_rng(rng_seed & _MASK64)
    return _place_objects(objects, table, sigma, max_attempts, rng, scene_id)


# ---------------------------------------------------------------------------
# Cameras
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CameraConfig:
    count: int = 2
    elevation_deg: tuple = (35.0, 55.0)
    min_azimuth_separation_deg: float = 60.0
    distance: tuple = (0.8, 1.2)
    fx: float = 280.0
    fy: float = 280.0
    width: int = 320
    height: int = 240


def look_at_camera(position, target, cfg: CameraConfig) -> CameraSpec:
    position = np.asarray(position, dtype=float)
    target = np.asarray(target, dtype=float)
    z = target - position
    z = z / np.linalg.norm(z)
    x = np.cross(z, np.array([0.0, 0.0, 1.0]))
    nx = np.linalg.norm(x)
    if nx < 1e-9:  # looking straight down; pick an arbitrary horizontal right
        x = np.array([1.0, 0.0, 0.0])
    else:
        x = x / nx
    y = np.cross(z, x)
    rot = np.column_stack([x, y, z])
    return CameraSpec(rot, position, cfg.fx, cfg.fy, cfg.width / 2.0, cfg.height / 2.0,
                      cfg.width, cfg.height)


def _sample_cameras(table: TableSpec, rng, cfg: CameraConfig) -> tuple:
    center = np.array([0.0, 0.0, table.top_z])
    sep = math.radians(cfg.min_azimuth_separation_deg)
    azimuths = [rng.uniform(0.0, 2.0 * math.pi)]
    while len(azimuths) < cfg.count:
        azimuths.append(azimuths[0] + rng.uniform(sep, 2.0 * math.pi - sep))
    cams = []
    for az in azimuths:
        elev = math.radians(rng.uniform(*cfg.elevation_deg))
        dist = rng.uniform(*cfg.distance)
        offset = dist * np.array([
            math.cos(elev) * math.cos(az),
            math.cos(elev) * math.sin(az),
            math.sin(elev),
        ])
        cams.append(look_at_camera(center + offset, center, cfg))
    return tuple(cams)


def sample_cameras(table: TableSpec, rng_seed: int, cfg: CameraConfig | None = None) -> tuple:
    return _sample_cameras(table, np.random.default_rng(rng_seed & _MASK64),
                           cfg or CameraConfig())


def generate_scene(catalog, master_seed: int, index: int, table: TableSpec | None = None,
                   sigma: float = DEFAULT_SIGMA, max_attempts: int = DEFAULT_MAX_ATTEMPTS,
                   camera_cfg: CameraConfig | None = None, max_retries: int = 20) -> Scene:
    """Build scene `index` of a deterministic sequence under master_seed.

    A placement failure deterministically re-derives the scene from a
    bumped retry counter, so a fixed (seed, index) always yields the same
    scene regardless of how many siblings are generated or on which thread.
    """
    table = table or TableSpec()
    camera_cfg = camera_cfg or CameraConfig()
    last: PlacementFailed | None = None
    for retry in range(max_retries):
        rng = np.random.default_rng(mix_seed(master_seed, index, retry))
        objects = _sample_object_set(catalog, rng)
        try:
            scene = _place_objects(objects, table, sigma, max_attempts, rng,
                                   f"scene_{index:05d}")
        except PlacementFailed as exc:
            last = exc
            continue
        cameras = _sample_cameras(table, rng, camera_cfg)
        return Scene(scene.scene_id, table, scene.placements, scene.lift_cubes, cameras)
    raise last if last is not None else PlacementFailed(f"scene_{index:05d}", max_attempts)


# ---------------------------------------------------------------------------
# Gripper collision model and grasp propagation
# ---------------------------------------------------------------------------

def gripper_boxes(g: GraspPose, spec: GripperSpec) -> list[TriMesh]:
    """Open-gripper model: two finger boxes plus a base box, posed by g."""
    rot = g.rotation
    t = g.translation
    a = g.approach
    b = g.baseline
    half_f = np.array([spec.finger_thickness / 2.0, spec.finger_thickness / 2.0,
                       spec.finger_length / 2.0])
    offset = 0.5 * g.width + 0.5 * spec.finger_thickness
    mid = 0.5 * spec.finger_length
    left = oriented_box_mesh(t - offset * b + mid * a, rot, half_f)
    right = oriented_box_mesh(t + offset * b + mid * a, rot, half_f)
    half_base = np.array([0.5 * g.width + spec.finger_thickness,
                          spec.finger_thickness / 2.0, spec.base_depth / 2.0])
    base = oriented_box_mesh(t - 0.5 * spec.base_depth * a, rot, half_base)
    return [left, right, base]


def _scene_obstacles(scene: Scene, catalog_map: dict, exclude_index: int | None) -> list[TriMesh]:
    parts = []
    if scene.table is not None:
        parts.append(scene.table.mesh())
    parts.extend(c.mesh() for c in scene.lift_cubes)
    for i in range(len(scene.placements)):
        if i != exclude_index:
            parts.append(scene.posed_mesh(catalog_map, i))
    return parts


def _boxes_hit_parts(boxes, parts) -> bool:
    return any(meshes_collide_or_contain(box, part) for box in boxes for part in parts)


def gripper_collides(g: GraspPose, scene: Scene, catalog, spec: GripperSpec,
                     exclude_object: str) -> bool:
    """True iff the gripper posed at g hits the table, a lift cube, or any
    object mesh other than exclude_object."""
    catalog_map = catalog_as_map(catalog)
    idx = scene.placement_index(exclude_object)
    return _boxes_hit_parts(gripper_boxes(g, spec), _scene_obstacles(scene, catalog_map, idx))


def propagate_grasps(scene: Scene, catalog, spec: GripperSpec) -> dict:
    """Object-frame grasps into scene frame, collision-filtered.

    Returns {object_id: [AnnotatedGrasp in scene frame]}. Only grasps with
    at least one non-rejected task are propagated; their task sets are
    restricted to accepted/unreviewed verdicts.
    """
    catalog_map = catalog_as_map(catalog)
    out = {}
    for idx, pl in enumerate(scene.placements):
        if pl.object_id not in catalog_map:
            raise UnknownObject(f"{pl.object_id!r} missing from catalog")
        obj = catalog_map[pl.object_id]
        obstacles = _scene_obstacles(scene, catalog_map, idx)
        kept = []
        for g in obj.grasps:
            tasks = g.effective_tasks()
            if not tasks:
                continue
            pose = g.pose.transformed(pl.rotation, pl.translation)
            if _boxes_hit_parts(gripper_boxes(pose, spec), obstacles):
                continue
            verdicts = {t: g.verdicts.get(t, "unreviewed") for t in tasks}
            kept.append(AnnotatedGrasp(g.grasp_id, pose, tasks, verdicts))
        out[pl.object_id] = kept
    return out
