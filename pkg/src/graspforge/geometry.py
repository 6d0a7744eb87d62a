"""Rigid grasp geometry for a parallel-yaw gripper.

Rotations are plain 3x3 numpy arrays restricted to proper rotations.
Column convention: x = baseline (finger-to-finger), z = approach
(gripper forward), y = approach x baseline. A 6-DoF grasp is a rotation,
a translation in meters and a jaw opening width.

All functions here are pure and operate on immutable values; they are
safe to call concurrently from any number of threads.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import GraspForgeError

ORTHONORMAL_TOL = 1e-9
_DEGENERATE_EPS = 1e-8


class DegenerateVectors(GraspForgeError):
    """Inputs too short or too parallel to orthonormalize."""


class NotOrthonormal(GraspForgeError):
    """A claimed orthonormal pair or rotation fails its invariant."""


class WidthExceedsSpec(GraspForgeError):
    """Grasp width larger than the gripper's maximum opening."""


class EmptyGroundTruth(GraspForgeError):
    """A weighted prediction has no ground-truth set to match against."""


def is_rotation(m: np.ndarray, tol: float = ORTHONORMAL_TOL) -> bool:
    """True iff m is a proper rotation (orthonormal, det +1) within tol."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        return False
    if not np.all(np.isfinite(m)):
        return False
    err = np.abs(m.T @ m - np.eye(3)).max()
    return err < tol and abs(np.linalg.det(m) - 1.0) < tol


@dataclass(frozen=True)
class GripperSpec:
    """Parallel-yaw gripper dimensions used for projections and collision boxes."""

    max_width: float = 0.08
    finger_length: float = 0.046
    base_depth: float = 0.02
    finger_thickness: float = 0.01

    def __post_init__(self):
        for name in ("max_width", "finger_length", "base_depth", "finger_thickness"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.max_width > 2.0 * self.finger_thickness:
            raise ValueError("max_width must exceed twice the finger thickness")


@dataclass(frozen=True, eq=False)
class GraspPose:
    """A 6-DoF gripper pose (element of SE(3)) plus jaw opening width."""

    rotation: np.ndarray
    translation: np.ndarray
    width: float

    def __post_init__(self):
        r = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        if not is_rotation(r):
            raise NotOrthonormal("rotation is not a proper rotation matrix")
        if not np.all(np.isfinite(t)):
            raise ValueError("translation must be finite")
        if not (math.isfinite(self.width) and self.width >= 0.0):
            raise ValueError("width must be finite and non-negative")
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "width", float(self.width))

    @property
    def approach(self) -> np.ndarray:
        return self.rotation[:, 2]

    @property
    def baseline(self) -> np.ndarray:
        return self.rotation[:, 0]

    def transformed(self, rotation: np.ndarray, translation: np.ndarray) -> "GraspPose":
        """This pose after the rigid transform x -> rotation @ x + translation."""
        rotation = np.asarray(rotation, dtype=float)
        translation = np.asarray(translation, dtype=float)
        return GraspPose(
            rotation @ self.rotation,
            rotation @ self.translation + translation,
            self.width,
        )


@dataclass(frozen=True)
class GraspDistance:
    """Translation distance (m) and geodesic rotation distance (rad)."""

    d_t: float
    d_alpha: float


def gram_schmidt_orthonormalize(a_raw, b_raw) -> tuple[np.ndarray, np.ndarray]:
    """Normalize a_raw and strip its component from b_raw, then normalize.

    Raises DegenerateVectors when a_raw is near zero or b_raw is near
    parallel to a_raw (unusable network output or malformed input).
    """
    a_raw = np.asarray(a_raw, dtype=float).reshape(3)
    b_raw = np.asarray(b_raw, dtype=float).reshape(3)
    na = np.linalg.norm(a_raw)
    if not na > _DEGENERATE_EPS:
        raise DegenerateVectors("approach vector has near-zero norm")
    a = a_raw / na
    b_perp = b_raw - (b_raw @ a) * a
    nb = np.linalg.norm(b_perp)
    if not nb > _DEGENERATE_EPS:
        raise DegenerateVectors("baseline vector is near parallel to approach")
    b = b_perp / nb
    # Second projection pass: near-parallel inputs cancel badly in the first
    # one, leaving a residual a-component above the orthogonality tolerance.
    b = b - (b @ a) * a
    return a, b / np.linalg.norm(b)


def rotation_from_approach_baseline(a, b) -> np.ndarray:
    """Assemble the rotation with columns [b, a x b, a].

    Inputs must already be an orthonormal pair (within 1e-6); the result is
    re-orthonormalized so it satisfies the rotation invariant to 1e-9.
    """
    a = np.asarray(a, dtype=float).reshape(3)
    b = np.asarray(b, dtype=float).reshape(3)
    if abs(np.linalg.norm(a) - 1.0) > 1e-6 or abs(np.linalg.norm(b) - 1.0) > 1e-6:
        raise NotOrthonormal("approach/baseline must be unit vectors")
    if abs(float(a @ b)) > 1e-6:
        raise NotOrthonormal("approach and baseline must be orthogonal")
    a = a / np.linalg.norm(a)
    b = b - (b @ a) * a
    b = b / np.linalg.norm(b)
    return np.column_stack([b, np.cross(a, b), a])


def rotation_angle(r1: np.ndarray, r2: np.ndarray) -> float:
    """Geodesic angle between two rotations: arccos((trace(r1 r2^T) - 1) / 2).

    The arccos argument is clamped to [-1, 1]; floating-point traces can
    exceed the bounds by ~1e-15.
    """
    tr = float(np.trace(r1 @ r2.T))
    return math.acos(min(1.0, max(-1.0, 0.5 * (tr - 1.0))))


# Right-multiplying by this flips baseline and keeps approach: the 180 degree
# jaw-swap symmetry of a parallel gripper.
_BASELINE_FLIP = np.diag([-1.0, -1.0, 1.0])


def grasp_distance(g1: GraspPose, g2: GraspPose, fold_baseline_flip: bool = False) -> GraspDistance:
    """Translation and rotation distance between two grasps; width is ignored.

    With fold_baseline_flip the rotation part is the minimum over the
    180-degree jaw swap of g2 (off by default: the benchmark metric does
    not fold the symmetry).
    """
    d_t = float(np.linalg.norm(g1.translation - g2.translation))
    d_alpha = rotation_angle(g1.rotation, g2.rotation)
    if fold_baseline_flip:
        d_alpha = min(d_alpha, rotation_angle(g1.rotation, g2.rotation @ _BASELINE_FLIP))
    return GraspDistance(d_t, d_alpha)


def five_point_projection(g: GraspPose, spec: GripperSpec) -> np.ndarray:
    """Project a grasp to its 5 skeleton points, shape (5, 3).

    Order: gripper root (base_depth behind the origin along approach), left
    and right finger bases at -/+ width/2 along baseline, then left and
    right finger tips at finger_length along approach. The grasp origin is
    the midpoint between the finger bases.
    """
    if g.width > spec.max_width:
        raise WidthExceedsSpec(f"width {g.width} exceeds gripper max {spec.max_width}")
    a = g.approach
    b = g.baseline
    t = g.translation
    half = 0.5 * g.width
    root = t - spec.base_depth * a
    base_l = t - half * b
    base_r = t + half * b
    tip_l = base_l + spec.finger_length * a
    tip_r = base_r + spec.finger_length * a
    return np.stack([root, base_l, base_r, tip_l, tip_r])


def grasp_pose_point_distance(g1: GraspPose, g2: GraspPose, spec: GripperSpec) -> float:
    """Mean Euclidean distance between the 5 corresponding skeleton points."""
    p1 = five_point_projection(g1, spec)
    p2 = five_point_projection(g2, spec)
    return float(np.mean(np.linalg.norm(p1 - p2, axis=1)))


def grasp_set_loss(preds, gts, spec: GripperSpec) -> float:
    """Weighted mean over predictions of the distance to the nearest ground truth.

    preds is a sequence of (GraspPose, s_hat) with binary weights s_hat;
    gts is a sequence of GraspPose. Predictions with s_hat = 0 contribute
    nothing but still count toward the mean's denominator.
    """
    preds = list(preds)
    if not preds:
        raise ValueError("prediction set must be non-empty")
    gts = list(gts)
    total = 0.0
    for pose, s_hat in preds:
        if not s_hat:
            continue
        if not gts:
            raise EmptyGroundTruth("weighted prediction has no ground truth to match")
        total += float(s_hat) * min(grasp_pose_point_distance(pose, gt, spec) for gt in gts)
    return total / len(preds)


def rotation_about_axis(axis, angle: float) -> np.ndarray:
    """Rotation by angle (rad) about a unit axis (Rodrigues form)."""
    axis = np.asarray(axis, dtype=float).reshape(3)
    axis = axis / np.linalg.norm(axis)
    k = np.array([
        [0.0, -axis[2], axis[1]],
        [axis[2], 0.0, -axis[0]],
        [-axis[1], axis[0], 0.0],
    ])
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def rotation_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
