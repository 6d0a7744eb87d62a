"""Evaluation triplets, the coverage/success metrics, simple baselines,
and reference implementations of the training-loss formulas.

A triplet is one benchmark case: a rendered cloud, a target object
category and a task, with the surviving scene-frame ground-truth grasps
for that (category, task). Success asks for at least one prediction
strictly within (th_d, th_alpha) of some ground truth; coverage counts
the fraction of ground-truth grasps matched translation-only within
th_d (inclusive). Aggregates average per triplet.
"""

import math
from dataclasses import dataclass

import numpy as np

from .catalog import CATEGORY_TASKS, TASKS
from .errors import GraspForgeError
from .geometry import GraspPose, rotation_angle
from .rendering import PointLabels

DEFAULT_TH_D = 0.03                  # meters
DEFAULT_TH_ALPHA = math.radians(30)  # radians

_PROB_CLAMP = 1e-7


class UnknownTriplet(GraspForgeError):
    """A prediction set references a triplet id that does not exist."""


class EmptyInput(GraspForgeError):
    """Baseline asked to score an empty collection."""


class LengthMismatch(GraspForgeError):
    """Probability arrays and label arrays disagree in length."""


class NonFinite(GraspForgeError):
    """Loss terms must be finite."""


@dataclass(frozen=True, eq=False)
class Triplet:
    triplet_id: str
    scene_id: str
    camera_index: int
    category: str
    task: str
    gt_grasps: tuple

    def __post_init__(self):
        if self.category not in CATEGORY_TASKS:
            raise ValueError(f"unknown category {self.category!r}")
        if self.task not in CATEGORY_TASKS[self.category]:
            raise ValueError(f"task {self.task!r} not allowed for {self.category}")
        if not self.gt_grasps:
            raise ValueError("triplet requires at least one ground-truth grasp")
        object.__setattr__(self, "gt_grasps", tuple(self.gt_grasps))


@dataclass(frozen=True, eq=False)
class PredictionSet:
    triplet_id: str
    grasps: tuple  # of (GraspPose, confidence in [0, 1])

    def __post_init__(self):
        grasps = tuple(self.grasps)
        for pose, conf in grasps:
            if not isinstance(pose, GraspPose):
                raise ValueError("predictions must contain GraspPose values")
            if not (0.0 <= conf <= 1.0):
                raise ValueError(f"confidence {conf} outside [0, 1]")
        object.__setattr__(self, "grasps", grasps)


@dataclass(frozen=True)
class EvalRow:
    triplet_id: str
    coverage: float
    success: int


@dataclass(frozen=True, eq=False)
class EvalReport:
    rows: tuple
    coverage_rate: float  # percent
    success_rate: float   # percent
    th_d: float
    th_alpha: float
    coverage_th_d: float
    averaging: str = "per_triplet"


def generate_triplets(scenes_with_grasps, catalog, clouds) -> list[Triplet]:
    """Enumerate (cloud, category, task) cases with surviving ground truth.

    scenes_with_grasps: iterable of (Scene, {object_id: [AnnotatedGrasp]}).
    clouds: iterable of LabeledCloud (only scene_id/camera_index are used).
    One triplet per rendered cloud x category present x allowed task with
    at least one surviving grasp carrying that task; ordering is
    deterministic: cloud order, then category table order, then task order.
    """
    from .scenes import catalog_as_map

    catalog_map = catalog_as_map(catalog)
    by_scene = {}
    for scene, grasp_map in scenes_with_grasps:
        by_scene[scene.scene_id] = (scene, grasp_map)
    triplets = []
    for cloud in clouds:
        if cloud.scene_id not in by_scene:
            continue
        scene, grasp_map = by_scene[cloud.scene_id]
        for category in CATEGORY_TASKS:
            members = [p.object_id for p in scene.placements
                       if catalog_map[p.object_id].category == category]
            if not members:
                continue
            for task in CATEGORY_TASKS[category]:
                gt = [g.pose for oid in members for g in grasp_map.get(oid, ())
                      if task in g.tasks]
                if not gt:
                    continue
                triplets.append(Triplet(
                    triplet_id=f"{cloud.scene_id}:cam{cloud.camera_index}:{category}:{task}",
                    scene_id=cloud.scene_id,
                    camera_index=cloud.camera_index,
                    category=category,
                    task=task,
                    gt_grasps=tuple(gt),
                ))
    return triplets


def success(pred: PredictionSet, trip: Triplet, th_d: float = DEFAULT_TH_D,
            th_alpha: float = DEFAULT_TH_ALPHA) -> int:
    """1 iff some prediction is strictly within both thresholds of some
    ground-truth grasp; empty prediction sets score 0."""
    if not (th_d > 0 and th_alpha > 0):
        raise ValueError("thresholds must be positive")
    for pose, _ in pred.grasps:
        for gt in trip.gt_grasps:
            if np.linalg.norm(pose.translation - gt.translation) < th_d \
                    and rotation_angle(pose.rotation, gt.rotation) < th_alpha:
                return 1
    return 0


def coverage(pred: PredictionSet, trip: Triplet, th_d: float = DEFAULT_TH_D) -> float:
    """Fraction of ground-truth grasps with a prediction within th_d
    (translation only, inclusive); empty prediction sets score 0."""
    if not th_d > 0:
        raise ValueError("threshold must be positive")
    if not pred.grasps:
        return 0.0
    pts = np.stack([pose.translation for pose, _ in pred.grasps])
    covered = 0
    for gt in trip.gt_grasps:
        if np.linalg.norm(pts - gt.translation, axis=1).min() <= th_d:
            covered += 1
    return covered / len(trip.gt_grasps)


def evaluate(preds, trips, th_d: float = DEFAULT_TH_D, th_alpha: float = DEFAULT_TH_ALPHA,
             coverage_th_d: float | None = None) -> EvalReport:
    """Score prediction sets against triplets.

    Triplets with no prediction set count as coverage 0 / success 0 so
    partial submissions rank sensibly. Unknown triplet ids are an error.
    """
    coverage_th_d = th_d if coverage_th_d is None else coverage_th_d
    trips = list(trips)
    known = {t.triplet_id: t for t in trips}
    by_id: dict = {}
    for p in preds:
        if p.triplet_id not in known:
            raise UnknownTriplet(f"no triplet {p.triplet_id!r}")
        prev = by_id.get(p.triplet_id)
        if prev is None:
            by_id[p.triplet_id] = p
        else:  # merge duplicate submissions for the same triplet
            by_id[p.triplet_id] = PredictionSet(p.triplet_id, prev.grasps + p.grasps)
    rows = []
    for trip in trips:
        pred = by_id.get(trip.triplet_id)
        if pred is None:
            rows.append(EvalRow(trip.triplet_id, 0.0, 0))
        else:
            rows.append(EvalRow(
                trip.triplet_id,
                coverage(pred, trip, coverage_th_d),
                success(pred, trip, th_d, th_alpha),
            ))
    n = len(rows)
    cov = 100.0 * sum(r.coverage for r in rows) / n if n else 0.0
    suc = 100.0 * sum(r.success for r in rows) / n if n else 0.0
    return EvalReport(tuple(rows), cov, suc, th_d, th_alpha, coverage_th_d)


def random_task_baseline(grasps_with_gt_tasks, rng_seed: int) -> float:
    """Uniform task guessing: fraction of draws landing in each grasp's
    ground-truth task set (the weakest sensible reference baseline)."""
    gt_sets = [frozenset(s) for s in grasps_with_gt_tasks]
    if not gt_sets:
        raise EmptyInput("no grasps to draw tasks for")
    rng = np.random.default_rng(rng_seed & ((1 << 64) - 1))
    draws = rng.integers(0, len(TASKS), size=len(gt_sets))
    hits = sum(1 for d, s in zip(draws, gt_sets) if TASKS[d] in s)
    return hits / len(gt_sets)


def two_stage_precision(classifier_outputs) -> float:
    """Average task-classification precision of a two-stage pipeline:
    fraction of (predicted task, gt task set) entries with predicted in gt."""
    outputs = list(classifier_outputs)
    if not outputs:
        raise EmptyInput("no classifier outputs")
    return sum(1 for task, gt in outputs if task in gt) / len(outputs)


def _bce(probs: np.ndarray, labels: np.ndarray) -> float:
    p = np.clip(np.asarray(probs, dtype=float), _PROB_CLAMP, 1.0 - _PROB_CLAMP)
    y = np.asarray(labels, dtype=float)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))


def point_selection_loss(pred_probs, labels: PointLabels):
    """Mean binary cross-entropy per selection head plus their exact sum.

    pred_probs is (objectness, target_objectness, taskness) probability
    arrays; probabilities are clamped to [1e-7, 1 - 1e-7].
    Returns (L_o, L_to, L_task, L_point).
    """
    p_o, p_to, p_task = (np.asarray(p, dtype=float) for p in pred_probs)
    n = len(labels.objectness)
    if not (len(p_o) == len(p_to) == len(p_task) == n):
        raise LengthMismatch("probability arrays must match label length")
    l_o = _bce(p_o, labels.objectness)
    l_to = _bce(p_to, labels.target_objectness)
    l_task = _bce(p_task, labels.taskness)
    return l_o, l_to, l_task, l_o + l_to + l_task


def total_losses(l_g_task: float, l_g_stable: float, l_point: float):
    """Combine grasp and point losses: returns (L_grasp, L_overall)."""
    for name, val in (("l_g_task", l_g_task), ("l_g_stable", l_g_stable),
                      ("l_point", l_point)):
        if not math.isfinite(val):
            raise NonFinite(f"{name} is not finite")
        if val < 0:
            raise ValueError(f"{name} must be non-negative")
    l_grasp = l_g_task + l_g_stable
    return l_grasp, l_point + l_grasp
