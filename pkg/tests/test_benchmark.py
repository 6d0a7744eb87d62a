import math

import numpy as np
import pytest

from graspforge.benchmark import (DEFAULT_TH_ALPHA, DEFAULT_TH_D, EmptyInput,
                                  LengthMismatch, NonFinite, PredictionSet, Triplet,
                                  UnknownTriplet, coverage, evaluate, generate_triplets,
                                  point_selection_loss, random_task_baseline, success,
                                  total_losses, two_stage_precision)
from graspforge.catalog import TASKS
from graspforge.geometry import GraspPose, rotation_z
from graspforge.rendering import PointLabels, render_cloud
from graspforge.scenes import Placement, Scene, TableSpec, propagate_grasps
from oracles import axis_angle_matrix, random_rotation


def pose_at(x=0.0, y=0.0, z=0.0, rot=None, width=0.05):
    return GraspPose(np.eye(3) if rot is None else rot, (x, y, z), width)


def make_triplet(gts, task="Cut", category="Knife", tid="t0"):
    return Triplet(tid, "scene_x", 0, category, task, tuple(gts))


def pset(grasps, tid="t0"):
    return PredictionSet(tid, tuple((g, 1.0) for g in grasps))


class TestTripletEnumeration:
    def _mini_scene(self, desk_catalog_map, spec, object_ids, cameras=1):
        table = TableSpec()
        placements = []
        cubes = []
        xs = np.linspace(-0.15, 0.15, len(object_ids))
        from graspforge.catalog import SMALL_CATEGORIES
        from graspforge.scenes import LiftCube
        for x, oid in zip(xs, object_ids):
            obj = desk_catalog_map[oid]
            lifted = obj.category in SMALL_CATEGORIES
            support = table.top_z + (0.05 if lifted else 0.0)
            min_z = obj.mesh.vertices[:, 2].min()
            placements.append(Placement(oid, np.eye(3), (x, 0, support - min_z), lifted))
            if lifted:
                cubes.append(LiftCube((x, 0, table.top_z + 0.025)))
        from graspforge.scenes import CameraConfig, look_at_camera
        cams = tuple(
            look_at_camera((0.9 * math.cos(k), 0.9 * math.sin(k), table.top_z + 0.7),
                           (0, 0, table.top_z), CameraConfig(width=80, height=60))
            for k in range(cameras)
        )
        return Scene("scene_mini", table, tuple(placements), tuple(cubes), cams)

    def test_mug_and_knife_give_six_triplets(self, desk_catalog_map, spec):
        scene = self._mini_scene(desk_catalog_map, spec, ["mug_01", "knife_01"])
        grasps = propagate_grasps(scene, desk_catalog_map, spec)
        clouds = [render_cloud(scene, 0, desk_catalog_map)]
        trips = generate_triplets([(scene, grasps)], desk_catalog_map, clouds)
        combos = {(t.category, t.task) for t in trips}
        assert combos == {
            ("Mug", "Grasp"), ("Mug", "Wrap"), ("Mug", "Pour"), ("Mug", "Contain"),
            ("Knife", "Handover"), ("Knife", "Cut"),
        }
        assert len(trips) == 6
        for t in trips:
            assert len(t.gt_grasps) >= 1

    def test_filtered_task_drops_its_triplet(self, desk_catalog_map, spec):
        scene = self._mini_scene(desk_catalog_map, spec, ["mug_01", "knife_01"])
        grasps = propagate_grasps(scene, desk_catalog_map, spec)
        # remove every Cut-carrying knife grasp, as if collision-filtered
        grasps["knife_01"] = [g for g in grasps["knife_01"] if "Cut" not in g.tasks]
        clouds = [render_cloud(scene, 0, desk_catalog_map)]
        trips = generate_triplets([(scene, grasps)], desk_catalog_map, clouds)
        combos = {(t.category, t.task) for t in trips}
        assert ("Knife", "Cut") not in combos
        assert ("Knife", "Handover") in combos

    def test_two_cameras_double_the_triplets(self, desk_catalog_map, spec):
        scene = self._mini_scene(desk_catalog_map, spec, ["mug_01", "knife_01"], cameras=2)
        grasps = propagate_grasps(scene, desk_catalog_map, spec)
        clouds = [render_cloud(scene, k, desk_catalog_map) for k in range(2)]
        trips = generate_triplets([(scene, grasps)], desk_catalog_map, clouds)
        assert len(trips) == 12
        ids = [t.triplet_id for t in trips]
        assert len(set(ids)) == 12

    def test_triplet_requires_nonempty_ground_truth(self):
        with pytest.raises(ValueError):
            make_triplet([])

    def test_triplet_task_category_validation(self):
        with pytest.raises(ValueError):
            make_triplet([pose_at()], task="Pour", category="Knife")


class TestSuccess:
    def test_exact_predictions(self):
        trip = make_triplet([pose_at(0.1), pose_at(0.2)])
        assert success(pset([pose_at(0.1)]), trip) == 1

    def test_translation_threshold_strict(self):
        trip = make_triplet([pose_at(0.0)])
        assert success(pset([pose_at(0.029)]), trip) == 1
        assert success(pset([pose_at(0.031)]), trip) == 0
        assert success(pset([pose_at(0.03)]), trip) == 0  # strict <

    def test_rotation_threshold_strict(self):
        trip = make_triplet([pose_at()])
        r29 = axis_angle_matrix((0, 0, 1), math.radians(29))
        r31 = axis_angle_matrix((0, 0, 1), math.radians(31))
        assert success(pset([pose_at(rot=r29)]), trip) == 1
        assert success(pset([pose_at(rot=r31)]), trip) == 0

    def test_both_conditions_required(self):
        trip = make_triplet([pose_at()])
        r29 = axis_angle_matrix((0, 1, 0), math.radians(29))
        assert success(pset([pose_at(0.029, rot=r29)]), trip) == 1
        assert success(pset([pose_at(0.031, rot=r29)]), trip) == 0

    def test_empty_prediction_set(self):
        trip = make_triplet([pose_at()])
        assert success(PredictionSet("t0", ()), trip) == 0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(41)
        for _ in range(200):
            gts = [pose_at(*rng.uniform(-0.05, 0.05, 3), rot=random_rotation(rng))
                   for _ in range(rng.integers(1, 6))]
            preds = [pose_at(*rng.uniform(-0.05, 0.05, 3), rot=random_rotation(rng))
                     for _ in range(rng.integers(0, 6))]
            trip = make_triplet(gts)
            expected = 0
            for p in preds:
                for g in gts:
                    dt = np.linalg.norm(p.translation - g.translation)
                    da = math.acos(np.clip((np.trace(p.rotation @ g.rotation.T) - 1) / 2, -1, 1))
                    if dt < DEFAULT_TH_D and da < DEFAULT_TH_ALPHA:
                        expected = 1
            assert success(pset(preds), trip) == expected

    def test_rigid_invariance(self):
        rng = np.random.default_rng(42)
        gts = [pose_at(*rng.uniform(-0.1, 0.1, 3), rot=random_rotation(rng)) for _ in range(4)]
        preds = [pose_at(*rng.uniform(-0.1, 0.1, 3), rot=random_rotation(rng)) for _ in range(4)]
        rot = random_rotation(rng)
        shift = rng.uniform(-1, 1, 3)
        before = success(pset(preds), make_triplet(gts))
        after = success(pset([p.transformed(rot, shift) for p in preds]),
                        make_triplet([g.transformed(rot, shift) for g in gts]))
        assert before == after


class TestCoverage:
    def test_perfect(self):
        gts = [pose_at(0.0), pose_at(1.0)]
        assert coverage(pset(gts), make_triplet(gts)) == 1.0

    def test_half_covered(self):
        gts = [pose_at(0.0), pose_at(1.0)]
        assert coverage(pset([pose_at(0.02)]), make_triplet(gts)) == 0.5

    def test_inclusive_threshold(self):
        gts = [pose_at(0.0)]
        assert coverage(pset([pose_at(0.03)]), make_triplet(gts)) == 1.0  # <= not <

    def test_rotation_is_ignored(self):
        gts = [pose_at(rot=np.eye(3))]
        pred = pose_at(rot=rotation_z(math.pi))
        assert coverage(pset([pred]), make_triplet(gts)) == 1.0

    def test_empty_prediction_set(self):
        assert coverage(PredictionSet("t0", ()), make_triplet([pose_at()])) == 0.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(43)
        for _ in range(200):
            gts = [pose_at(*rng.uniform(-0.05, 0.05, 3)) for _ in range(rng.integers(1, 8))]
            preds = [pose_at(*rng.uniform(-0.05, 0.05, 3)) for _ in range(rng.integers(0, 8))]
            expected = sum(
                1 for g in gts
                if any(np.linalg.norm(p.translation - g.translation) <= DEFAULT_TH_D
                       for p in preds)
            ) / len(gts)
            assert coverage(pset(preds), make_triplet(gts)) == expected

    def test_monotone_in_predictions(self):
        rng = np.random.default_rng(44)
        gts = [pose_at(*rng.uniform(-0.05, 0.05, 3)) for _ in range(6)]
        trip = make_triplet(gts)
        preds = []
        last_cov, last_suc = 0.0, 0
        for _ in range(10):
            preds.append(pose_at(*rng.uniform(-0.05, 0.05, 3), rot=random_rotation(rng)))
            cov = coverage(pset(preds), trip)
            suc = success(pset(preds), trip)
            assert cov >= last_cov
            assert suc >= last_suc
            last_cov, last_suc = cov, suc


class TestEvaluate:
    def test_perfect_predictor_scores_100(self):
        trips = [make_triplet([pose_at(k)], tid=f"t{k}") for k in range(4)]
        preds = [pset(t.gt_grasps, tid=t.triplet_id) for t in trips]
        report = evaluate(preds, trips)
        assert report.coverage_rate == 100.0
        assert report.success_rate == 100.0

    def test_empty_predictor_scores_0(self):
        trips = [make_triplet([pose_at(k)], tid=f"t{k}") for k in range(4)]
        report = evaluate([], trips)
        assert report.coverage_rate == 0.0
        assert report.success_rate == 0.0
        assert len(report.rows) == 4

    def test_half_perfect_half_missing(self):
        trips = [make_triplet([pose_at(k)], tid=f"t{k}") for k in range(4)]
        preds = [pset(t.gt_grasps, tid=t.triplet_id) for t in trips[:2]]
        report = evaluate(preds, trips)
        assert report.coverage_rate == 50.0
        assert report.success_rate == 50.0

    def test_unknown_triplet_rejected(self):
        trips = [make_triplet([pose_at()], tid="t0")]
        with pytest.raises(UnknownTriplet):
            evaluate([pset([pose_at()], tid="ghost")], trips)

    def test_duplicate_prediction_sets_merge(self):
        trips = [make_triplet([pose_at(0.0), pose_at(1.0)], tid="t0")]
        preds = [pset([pose_at(0.0)], tid="t0"), pset([pose_at(1.0)], tid="t0")]
        report = evaluate(preds, trips)
        assert report.rows[0].coverage == 1.0

    def test_aggregates_are_row_means(self):
        rng = np.random.default_rng(45)
        trips = [make_triplet([pose_at(*rng.uniform(-0.1, 0.1, 3)) for _ in range(3)],
                              tid=f"t{k}") for k in range(7)]
        preds = [pset([pose_at(*rng.uniform(-0.1, 0.1, 3))], tid=t.triplet_id)
                 for t in trips[:5]]
        report = evaluate(preds, trips)
        assert report.coverage_rate == pytest.approx(
            100.0 * np.mean([r.coverage for r in report.rows]))
        assert report.success_rate == pytest.approx(
            100.0 * np.mean([r.success for r in report.rows]))


class TestRandomBaseline:
    def test_full_task_sets_give_perfect_precision(self):
        assert random_task_baseline([set(TASKS)] * 100, 7) == 1.0

    def test_single_task_sets_match_uniform_expectation(self):
        rng = np.random.default_rng(46)
        gt_sets = [{TASKS[rng.integers(0, 7)]} for _ in range(100000)]
        precision = random_task_baseline(gt_sets, 123)
        sigma = math.sqrt((1 / 7) * (6 / 7) / len(gt_sets))
        assert abs(precision - 1 / 7) < 3 * sigma

    def test_deterministic_per_seed(self):
        gt_sets = [{"Cut"}, {"Pour"}, {"Wear", "Grasp"}] * 100
        assert random_task_baseline(gt_sets, 5) == random_task_baseline(gt_sets, 5)

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            random_task_baseline([], 0)


class TestTwoStagePrecision:
    def test_all_correct(self):
        assert two_stage_precision([("Cut", {"Cut"})] * 5) == 1.0

    def test_none_correct(self):
        assert two_stage_precision([("Cut", {"Pour"})] * 5) == 0.0

    def test_mixed_fixture(self):
        outputs = [("Cut", {"Cut"})] * 3 + [("Pour", {"Cut"})] * 7
        assert two_stage_precision(outputs) == pytest.approx(0.3)

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            two_stage_precision([])


class TestLosses:
    def _labels(self, n=64, seed=0):
        rng = np.random.default_rng(seed)
        o = rng.random(n) < 0.6
        to = o & (rng.random(n) < 0.5)
        task = to & (rng.random(n) < 0.5)
        return PointLabels(o, to, task)

    def test_perfect_probabilities_near_zero_loss(self):
        labels = self._labels()
        probs = (labels.objectness.astype(float), labels.target_objectness.astype(float),
                 labels.taskness.astype(float))
        l_o, l_to, l_task, l_point = point_selection_loss(probs, labels)
        for term in (l_o, l_to, l_task):
            assert term < 1e-6
        assert l_point < 3e-6

    def test_uniform_probabilities_give_ln2(self):
        labels = self._labels()
        half = np.full(len(labels.objectness), 0.5)
        l_o, l_to, l_task, l_point = point_selection_loss((half, half, half), labels)
        for term in (l_o, l_to, l_task):
            assert term == pytest.approx(math.log(2), abs=1e-12)
        assert l_point == pytest.approx(3 * math.log(2), abs=1e-12)

    def test_sum_is_exact(self):
        rng = np.random.default_rng(47)
        labels = self._labels(seed=2)
        probs = tuple(rng.random(len(labels.objectness)) for _ in range(3))
        l_o, l_to, l_task, l_point = point_selection_loss(probs, labels)
        assert l_point == l_o + l_to + l_task

    def test_length_mismatch(self):
        labels = self._labels(n=8)
        with pytest.raises(LengthMismatch):
            point_selection_loss((np.zeros(8), np.zeros(7), np.zeros(8)), labels)

    def test_total_losses(self):
        assert total_losses(0.0, 0.0, 0.0) == (0.0, 0.0)
        assert total_losses(1.0, 2.0, 3.0) == (3.0, 6.0)
        rng = np.random.default_rng(48)
        for _ in range(100):
            a, b, c = rng.uniform(0, 10, 3)
            l_grasp, l_overall = total_losses(a, b, c)
            assert l_grasp == a + b
            assert l_overall == c + (a + b)

    def test_non_finite_rejected(self):
        with pytest.raises(NonFinite):
            total_losses(float("nan"), 0.0, 0.0)
        with pytest.raises(NonFinite):
            total_losses(0.0, float("inf"), 0.0)
        with pytest.raises(ValueError):
            total_losses(-1.0, 0.0, 0.0)
