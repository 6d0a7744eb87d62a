import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graspforge.geometry import (DegenerateVectors, EmptyGroundTruth, GraspDistance,
                                 GraspPose, GripperSpec, NotOrthonormal,
                                 WidthExceedsSpec, five_point_projection,
                                 gram_schmidt_orthonormalize, grasp_distance,
                                 grasp_pose_point_distance, grasp_set_loss,
                                 rotation_about_axis, rotation_from_approach_baseline,
                                 rotation_z)
from oracles import axis_angle_matrix, quat_angle, random_rotation


def random_pose(rng, width_max=0.08):
    return GraspPose(random_rotation(rng), rng.uniform(-0.5, 0.5, 3),
                     rng.uniform(0.0, width_max))


class TestGramSchmidt:
    def test_already_orthonormal_passthrough(self):
        a, b = gram_schmidt_orthonormalize((0, 0, 1), (1, 0, 0))
        np.testing.assert_allclose(a, [0, 0, 1], atol=1e-15)
        np.testing.assert_allclose(b, [1, 0, 0], atol=1e-15)

    def test_normalizes_and_strips_component(self):
        a, b = gram_schmidt_orthonormalize((0, 0, 2), (1, 0, 1))
        np.testing.assert_allclose(a, [0, 0, 1], atol=1e-15)
        np.testing.assert_allclose(b, [1, 0, 0], atol=1e-15)

    def test_random_pairs_orthonormal(self):
        rng = np.random.default_rng(11)
        for _ in range(10000):
            raw_a = rng.uniform(-1, 1, 3)
            raw_b = rng.uniform(-1, 1, 3)
            if np.linalg.norm(raw_a) < 1e-6:
                continue
            try:
                a, b = gram_schmidt_orthonormalize(raw_a, raw_b)
            except DegenerateVectors:
                continue
            assert abs(np.linalg.norm(a) - 1) < 1e-9
            assert abs(np.linalg.norm(b) - 1) < 1e-9
            assert abs(a @ b) < 1e-9

    def test_zero_approach_rejected(self):
        with pytest.raises(DegenerateVectors):
            gram_schmidt_orthonormalize((0, 0, 0), (1, 0, 0))

    def test_parallel_baseline_rejected(self):
        with pytest.raises(DegenerateVectors):
            gram_schmidt_orthonormalize((0, 0, 1), (0, 0, -3))

    @given(st.tuples(*[st.floats(-1e3, 1e3) for _ in range(6)]))
    @settings(max_examples=300, deadline=None)
    def test_property_outputs_orthonormal_or_degenerate(self, vals):
        raw_a = np.array(vals[:3])
        raw_b = np.array(vals[3:])
        try:
            a, b = gram_schmidt_orthonormalize(raw_a, raw_b)
        except DegenerateVectors:
            return
        assert abs(np.linalg.norm(a) - 1) < 1e-9
        assert abs(np.linalg.norm(b) - 1) < 1e-9
        assert abs(float(a @ b)) < 1e-9


class TestRotationAssembly:
    def test_identity_case(self):
        r = rotation_from_approach_baseline((0, 0, 1), (1, 0, 0))
        np.testing.assert_allclose(r, np.eye(3), atol=1e-15)

    def test_quarter_turn_about_z(self):
        # columns (0,1,0), (-1,0,0), (0,0,1): a +90 degree turn about z
        r = rotation_from_approach_baseline((0, 0, 1), (0, 1, 0))
        expected = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]], dtype=float)
        np.testing.assert_allclose(r, expected, atol=1e-15)

    def test_random_pairs_proper_rotations(self):
        rng = np.random.default_rng(5)
        for _ in range(2000):
            a, b = gram_schmidt_orthonormalize(rng.normal(size=3), rng.normal(size=3))
            r = rotation_from_approach_baseline(a, b)
            assert np.abs(r.T @ r - np.eye(3)).max() < 1e-9
            assert abs(np.linalg.det(r) - 1) < 1e-9
            np.testing.assert_allclose(r[:, 2], a, atol=1e-9)
            np.testing.assert_allclose(r[:, 0], b, atol=1e-9)

    def test_accessor_round_trip_is_identity(self):
        rng = np.random.default_rng(6)
        for _ in range(500):
            r = random_rotation(rng)
            pose = GraspPose(r, np.zeros(3), 0.04)
            r2 = rotation_from_approach_baseline(pose.approach, pose.baseline)
            assert np.abs(r2 - r).max() < 1e-9

    def test_rejects_non_orthonormal(self):
        with pytest.raises(NotOrthonormal):
            rotation_from_approach_baseline((0, 0, 1), (0, 0.5, 0.5))
        with pytest.raises(NotOrthonormal):
            rotation_from_approach_baseline((0, 0, 2), (1, 0, 0))


class TestGraspDistance:
    def test_identity(self):
        rng = np.random.default_rng(0)
        g = random_pose(rng)
        d = grasp_distance(g, g)
        assert d == GraspDistance(0.0, 0.0)

    def test_pure_translation(self):
        g1 = GraspPose(np.eye(3), (0, 0, 0), 0.05)
        g2 = GraspPose(np.eye(3), (0.03, 0, 0), 0.05)
        d = grasp_distance(g1, g2)
        assert d.d_t == pytest.approx(0.03, abs=1e-15)
        assert d.d_alpha == 0.0

    def test_quarter_turn_rotation(self):
        rng = np.random.default_rng(1)
        r1 = random_rotation(rng)
        g1 = GraspPose(r1, (0.1, 0.2, 0.3), 0.02)
        g2 = GraspPose(r1 @ rotation_z(math.pi / 2), (0.1, 0.2, 0.3), 0.02)
        d = grasp_distance(g1, g2)
        assert d.d_t == 0.0
        assert d.d_alpha == pytest.approx(math.pi / 2, abs=1e-12)

    def test_width_is_ignored(self):
        g1 = GraspPose(np.eye(3), (0, 0, 0), 0.0)
        g2 = GraspPose(np.eye(3), (0, 0, 0), 0.08)
        assert grasp_distance(g1, g2) == GraspDistance(0.0, 0.0)

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            g1, g2 = random_pose(rng), random_pose(rng)
            d12 = grasp_distance(g1, g2)
            d21 = grasp_distance(g2, g1)
            assert d12.d_t == pytest.approx(d21.d_t, abs=1e-12)
            assert d12.d_alpha == pytest.approx(d21.d_alpha, abs=1e-12)

    def test_matches_quaternion_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(2000):
            r1, r2 = random_rotation(rng), random_rotation(rng)
            d = grasp_distance(GraspPose(r1, np.zeros(3), 0), GraspPose(r2, np.zeros(3), 0))
            assert abs(d.d_alpha - quat_angle(r1, r2)) < 1e-6

    def test_axis_angle_recovery(self):
        rng = np.random.default_rng(4)
        for _ in range(300):
            r = random_rotation(rng)
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            theta = rng.uniform(0, math.pi)
            r2 = r @ axis_angle_matrix(axis, theta)
            d = grasp_distance(GraspPose(r, np.zeros(3), 0), GraspPose(r2, np.zeros(3), 0))
            assert abs(d.d_alpha - theta) < 1e-6

    def test_rigid_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            g1, g2 = random_pose(rng), random_pose(rng)
            rot = random_rotation(rng)
            shift = rng.uniform(-1, 1, 3)
            d = grasp_distance(g1, g2)
            dt = grasp_distance(g1.transformed(rot, shift), g2.transformed(rot, shift))
            assert abs(d.d_t - dt.d_t) < 1e-9
            assert abs(d.d_alpha - dt.d_alpha) < 1e-9

    def test_baseline_flip_fold_option(self):
        g1 = GraspPose(np.eye(3), np.zeros(3), 0.04)
        flipped = GraspPose(np.eye(3) @ np.diag([-1.0, -1.0, 1.0]), np.zeros(3), 0.04)
        assert grasp_distance(g1, flipped).d_alpha == pytest.approx(math.pi, abs=1e-12)
        assert grasp_distance(g1, flipped, fold_baseline_flip=True).d_alpha == 0.0


class TestFivePointProjection:
    def test_identity_layout(self, spec):
        g = GraspPose(np.eye(3), np.zeros(3), 0.08)
        pts = five_point_projection(g, spec)
        expected = np.array([
            [0, 0, -0.02],
            [-0.04, 0, 0],
            [0.04, 0, 0],
            [-0.04, 0, 0.046],
            [0.04, 0, 0.046],
        ])
        np.testing.assert_allclose(pts, expected, atol=1e-15)

    def test_zero_width_degenerate(self, spec):
        g = GraspPose(np.eye(3), (0.1, -0.2, 0.3), 0.0)
        pts = five_point_projection(g, spec)
        np.testing.assert_allclose(pts[1], pts[2], atol=1e-15)
        np.testing.assert_allclose(pts[3], pts[4], atol=1e-15)
        np.testing.assert_allclose(pts[3] - pts[1], [0, 0, spec.finger_length], atol=1e-12)

    def test_rigid_motion_moves_points_rigidly(self, spec):
        rng = np.random.default_rng(8)
        for _ in range(200):
            g = random_pose(rng)
            delta = rng.uniform(-0.5, 0.5, 3)
            p1 = five_point_projection(g, spec)
            p2 = five_point_projection(g.transformed(np.eye(3), delta), spec)
            np.testing.assert_allclose(np.linalg.norm(p2 - p1, axis=1),
                                       np.full(5, np.linalg.norm(delta)), atol=1e-12)

    def test_width_over_spec_rejected(self, spec):
        g = GraspPose(np.eye(3), np.zeros(3), spec.max_width + 1e-6)
        with pytest.raises(WidthExceedsSpec):
            five_point_projection(g, spec)


class TestPosePointDistance:
    def test_identical_grasps(self, spec):
        rng = np.random.default_rng(9)
        g = random_pose(rng)
        assert grasp_pose_point_distance(g, g, spec) == 0.0

    def test_pure_translation(self, spec):
        g1 = GraspPose(np.eye(3), np.zeros(3), 0.05)
        g2 = GraspPose(np.eye(3), (0.01, 0, 0), 0.05)
        assert grasp_pose_point_distance(g1, g2, spec) == pytest.approx(0.01, abs=1e-15)

    def test_zero_only_for_identical_pose_and_width(self, spec):
        g1 = GraspPose(np.eye(3), np.zeros(3), 0.05)
        g2 = GraspPose(np.eye(3), np.zeros(3), 0.06)
        assert grasp_pose_point_distance(g1, g2, spec) > 0

    def test_matches_recomputation(self, spec):
        rng = np.random.default_rng(10)
        for _ in range(300):
            g1, g2 = random_pose(rng), random_pose(rng)
            expected = float(np.mean(np.linalg.norm(
                five_point_projection(g1, spec) - five_point_projection(g2, spec), axis=1)))
            assert grasp_pose_point_distance(g1, g2, spec) == expected

    def test_symmetry(self, spec):
        rng = np.random.default_rng(12)
        g1, g2 = random_pose(rng), random_pose(rng)
        assert grasp_pose_point_distance(g1, g2, spec) == \
            pytest.approx(grasp_pose_point_distance(g2, g1, spec), abs=1e-15)


class TestGraspSetLoss:
    def test_identical_sets_zero(self, spec):
        rng = np.random.default_rng(13)
        gts = [random_pose(rng) for _ in range(5)]
        preds = [(g, 1) for g in gts]
        assert grasp_set_loss(preds, gts, spec) == 0.0

    def test_single_translation_offset(self, spec):
        gt = GraspPose(np.eye(3), np.zeros(3), 0.05)
        pred = GraspPose(np.eye(3), (0.01, 0, 0), 0.05)
        assert grasp_set_loss([(pred, 1)], [gt], spec) == pytest.approx(0.01, abs=1e-15)

    def test_min_picks_nearer_ground_truth(self, spec):
        gt_near = GraspPose(np.eye(3), (0.005, 0, 0), 0.05)
        gt_far = GraspPose(np.eye(3), (0.5, 0, 0), 0.05)
        pred = GraspPose(np.eye(3), np.zeros(3), 0.05)
        loss = grasp_set_loss([(pred, 1)], [gt_near, gt_far], spec)
        brute = min(grasp_pose_point_distance(pred, gt, spec) for gt in (gt_near, gt_far))
        assert loss == brute == pytest.approx(0.005, abs=1e-15)

    def test_zero_weights_skip_matching(self, spec):
        pred = GraspPose(np.eye(3), np.zeros(3), 0.05)
        gt = GraspPose(np.eye(3), (1, 0, 0), 0.05)
        assert grasp_set_loss([(pred, 0)], [gt], spec) == 0.0

    def test_weighted_prediction_requires_ground_truth(self, spec):
        pred = GraspPose(np.eye(3), np.zeros(3), 0.05)
        with pytest.raises(EmptyGroundTruth):
            grasp_set_loss([(pred, 1)], [], spec)
        # unweighted predictions are fine without ground truth
        assert grasp_set_loss([(pred, 0)], [], spec) == 0.0

    def test_empty_predictions_rejected(self, spec):
        with pytest.raises(ValueError):
            grasp_set_loss([], [GraspPose(np.eye(3), np.zeros(3), 0.05)], spec)

    def test_monotone_under_receding_ground_truth(self, spec):
        rng = np.random.default_rng(14)
        preds = [(random_pose(rng), 1) for _ in range(4)]
        gts = [random_pose(rng) for _ in range(3)]
        loss = grasp_set_loss(preds, gts, spec)
        # push every ground truth strictly farther from all predictions
        centroid = np.mean([g.translation for g, _ in preds], axis=0)
        worse = []
        for gt in gts:
            away = gt.translation - centroid
            away = away / max(np.linalg.norm(away), 1e-9)
            worse.append(gt.transformed(np.eye(3), 5.0 * away))
        assert grasp_set_loss(preds, worse, spec) >= loss


class TestPoseValidation:
    def test_rejects_non_rotation(self):
        with pytest.raises(NotOrthonormal):
            GraspPose(np.eye(3) * 1.001, np.zeros(3), 0.05)

    def test_rejects_negative_width(self):
        with pytest.raises(ValueError):
            GraspPose(np.eye(3), np.zeros(3), -0.01)

    def test_gripper_spec_validation(self):
        with pytest.raises(ValueError):
            GripperSpec(max_width=0.015, finger_thickness=0.01)
        with pytest.raises(ValueError):
            GripperSpec(finger_length=0.0)

    def test_rotation_about_axis_matches_oracle(self):
        rng = np.random.default_rng(15)
        for _ in range(100):
            axis = rng.normal(size=3)
            theta = rng.uniform(-math.pi, math.pi)
            np.testing.assert_allclose(rotation_about_axis(axis, theta),
                                       axis_angle_matrix(axis, theta), atol=1e-12)
