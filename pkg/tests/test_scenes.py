import math

import numpy as np
import pytest

from graspforge.catalog import SMALL_CATEGORIES
from graspforge.geometry import grasp_distance
from graspforge.scenes import (CameraConfig, CatalogTooSmall, PlacementFailed, Scene,
                               TableSpec, catalog_as_map, generate_scene, mix_seed,
                               place_objects, propagate_grasps, sample_cameras,
                               sample_object_set)


class TestSeedMixing:
    def test_deterministic(self):
        assert mix_seed(42, 3) == mix_seed(42, 3)

    def test_index_sensitivity(self):
        seen = {mix_seed(42, i) for i in range(1000)}
        assert len(seen) == 1000

    def test_master_sensitivity(self):
        assert mix_seed(1, 0) != mix_seed(2, 0)


class TestSampleObjectSet:
    def test_exact_catalog_of_three(self, desk_catalog):
        small = desk_catalog[:3]
        chosen = sample_object_set(small, 99)
        assert sorted(o.id for o in chosen) == sorted(o.id for o in small)

    def test_deterministic_per_seed(self, desk_catalog):
        a = [o.id for o in sample_object_set(desk_catalog, 7)]
        b = [o.id for o in sample_object_set(desk_catalog, 7)]
        assert a == b

    def test_size_histogram_supported_on_3_to_6(self, desk_catalog):
        # a 50-object catalog: replicate the six stand-ins with fresh ids
        from dataclasses import replace
        catalog = []
        for k in range(9):
            for obj in desk_catalog:
                catalog.append(replace(obj, id=f"{obj.id}_{k}"))
        catalog = catalog[:50]
        counts = {}
        for seed in range(10000):
            n = len(sample_object_set(catalog, seed))
            counts[n] = counts.get(n, 0) + 1
        assert set(counts) == {3, 4, 5, 6}
        for n in (3, 4, 5, 6):
            assert counts[n] > 2000  # roughly uniform

    def test_at_least_two_categories(self, desk_catalog):
        for seed in range(200):
            chosen = sample_object_set(desk_catalog, seed)
            assert len({o.category for o in chosen}) >= 2
            assert 3 <= len(chosen) <= 6

    def test_catalog_too_small(self, desk_catalog):
        with pytest.raises(CatalogTooSmall):
            sample_object_set(desk_catalog[:2], 0)
        # three objects all of one category: too few categories
        from dataclasses import replace
        mono = [replace(desk_catalog[0], id=f"m{k}") for k in range(3)]
        with pytest.raises(CatalogTooSmall):
            sample_object_set(mono, 0)


class TestPlaceObjects:
    def test_sigma_zero_places_at_center(self, desk_catalog_map):
        table = TableSpec()
        mug = desk_catalog_map["mug_01"]
        scene = place_objects([mug], table, sigma=0.0, rng_seed=5)
        p = scene.placements[0]
        assert p.translation[0] == 0.0 and p.translation[1] == 0.0
        # resting on the table top
        mesh = scene.posed_mesh(desk_catalog_map, 0)
        assert mesh.vertices[:, 2].min() == pytest.approx(table.top_z, abs=1e-9)

    def test_sigma_zero_second_object_fails(self, desk_catalog_map):
        table = TableSpec()
        mug = desk_catalog_map["mug_01"]
        bowl = desk_catalog_map["bowl_01"]
        with pytest.raises(PlacementFailed) as err:
            place_objects([bowl, mug], table, sigma=0.0, max_attempts=10, rng_seed=5)
        assert err.value.object_id == "mug_01"

    def test_knife_rests_on_lift_cube(self, desk_catalog_map):
        table = TableSpec()
        knife = desk_catalog_map["knife_01"]
        scene = place_objects([knife], table, sigma=0.05, rng_seed=9)
        p = scene.placements[0]
        assert p.lifted is True
        assert len(scene.lift_cubes) == 1
        cube = scene.lift_cubes[0]
        assert cube.edge == 0.05
        assert cube.center[2] == pytest.approx(table.top_z + 0.025)
        mesh = scene.posed_mesh(desk_catalog_map, 0)
        assert mesh.vertices[:, 2].min() == pytest.approx(table.top_z + 0.05, abs=1e-9)

    def test_deterministic_per_seed(self, desk_catalog):
        table = TableSpec()
        objs = desk_catalog[:4]
        s1 = place_objects(objs, table, rng_seed=123)
        s2 = place_objects(objs, table, rng_seed=123)
        for p1, p2 in zip(s1.placements, s2.placements):
            assert np.array_equal(p1.translation, p2.translation)
            assert np.array_equal(p1.rotation, p2.rotation)

    def test_duplicate_object_ids_rejected(self, desk_catalog_map):
        from graspforge.scenes import Placement
        mug = desk_catalog_map["mug_01"]
        p = Placement("mug_01", np.eye(3), (0, 0, 0.75), False)
        with pytest.raises(ValueError):
            Scene("dup", TableSpec(), (p, p), (), ())


class TestCameras:
    def test_two_cameras_with_azimuth_separation(self, desk_catalog):
        table = TableSpec()
        for seed in range(50):
            cams = sample_cameras(table, seed)
            assert len(cams) == 2
            center = np.array([0, 0, table.top_z])
            azs = []
            for cam in cams:
                offset = cam.translation - center
                dist = np.linalg.norm(offset)
                assert 0.8 - 1e-9 <= dist <= 1.2 + 1e-9
                elev = math.degrees(math.asin(offset[2] / dist))
                assert 35 - 1e-6 <= elev <= 55 + 1e-6
                azs.append(math.atan2(offset[1], offset[0]))
            sep = abs((azs[1] - azs[0] + math.pi) % (2 * math.pi) - math.pi)
            assert sep >= math.radians(60) - 1e-9

    def test_table_center_projects_to_principal_point(self, desk_catalog):
        table = TableSpec()
        for seed in range(20):
            for cam in sample_cameras(table, seed):
                u, v, depth = cam.project([0, 0, table.top_z])
                assert depth > 0
                assert u == pytest.approx(cam.cx, abs=1e-6)
                assert v == pytest.approx(cam.cy, abs=1e-6)

    def test_invalid_camera_parameters(self):
        from graspforge.scenes import CameraSpec
        with pytest.raises(ValueError):
            CameraSpec(np.eye(3), np.zeros(3), -1.0, 280.0, 160, 120, 320, 240)
        with pytest.raises(ValueError):
            CameraSpec(np.eye(3), np.zeros(3), 280.0, 280.0, 160, 120, 0, 240)


class TestGenerateScene:
    def test_scene_invariants_over_seeds(self, desk_catalog, desk_catalog_map):
        table = TableSpec()
        for idx in range(40):
            scene = generate_scene(desk_catalog, 77, idx)
            assert 3 <= len(scene.placements) <= 6
            cats = [desk_catalog_map[p.object_id].category for p in scene.placements]
            assert len(set(cats)) == len(cats)  # distinct categories per scene
            for i, p in enumerate(scene.placements):
                support = table.top_z + (0.05 if p.lifted else 0.0)
                mesh = scene.posed_mesh(desk_catalog_map, i)
                rest = mesh.vertices[:, 2].min() - support
                assert abs(rest) < 1e-3  # within 1 mm of the support surface
                assert abs(rest) < 1e-9  # and in fact exact
                assert p.lifted == (desk_catalog_map[p.object_id].category in SMALL_CATEGORIES)
            assert len(scene.cameras) == 2

    def test_bit_identical_per_seed(self, desk_catalog):
        a = generate_scene(desk_catalog, 31337, 5)
        b = generate_scene(desk_catalog, 31337, 5)
        assert a.scene_id == b.scene_id
        for p1, p2 in zip(a.placements, b.placements):
            assert p1.object_id == p2.object_id
            assert np.array_equal(p1.rotation, p2.rotation)
            assert np.array_equal(p1.translation, p2.translation)
        for c1, c2 in zip(a.cameras, b.cameras):
            assert np.array_equal(c1.rotation, c2.rotation)
            assert np.array_equal(c1.translation, c2.translation)


class TestPropagation:
    def test_identity_placement_keeps_object_frame(self, desk_catalog_map, spec):
        from graspforge.scenes import Placement
        mug = desk_catalog_map["mug_01"]
        placement = Placement("mug_01", np.eye(3), np.zeros(3), False)
        scene = Scene("identity", None, (placement,), (), ())
        out = propagate_grasps(scene, desk_catalog_map, spec)
        assert set(out) == {"mug_01"}
        poses = {g.grasp_id: g.pose for g in out["mug_01"]}
        for g in mug.grasps:
            np.testing.assert_array_equal(poses[g.grasp_id].translation, g.pose.translation)
            np.testing.assert_array_equal(poses[g.grasp_id].rotation, g.pose.rotation)

    def test_pure_translation_shifts_translations_only(self, desk_catalog_map, spec):
        from graspforge.scenes import Placement
        tau = np.array([0.05, -0.02, 0.3])
        placement = Placement("mug_01", np.eye(3), tau, False)
        scene = Scene("shifted", None, (placement,), (), ())
        out = propagate_grasps(scene, desk_catalog_map, spec)
        mug = desk_catalog_map["mug_01"]
        poses = {g.grasp_id: g.pose for g in out["mug_01"]}
        for g in mug.grasps:
            np.testing.assert_allclose(poses[g.grasp_id].translation,
                                       g.pose.translation + tau, atol=1e-15)
            np.testing.assert_array_equal(poses[g.grasp_id].rotation, g.pose.rotation)

    def test_crowded_scene_retains_subset_of_isolated(self, desk_catalog, desk_catalog_map, spec):
        table = TableSpec()
        crowded = generate_scene(desk_catalog, 2, 0, sigma=0.05)
        kept_crowded = propagate_grasps(crowded, desk_catalog_map, spec)
        for i, p in enumerate(crowded.placements):
            lone = Scene("lone", table, (crowded.placements[i],),
                         tuple(c for c in crowded.lift_cubes
                               if np.allclose(c.center[:2], p.translation[:2])),
                         ())
            kept_lone = propagate_grasps(lone, desk_catalog_map, spec)
            crowded_ids = {g.grasp_id for g in kept_crowded[p.object_id]}
            lone_ids = {g.grasp_id for g in kept_lone[p.object_id]}
            assert crowded_ids <= lone_ids

    def test_rejected_tasks_are_excluded(self, desk_catalog_map, spec):
        from graspforge.catalog import apply_verdict
        from graspforge.scenes import Placement
        knife = apply_verdict(desk_catalog_map["knife_01"], "knife_g1", "Cut", "rejected")
        placement = Placement("knife_01", np.eye(3), (0, 0, 0.0), True)
        scene = Scene("verdicts", None, (placement,), (), ())
        out = propagate_grasps(scene, {"knife_01": knife}, spec)
        ids = {g.grasp_id for g in out["knife_01"]}
        assert "knife_g1" not in ids  # its only task was rejected
        assert "knife_g2" in ids

    def test_rigid_consistency_of_pairwise_distances(self, desk_catalog, desk_catalog_map, spec):
        scene = generate_scene(desk_catalog, 4, 1)
        out = propagate_grasps(scene, desk_catalog_map, spec)
        for pl in scene.placements:
            obj = desk_catalog_map[pl.object_id]
            obj_poses = {g.grasp_id: g.pose for g in obj.grasps}
            scene_grasps = out[pl.object_id]
            for i in range(len(scene_grasps)):
                for j in range(i + 1, len(scene_grasps)):
                    ds = grasp_distance(scene_grasps[i].pose, scene_grasps[j].pose)
                    do = grasp_distance(obj_poses[scene_grasps[i].grasp_id],
                                        obj_poses[scene_grasps[j].grasp_id])
                    assert abs(ds.d_t - do.d_t) < 1e-9
                    assert abs(ds.d_alpha - do.d_alpha) < 1e-9
