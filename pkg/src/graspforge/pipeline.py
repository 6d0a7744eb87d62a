"""End-to-end pipeline stages over a workspace.

Stage order: init -> ingest -> gen-scenes -> render -> propagate ->
triplets -> eval. Every stage re-reads its inputs from the workspace, so
stages can run in separate processes. Scene-indexed stages optionally
fan out over a thread pool; each unit of work is seeded independently
and results are written in index order, so outputs are byte-identical
for any thread count.
"""

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .benchmark import evaluate, generate_triplets, random_task_baseline
from .catalog import apply_verdict
from .geometry import GripperSpec
from .rendering import render_cloud
from .scenes import (CameraConfig, TableSpec, catalog_as_map, generate_scene,
                     mix_seed, propagate_grasps)
from .stand_ins import load_assets, write_desk_assets
from .workspace import (MissingDependency, Workspace, object_from_payload,
                        object_to_payload, predictions_from_payload,
                        propagated_from_payload, propagated_to_payload,
                        report_to_payload, scene_from_payload, scene_to_payload,
                        triplets_from_payload, triplets_to_payload)


def _map_indexed(fn, items, threads: int):
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def gripper_from_config(config: dict) -> GripperSpec:
    g = config.get("gripper", {})
    return GripperSpec(
        max_width=g.get("max_width", 0.08),
        finger_length=g.get("finger_length", 0.046),
        base_depth=g.get("base_depth", 0.02),
        finger_thickness=g.get("finger_thickness", 0.01),
    )


def table_from_config(config: dict) -> TableSpec:
    t = config.get("table", {})
    return TableSpec(
        half_extents=tuple(t.get("half_extents", (0.3, 0.3))),
        top_z=t.get("top_z", 0.75),
        thickness=t.get("thickness", 0.04),
    )


def camera_config_from_config(config: dict) -> CameraConfig:
    c = config.get("cameras", {})
    return CameraConfig(
        count=c.get("count", 2),
        elevation_deg=tuple(c.get("elevation_deg", (35.0, 55.0))),
        min_azimuth_separation_deg=c.get("min_azimuth_separation_deg", 60.0),
        distance=tuple(c.get("distance", (0.8, 1.2))),
        fx=c.get("fx", 280.0), fy=c.get("fy", 280.0),
        width=c.get("width", 320), height=c.get("height", 240),
    )


def load_catalog(ws: Workspace, with_verdicts: bool = True) -> list:
    paths = sorted((ws.root / "catalog").glob("*.json"))
    if not paths:
        raise MissingDependency("catalog is empty (run ingest)")
    objects = [object_from_payload(ws.read_text_stage("object", p.relative_to(ws.root).as_posix()))
               for p in paths]
    if with_verdicts:
        state = ws.effective_verdicts()
        by_id = {o.id: o for o in objects}
        for (oid, gid, task), verdict in state.items():
            if oid in by_id:
                try:
                    by_id[oid] = apply_verdict(by_id[oid], gid, task, verdict)
                except Exception:
                    continue  # stale log entries for relabeled grasps are skipped
        objects = [by_id[o.id] for o in objects]
    return objects


def run_ingest(ws: Workspace, assets_dir=None) -> int:
    """Build the catalog stage from an asset directory (declared mesh +
    affordance + grasp files). Without one, the bundled desk stand-ins are
    materialized first, so ingestion always exercises the file parsers."""
    ws.manifest()
    if assets_dir is None:
        assets_dir = ws.root / "assets"
        if not (Path(assets_dir) / "objects.json").exists():
            write_desk_assets(assets_dir)
    spec = gripper_from_config(ws.manifest()["config"])
    objects = load_assets(assets_dir, spec)
    for obj in objects:
        ws.write_text_stage("object", f"catalog/{obj.id}.json", object_to_payload(obj))
    return len(objects)


def run_gen_scenes(ws: Workspace, count: int, seed: int | None = None,
                   sigma: float | None = None, threads: int = 1) -> list[str]:
    manifest = ws.manifest()
    config = manifest["config"]
    catalog = load_catalog(ws, with_verdicts=False)
    master_seed = manifest["master_seed"] if seed is None else int(seed)
    sigma = config.get("sigma", 0.12) if sigma is None else float(sigma)
    table = table_from_config(config)
    cam_cfg = camera_config_from_config(config)
    max_attempts = config.get("max_attempts", 50)

    def build(index: int):
        return generate_scene(catalog, master_seed, index, table=table, sigma=sigma,
                              max_attempts=max_attempts, camera_cfg=cam_cfg)

    scenes = _map_indexed(build, range(count), threads)
    ids = []
    for scene in scenes:
        ws.write_text_stage("scene", f"scenes/{scene.scene_id}.json", scene_to_payload(scene))
        ids.append(scene.scene_id)
    return ids


def list_scene_ids(ws: Workspace) -> list[str]:
    return sorted(p.stem for p in (ws.root / "scenes").glob("*.json")
                  if not p.name.endswith(".grasps.json"))


def load_scene(ws: Workspace, scene_id: str):
    return scene_from_payload(ws.read_text_stage("scene", f"scenes/{scene_id}.json"))


def run_render(ws: Workspace, threads: int = 1, depth_noise_sigma: float = 0.0) -> int:
    manifest = ws.manifest()
    catalog_map = catalog_as_map(load_catalog(ws, with_verdicts=False))
    scene_ids = list_scene_ids(ws)
    if not scene_ids:
        raise MissingDependency("no scenes to render (run gen-scenes)")
    scenes = [load_scene(ws, sid) for sid in scene_ids]
    jobs = [(i, scene, cam) for i, scene in enumerate(scenes)
            for cam in range(len(scene.cameras))]

    def render(job):
        i, scene, cam = job
        rng = None
        if depth_noise_sigma > 0.0:
            import numpy as np
            rng = np.random.default_rng(mix_seed(manifest["master_seed"], i, cam, 0xD0))
        return render_cloud(scene, cam, catalog_map, depth_noise_sigma, rng)

    clouds = _map_indexed(render, jobs, threads)
    for cloud in clouds:
        ws.write_cloud(cloud)
    return len(clouds)


def run_propagate(ws: Workspace, threads: int = 1) -> int:
    manifest = ws.manifest()
    catalog = load_catalog(ws, with_verdicts=True)
    spec = gripper_from_config(manifest["config"])
    scene_ids = list_scene_ids(ws)
    if not scene_ids:
        raise MissingDependency("no scenes to propagate (run gen-scenes)")
    scenes = [load_scene(ws, sid) for sid in scene_ids]

    def propagate(scene):
        return propagate_grasps(scene, catalog, spec)

    results = _map_indexed(propagate, scenes, threads)
    total = 0
    for scene, grasp_map in zip(scenes, results):
        ws.write_text_stage("propagated", f"scenes/{scene.scene_id}.grasps.json",
                            propagated_to_payload(scene.scene_id, grasp_map))
        total += sum(len(v) for v in grasp_map.values())
    return total


def run_triplets(ws: Workspace) -> int:
    catalog = load_catalog(ws, with_verdicts=False)
    scene_ids = list_scene_ids(ws)
    if not scene_ids:
        raise MissingDependency("no scenes (run gen-scenes)")
    cloud_keys = ws.list_clouds()
    if not cloud_keys:
        raise MissingDependency("no rendered clouds (run render)")
    pairs = []
    for sid in scene_ids:
        scene = load_scene(ws, sid)
        payload = ws.read_text_stage("propagated", f"scenes/{sid}.grasps.json")
        pairs.append((scene, propagated_from_payload(payload)))
    clouds = [ws.read_cloud(sid, cam) for sid, cam in cloud_keys]
    triplets = generate_triplets(pairs, catalog, clouds)
    ws.write_text_stage("triplets", "triplets/triplets.json", triplets_to_payload(triplets))
    return len(triplets)


def load_triplets(ws: Workspace):
    return triplets_from_payload(ws.read_text_stage("triplets", "triplets/triplets.json"))


def run_eval(ws: Workspace, pred_path, th_d_cm: float = 3.0, th_alpha_deg: float = 30.0,
             name: str | None = None):
    """Score a prediction file; thresholds arrive in cm/degrees at the
    surface and convert to meters/radians internally."""
    import math

    trips = load_triplets(ws)
    pred_path = Path(pred_path)
    if not pred_path.exists():
        raise MissingDependency(f"prediction file {pred_path} not found")
    from .workspace import parse_stage_text
    preds = predictions_from_payload(parse_stage_text(pred_path.read_text(), "predictions"))
    report = evaluate(preds, trips, th_d=th_d_cm / 100.0,
                      th_alpha=math.radians(th_alpha_deg))
    out_name = name or (pred_path.stem + "_report")
    ws.write_text_stage("report", f"reports/{out_name}.json", report_to_payload(report))
    return report


def run_baseline_random(ws: Workspace, seed: int, draws_per_grasp: int = 1):
    """Random-task baseline over the catalog's labeled grasps."""
    catalog = load_catalog(ws, with_verdicts=True)
    gt_sets = [g.effective_tasks() for obj in catalog for g in obj.grasps
               if g.effective_tasks()]
    gt_sets = gt_sets * max(1, draws_per_grasp)
    precision = random_task_baseline(gt_sets, seed)
    payload = {"baseline": "random", "seed": int(seed), "grasps": len(gt_sets),
               "precision": precision}
    ws.write_text_stage("report", "reports/baseline_random.json", payload)
    return precision
