"""Procedural desk-scale stand-in objects.

Ships one object per category (mug, bottle, knife, hat, bowl, scissor)
built from closed primitives, with affordance regions selected by
triangle position and a hand-designed object-frame grasp set, so the
whole pipeline runs without external assets.

The grasp sets keep a separation guarantee: any two grasps of one object
differ by >= 6.5 cm in translation or >= 65 degrees in rotation. The
benchmark's threshold behavior is then exact under the +-3 cm / +-30 deg
matching rules no matter how scenes compose the objects (rigid placement
preserves pairwise distances).
"""

import json
from pathlib import Path

import numpy as np

from .catalog import AnnotatedGrasp, ObjectModel, assign_task_labels, load_object
from .geometry import GraspPose, GripperSpec, rotation_from_approach_baseline
from .meshio import TriMesh, box_mesh, cylinder_mesh, dome_mesh, frustum_mesh, merge_meshes, save_off, torus_mesh


def _grasp(grasp_id, point, approach, baseline, width, spec: GripperSpec) -> AnnotatedGrasp:
    """Grasp whose fingertip segment midpoint sits at `point`."""
    a = np.asarray(approach, dtype=float)
    b = np.asarray(baseline, dtype=float)
    rot = rotation_from_approach_baseline(a / np.linalg.norm(a), b / np.linalg.norm(b))
    translation = np.asarray(point, dtype=float) - spec.finger_length * rot[:, 2]
    return AnnotatedGrasp(grasp_id, GraspPose(rot, translation, width), frozenset(), {})


def _centroids(mesh: TriMesh) -> np.ndarray:
    return mesh.triangles.mean(axis=1)


def _build_mug(spec: GripperSpec) -> ObjectModel:
    body = cylinder_mesh(0.04, 0.09, segments=20, rows=3)
    handle = torus_mesh(0.018, 0.007, center=(0.06, 0.0, 0.045), n_major=10, n_minor=6)
    mesh = merge_meshes([body, handle])
    nb = len(body.faces)
    cz = _centroids(mesh)[:, 2]
    idx = np.arange(len(mesh.faces))
    affordances = {
        "Pour": frozenset(idx[(idx < nb) & (cz > 0.089)]),
        "Wrap": frozenset(idx[(idx < nb) & (cz > 1e-9) & (cz < 0.06)]),
        "Contain": frozenset(idx[(idx < nb) & (cz > 0.06) & (cz < 0.089)]),
        "Grasp": frozenset(idx[idx >= nb]),
    }
    grasps = (
        _grasp("mug_g1", (0.0, 0.01, 0.09), (0, 0, -1), (0, 1, 0), 0.04, spec),
        _grasp("mug_g2", (0.0, -0.01, 0.09), (0, 0, -1), (1, 0, 0), 0.04, spec),
        _grasp("mug_g3", (0.085, 0.0, 0.045), (-1, 0, 0), (0, 1, 0), 0.04, spec),
        _grasp("mug_g4", (-0.04, 0.0, 0.02), (1, 0, 0), (0, 1, 0), 0.07, spec),
        _grasp("mug_g5", (0.0, -0.04, 0.075), (0, 1, 0), (1, 0, 0), 0.07, spec),
    )
    return ObjectModel("mug_01", "Mug", mesh, 1.0, affordances, grasps)


def _build_bottle(spec: GripperSpec) -> ObjectModel:
    body = cylinder_mesh(0.035, 0.14, segments=20, rows=3)
    neck = cylinder_mesh(0.015, 0.08, segments=12, rows=1, base_z=0.13)
    mesh = merge_meshes([body, neck])
    nb = len(body.faces)
    cz = _centroids(mesh)[:, 2]
    idx = np.arange(len(mesh.faces))
    affordances = {
        "Grasp": frozenset(idx[idx >= nb]),
        "Wrap": frozenset(idx[(idx < nb) & (cz > 1e-9) & (cz < 0.09)]),
        "Contain": frozenset(idx[(idx < nb) & (cz >= 0.09)]),
    }
    grasps = (
        _grasp("bottle_g1", (-0.015, 0.0, 0.17), (1, 0, 0), (0, 1, 0), 0.05, spec),
        _grasp("bottle_g2", (0.015, 0.0, 0.17), (-1, 0, 0), (0, 1, 0), 0.05, spec),
        _grasp("bottle_g3", (0.0, -0.035, 0.03), (0, 1, 0), (1, 0, 0), 0.075, spec),
        _grasp("bottle_g4", (0.0, 0.035, 0.115), (0, -1, 0), (1, 0, 0), 0.075, spec),
    )
    return ObjectModel("bottle_01", "Bottle", mesh, 1.0, affordances, grasps)


def _build_knife(spec: GripperSpec) -> ObjectModel:
    handle = box_mesh((0.10, 0.025, 0.022), center=(-0.06, 0.0, 0.011))
    blade = box_mesh((0.12, 0.018, 0.012), center=(0.05, 0.0, 0.010))
    mesh = merge_meshes([handle, blade])
    nh = len(handle.faces)
    idx = np.arange(len(mesh.faces))
    affordances = {
        "Cut": frozenset(idx[idx < nh]),
        "Handover": frozenset(idx[idx >= nh]),
    }
    grasps = (
        _grasp("knife_g1", (-0.06, 0.0, 0.022), (0, 0, -1), (0, 1, 0), 0.05, spec),
        _grasp("knife_g2", (-0.10, 0.0, 0.022), (0, 0, -1), (1, 0, 0), 0.05, spec),
        _grasp("knife_g3", (0.05, 0.0, 0.016), (0, 0, -1), (0, 1, 0), 0.05, spec),
        _grasp("knife_g4", (0.095, 0.0, 0.016), (0, 0, -1), (1, 0, 0), 0.05, spec),
    )
    return ObjectModel("knife_01", "Knife", mesh, 1.0, affordances, grasps)


def _build_hat(spec: GripperSpec) -> ObjectModel:
    brim = cylinder_mesh(0.085, 0.008, segments=20, rows=1)
    dome = dome_mesh(0.055, segments=16, rings=3, base_z=0.008)
    mesh = merge_meshes([brim, dome])
    nbrim = len(brim.faces)
    idx = np.arange(len(mesh.faces))
    affordances = {
        "Wear": frozenset(idx[idx < nbrim]),
        "Grasp": frozenset(idx[idx >= nbrim]),
    }
    grasps = (
        _grasp("hat_g1", (0.0, 0.0, 0.063), (0, 0, -1), (0, 1, 0), 0.06, spec),
        _grasp("hat_g2", (0.073, 0.0, 0.008), (0, 0, -1), (0, 1, 0), 0.05, spec),
        _grasp("hat_g3", (-0.073, 0.0, 0.008), (0, 0, -1), (1, 0, 0), 0.02, spec),
    )
    return ObjectModel("hat_01", "Hat", mesh, 1.0, affordances, grasps)


def _build_bowl(spec: GripperSpec) -> ObjectModel:
    mesh = frustum_mesh(0.045, 0.08, 0.05, segments=20)
    cz = _centroids(mesh)[:, 2]
    idx = np.arange(len(mesh.faces))
    affordances = {
        "Grasp": frozenset(idx[cz > 0.0499]),
        "Wrap": frozenset(idx[(cz > 1e-9) & (cz < 0.0499)]),
    }
    grasps = (
        _grasp("bowl_g1", (0.0, 0.06, 0.05), (0, 0, -1), (1, 0, 0), 0.05, spec),
        _grasp("bowl_g2", (0.0, -0.06, 0.05), (0, 0, -1), (1, 0, 0), 0.05, spec),
        _grasp("bowl_g3", (-0.0625, 0.0, 0.025), (1, 0, 0), (0, 1, 0), 0.075, spec),
    )
    return ObjectModel("bowl_01", "Bowl", mesh, 1.0, affordances, grasps)


def _build_scissor(spec: GripperSpec) -> ObjectModel:
    handle = box_mesh((0.08, 0.04, 0.01), center=(-0.04, 0.0, 0.005))
    blades = box_mesh((0.08, 0.016, 0.006), center=(0.04, 0.0, 0.003))
    mesh = merge_meshes([handle, blades])
    nh = len(handle.faces)
    idx = np.arange(len(mesh.faces))
    affordances = {
        "Cut": frozenset(idx[idx < nh]),
        "Handover": frozenset(idx[idx >= nh]),
    }
    grasps = (
        _grasp("scissor_g1", (-0.055, 0.0, 0.01), (0, 0, -1), (0, 1, 0), 0.06, spec),
        _grasp("scissor_g2", (-0.045, 0.0, 0.01), (0, 0, -1), (1, 0, 0), 0.06, spec),
        _grasp("scissor_g3", (0.04, 0.0, 0.006), (0, 0, -1), (0, 1, 0), 0.05, spec),
        _grasp("scissor_g4", (0.06, 0.0, 0.006), (0, 0, -1), (1, 0, 0), 0.04, spec),
    )
    return ObjectModel("scissor_01", "Scissor", mesh, 1.0, affordances, grasps)


_BUILDERS = {
    "mug_01": _build_mug,
    "bottle_01": _build_bottle,
    "knife_01": _build_knife,
    "hat_01": _build_hat,
    "bowl_01": _build_bowl,
    "scissor_01": _build_scissor,
}


def build_desk_catalog(spec: GripperSpec | None = None, labeled: bool = True) -> list[ObjectModel]:
    """The six stand-in objects, optionally with task labels assigned."""
    spec = spec or GripperSpec()
    objects = [builder(spec) for builder in _BUILDERS.values()]
    if labeled:
        objects = [assign_task_labels(obj, spec) for obj in objects]
    return objects


def write_desk_assets(directory) -> list[dict]:
    """Write the stand-ins as OFF + affordance/grasp JSON input files.

    Returns manifest entries usable with load_object, so ingestion runs
    through the same parsers as user-supplied assets.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for obj in build_desk_catalog(labeled=False):
        mesh_path = directory / f"{obj.id}.off"
        aff_path = directory / f"{obj.id}.affordances.json"
        grasp_path = directory / f"{obj.id}.grasps.json"
        save_off(obj.mesh, mesh_path)
        aff_payload = {"regions": {t: sorted(map(int, tris)) for t, tris in obj.affordances.items()}}
        aff_path.write_text(json.dumps(aff_payload, indent=1, sort_keys=True))
        grasp_payload = {"grasps": [
            {
                "grasp_id": g.grasp_id,
                "rotation": [float(x) for x in g.pose.rotation.reshape(9)],
                "translation": [float(x) for x in g.pose.translation],
                "width": float(g.pose.width),
            }
            for g in obj.grasps
        ]}
        grasp_path.write_text(json.dumps(grasp_payload, indent=1, sort_keys=True))
        entries.append({
            "object_id": obj.id,
            "category": obj.category,
            "mesh": mesh_path.name,
            "affordances": aff_path.name,
            "grasps": grasp_path.name,
            "scale": 1.0,
        })
    (directory / "objects.json").write_text(json.dumps({"objects": entries}, indent=1, sort_keys=True))
    return entries


def load_assets(directory, spec: GripperSpec | None = None) -> list[ObjectModel]:
    """Ingest an asset directory written by write_desk_assets (or hand-made
    in the same layout) and assign task labels."""
    spec = spec or GripperSpec()
    directory = Path(directory)
    manifest = json.loads((directory / "objects.json").read_text())
    objects = []
    for entry in manifest["objects"]:
        obj = load_object(
            directory / entry["mesh"],
            entry["category"],
            directory / entry["affordances"] if entry.get("affordances") else None,
            directory / entry["grasps"] if entry.get("grasps") else None,
            object_id=entry["object_id"],
            scale=float(entry.get("scale", 1.0)),
        )
        objects.append(assign_task_labels(obj, spec))
    return objects
