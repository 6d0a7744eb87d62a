"""HTTP review service for human verification of grasp-task labels.

Serves objects, their labeled grasps, and preview clouds; persists
accept/reject verdicts into the workspace's append-only log. Reads are
concurrent; verdict writes serialize through a process-level lock plus
the workspace writer lock, so a write blocks readers for no longer than
one log append.
"""

import threading
import time
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .catalog import (TASKS, VERDICT_ACCEPTED, VERDICT_REJECTED, VERDICT_UNREVIEWED,
                      apply_verdict)
from .errors import GraspForgeError
from .geometry import GripperSpec, five_point_projection
from .pipeline import gripper_from_config, load_catalog
from .rendering import render_cloud
from .scenes import CameraConfig, Scene, look_at_camera
from .workspace import FORMAT_VERSION, Workspace

_MAX_MESH_FACES = 5000
_MAX_CLOUD_POINTS = 4000

_PLACEHOLDER_PAGE = """<!doctype html>
<html><head><title>graspforge review</title></head>
<body><h1>graspforge review service</h1>
<p>No UI bundle is hosted. Build the frontend and pass --ui-dir, or use the
JSON API under <code>/api</code>.</p></body></html>
"""


class VerdictBody(BaseModel):
    grasp_id: str
    task: str
    verdict: str = Field(pattern="^(accepted|rejected)$")
    reviewer: str = "anonymous"


def _verdict_counts(obj) -> dict:
    counts = {VERDICT_UNREVIEWED: 0, VERDICT_ACCEPTED: 0, VERDICT_REJECTED: 0}
    for g in obj.grasps:
        for t in g.tasks:
            counts[g.verdicts.get(t, VERDICT_UNREVIEWED)] += 1
    return counts


def _object_cloud(obj, max_points: int) -> list:
    """Single-object preview cloud rendered with a canonical camera."""
    from .scenes import Placement

    lo, hi = obj.mesh.aabb()
    center = 0.5 * (lo + hi)
    dist = max(2.5 * obj.mesh.diameter(), 0.15)
    offset = dist * np.array([0.55, 0.35, 0.76])
    cfg = CameraConfig(width=240, height=180, fx=220.0, fy=220.0)
    cam = look_at_camera(center + offset, center, cfg)
    scene = Scene(
        f"preview_{obj.id}", None,
        (Placement(obj.id, np.eye(3), np.zeros(3), False),), (), (cam,),
    )
    cloud = render_cloud(scene, 0, {obj.id: obj})
    pts = cloud.points
    if len(pts) > max_points:
        stride = int(np.ceil(len(pts) / max_points))
        pts = pts[::stride]
    return [[float(x) for x in p] for p in pts]


def create_app(ws: Workspace, ui_dir=None) -> FastAPI:
    app = FastAPI(title="graspforge review service")
    state_lock = threading.Lock()
    config = ws.manifest()["config"]
    spec = gripper_from_config(config)
    objects = {obj.id: obj for obj in load_catalog(ws, with_verdicts=True)}

    def _headers() -> dict:
        return {"X-Format-Version": str(FORMAT_VERSION)}

    @app.get("/api/objects")
    def list_objects():
        rows = [
            {
                "object_id": obj.id,
                "category": obj.category,
                "labels": _verdict_counts(obj),
            }
            for obj in sorted(objects.values(), key=lambda o: o.id)
        ]
        return JSONResponse({"format_version": FORMAT_VERSION, "objects": rows},
                            headers=_headers())

    @app.get("/api/objects/{object_id}")
    def get_object(object_id: str):
        obj = objects.get(object_id)
        if obj is None:
            raise HTTPException(404, f"unknown object {object_id!r}")
        mesh = obj.mesh
        stride = max(1, int(np.ceil(len(mesh.faces) / _MAX_MESH_FACES)))
        faces = mesh.faces[::stride]
        body = {
            "format_version": FORMAT_VERSION,
            "object_id": obj.id,
            "category": obj.category,
            "gripper": {
                "max_width": spec.max_width,
                "finger_length": spec.finger_length,
                "base_depth": spec.base_depth,
                "finger_thickness": spec.finger_thickness,
            },
            "mesh": {
                "vertices": [[float(x) for x in v] for v in mesh.vertices],
                "faces": [[int(i) for i in f] for f in faces],
                "decimated": bool(stride > 1),
            },
            "affordances": {t: sorted(map(int, v)) for t, v in obj.affordances.items()},
            "grasps": [
                {
                    "grasp_id": g.grasp_id,
                    "rotation": [float(x) for x in g.pose.rotation.reshape(9)],
                    "translation": [float(x) for x in g.pose.translation],
                    "width": float(g.pose.width),
                    "tasks": sorted(g.tasks),
                    "verdicts": {t: g.verdicts.get(t, VERDICT_UNREVIEWED)
                                 for t in sorted(g.tasks)},
                    "five_points": [[float(x) for x in p]
                                    for p in five_point_projection(g.pose, spec)],
                }
                for g in obj.grasps
            ],
            "cloud": {"points": _object_cloud(obj, _MAX_CLOUD_POINTS)},
        }
        return JSONResponse(body, headers=_headers())

    @app.post("/api/objects/{object_id}/verdicts", status_code=201)
    def post_verdict(object_id: str, body: VerdictBody):
        with state_lock:
            obj = objects.get(object_id)
            if obj is None:
                raise HTTPException(404, f"unknown object {object_id!r}")
            try:
                grasp = obj.grasp_by_id(body.grasp_id)
            except GraspForgeError as exc:
                raise HTTPException(404, str(exc)) from exc
            if body.task not in grasp.tasks:
                raise HTTPException(409, f"task {body.task!r} not assigned to {body.grasp_id}")
            record = {
                "object_id": object_id,
                "grasp_id": body.grasp_id,
                "task": body.task,
                "verdict": body.verdict,
                "reviewer": body.reviewer,
                "timestamp": time.time(),
            }
            ws.append_verdict(record)
            objects[object_id] = apply_verdict(obj, body.grasp_id, body.task, body.verdict)
        return JSONResponse({"format_version": FORMAT_VERSION, "record": record},
                            status_code=201, headers=_headers())

    @app.get("/api/export")
    def export_ground_truth():
        rows = []
        for obj in sorted(objects.values(), key=lambda o: o.id):
            grasps = []
            for g in obj.grasps:
                kept = sorted(g.effective_tasks())
                if not kept:
                    continue
                grasps.append({
                    "grasp_id": g.grasp_id,
                    "rotation": [float(x) for x in g.pose.rotation.reshape(9)],
                    "translation": [float(x) for x in g.pose.translation],
                    "width": float(g.pose.width),
                    "tasks": kept,
                })
            rows.append({"object_id": obj.id, "category": obj.category, "grasps": grasps})
        return JSONResponse({"format_version": FORMAT_VERSION, "objects": rows},
                            headers=_headers())

    @app.get("/api/tasks")
    def list_tasks():
        return JSONResponse({"format_version": FORMAT_VERSION, "tasks": list(TASKS)},
                            headers=_headers())

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:
        @app.get("/", response_class=HTMLResponse)
        def index() -> str:
            return _PLACEHOLDER_PAGE

    return app


def serve(ws: Workspace, host: str = "127.0.0.1", port: int = 8080, ui_dir=None) -> None:
    import uvicorn

    uvicorn.run(create_app(ws, ui_dir), host=host, port=port, log_level="warning")
