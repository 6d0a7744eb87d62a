"""Durable workspace layout and bit-exact file schemas.

Layout under the workspace root:

    manifest.json        format_version, master_seed, config snapshot
    catalog/<id>.json    object models (mesh inline, affordances, grasps)
    scenes/<id>.json     scene descriptions
    scenes/<id>.grasps.json  propagated scene-frame grasps
    clouds/<scene>_cam<k>.cloud  JSON header line + little-endian binary
    triplets/triplets.json
    predictions/         caller-supplied prediction files
    reports/<name>.json
    verdicts/log.jsonl   append-only human verdicts, latest entry wins

Text files are JSON with a sha256 checksum over the canonical payload
encoding (sorted keys, compact separators); floats use Python repr, which
round-trips float64 exactly. Cloud binaries declare a little-endian
float32/int32 layout in their header. Writers stage to a temp name and
atomically rename; a lock file serializes writers per workspace.
"""

import fcntl
import hashlib
import json
import os
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .catalog import AnnotatedGrasp, ObjectModel, VERDICT_UNREVIEWED
from .errors import GraspForgeError
from .geometry import GraspPose
from .meshio import TriMesh
from .rendering import LabeledCloud
from .benchmark import EvalReport, EvalRow, PredictionSet, Triplet
from .scenes import CameraSpec, LiftCube, Placement, Scene, TableSpec

FORMAT_VERSION = 1

STAGE_DIRS = ("catalog", "scenes", "clouds", "triplets", "predictions", "reports", "verdicts")

ENV_ROOT = "GRASPFORGE_WORKSPACE"


class SchemaMismatch(GraspForgeError):
    """File structure or format_version does not match expectations."""


class CorruptFile(GraspForgeError):
    """Checksum failure or unreadable payload."""


class MissingDependency(GraspForgeError):
    """A pipeline stage ran before the stages it consumes."""


def _canonical(payload) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False, allow_nan=False).encode()


def _checksum(payload) -> str:
    return hashlib.sha256(_canonical(payload)).hexdigest()


def dump_stage_text(kind: str, payload) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "checksum": _checksum(payload),
        "payload": payload,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def parse_stage_text(text: str, kind: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptFile(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "payload" not in doc:
        raise SchemaMismatch("missing payload")
    if doc.get("format_version") != FORMAT_VERSION:
        raise SchemaMismatch(f"format_version {doc.get('format_version')!r} != {FORMAT_VERSION}")
    if doc.get("kind") != kind:
        raise SchemaMismatch(f"kind {doc.get('kind')!r} != {kind!r}")
    if doc.get("checksum") != _checksum(doc["payload"]):
        raise CorruptFile("payload checksum mismatch")
    return doc["payload"]


class Workspace:
    def __init__(self, root):
        self.root = Path(root)

    # -- lifecycle ---------------------------------------------------------

    @classmethod
    def initialize(cls, root, master_seed: int = 0, config: dict | None = None) -> "Workspace":
        ws = cls(root)
        ws.root.mkdir(parents=True, exist_ok=True)
        if ws.manifest_path.exists():
            raise GraspForgeError(f"workspace already initialized at {ws.root}")
        for sub in STAGE_DIRS:
            (ws.root / sub).mkdir(exist_ok=True)
        manifest = {
            "format_version": FORMAT_VERSION,
            "master_seed": int(master_seed),
            "config": config or {},
        }
        ws._atomic_write(ws.manifest_path, dump_stage_text("manifest", manifest))
        return ws

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    def manifest(self) -> dict:
        if not self.manifest_path.exists():
            raise MissingDependency(f"workspace at {self.root} is not initialized (run init)")
        return parse_stage_text(self.manifest_path.read_text(), "manifest")

    # -- low-level IO ------------------------------------------------------

    def _atomic_write(self, path: Path, data) -> None:
        tmp = path.with_name(path.name + ".tmp")
        mode = "wb" if isinstance(data, bytes) else "w"
        with open(tmp, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)

    @contextmanager
    def writer_lock(self):
        """Single writer per workspace; concurrent readers are unaffected."""
        lock_path = self.root / ".lock"
        with open(lock_path, "a+") as fh:
            fcntl.flock(fh.fileno(), fcntl.LOCK_EX)
            try:
                yield
            finally:
                fcntl.flock(fh.fileno(), fcntl.LOCK_UN)

    def write_text_stage(self, kind: str, relpath: str, payload) -> Path:
        path = self.root / relpath
        path.parent.mkdir(parents=True, exist_ok=True)
        with self.writer_lock():
            self._atomic_write(path, dump_stage_text(kind, payload))
        return path

    def read_text_stage(self, kind: str, relpath: str):
        path = self.root / relpath
        if not path.exists():
            raise MissingDependency(f"missing {kind} file {path}")
        try:
            return parse_stage_text(path.read_text(), kind)
        except (SchemaMismatch, CorruptFile) as exc:
            raise type(exc)(f"{path}: {exc}") from exc

    # -- clouds (header line + binary) --------------------------------------

    def cloud_path(self, scene_id: str, camera_index: int) -> Path:
        return self.root / "clouds" / f"{scene_id}_cam{camera_index}.cloud"

    def write_cloud(self, cloud: LabeledCloud) -> Path:
        points = np.ascontiguousarray(cloud.points, dtype="<f4")
        oids = np.ascontiguousarray(cloud.object_ids, dtype="<i4")
        tids = np.ascontiguousarray(cloud.triangle_ids, dtype="<i4")
        blob = points.tobytes() + oids.tobytes() + tids.tobytes()
        header = {
            "format_version": FORMAT_VERSION,
            "kind": "cloud",
            "scene_id": cloud.scene_id,
            "camera_index": cloud.camera_index,
            "frame": cloud.frame,
            "count": int(len(cloud)),
            "layout": [["points", "<f4", [len(cloud), 3]],
                       ["object_ids", "<i4", [len(cloud)]],
                       ["triangle_ids", "<i4", [len(cloud)]]],
            "checksum": hashlib.sha256(blob).hexdigest(),
        }
        data = json.dumps(header, sort_keys=True, separators=(",", ":")).encode() + b"\n" + blob
        path = self.cloud_path(cloud.scene_id, cloud.camera_index)
        with self.writer_lock():
            self._atomic_write(path, data)
        return path

    def read_cloud(self, scene_id: str, camera_index: int) -> LabeledCloud:
        path = self.cloud_path(scene_id, camera_index)
        if not path.exists():
            raise MissingDependency(f"missing cloud file {path}")
        raw = path.read_bytes()
        nl = raw.find(b"\n")
        if nl < 0:
            raise CorruptFile(f"{path}: missing header line")
        try:
            header = json.loads(raw[:nl])
        except json.JSONDecodeError as exc:
            raise CorruptFile(f"{path}: bad header: {exc}") from exc
        if header.get("format_version") != FORMAT_VERSION or header.get("kind") != "cloud":
            raise SchemaMismatch(f"{path}: wrong kind/format_version")
        blob = raw[nl + 1:]
        n = header.get("count")
        layout = header.get("layout")
        expected = [["points", "<f4", [n, 3]], ["object_ids", "<i4", [n]],
                    ["triangle_ids", "<i4", [n]]]
        if not isinstance(n, int) or n < 0 or layout != expected:
            raise SchemaMismatch(f"{path}: unexpected layout")
        if len(blob) != n * 3 * 4 + n * 4 + n * 4:
            raise SchemaMismatch(f"{path}: binary size does not match count")
        if hashlib.sha256(blob).hexdigest() != header.get("checksum"):
            raise CorruptFile(f"{path}: binary checksum mismatch")
        points = np.frombuffer(blob, dtype="<f4", count=n * 3).reshape(n, 3)
        oids = np.frombuffer(blob, dtype="<i4", count=n, offset=n * 12)
        tids = np.frombuffer(blob, dtype="<i4", count=n, offset=n * 16)
        try:
            return LabeledCloud(header["scene_id"], header["camera_index"], header["frame"],
                                points.copy(), oids.copy(), tids.copy())
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaMismatch(f"{path}: bad header fields: {exc}") from exc

    def list_clouds(self) -> list[tuple[str, int]]:
        out = []
        for path in sorted((self.root / "clouds").glob("*.cloud")):
            stem = path.stem
            scene_id, _, cam = stem.rpartition("_cam")
            out.append((scene_id, int(cam)))
        return out

    # -- unified stage interface --------------------------------------------

    def write_stage(self, kind: str, payload, name: str | None = None):
        """Store one artifact of the given stage kind; returns its path.

        catalog/scene/triplets/predictions/report payloads are JSON-safe
        dicts; cloud payloads are LabeledCloud values; verdicts payloads are
        single records appended to the log.
        """
        if kind == "cloud":
            return self.write_cloud(payload)
        if kind == "verdicts":
            self.append_verdict(payload)
            return self.verdict_log_path
        if kind == "catalog":
            return self.write_text_stage("object", f"catalog/{payload['object_id']}.json", payload)
        if kind == "scene":
            return self.write_text_stage("scene", f"scenes/{payload['scene_id']}.json", payload)
        if kind == "triplets":
            return self.write_text_stage("triplets", "triplets/triplets.json", payload)
        if kind == "predictions":
            return self.write_text_stage("predictions", f"predictions/{name or 'predictions'}.json", payload)
        if kind == "report":
            return self.write_text_stage("report", f"reports/{name or 'report'}.json", payload)
        raise SchemaMismatch(f"unknown stage kind {kind!r}")

    def read_stage(self, kind: str, name: str | None = None):
        if kind == "cloud":
            scene_id, _, cam = (name or "").rpartition("_cam")
            return self.read_cloud(scene_id, int(cam))
        if kind == "verdicts":
            return self.read_verdicts()
        if kind == "catalog":
            return self.read_text_stage("object", f"catalog/{name}.json")
        if kind == "scene":
            return self.read_text_stage("scene", f"scenes/{name}.json")
        if kind == "triplets":
            return self.read_text_stage("triplets", "triplets/triplets.json")
        if kind == "predictions":
            return self.read_text_stage("predictions", f"predictions/{name or 'predictions'}.json")
        if kind == "report":
            return self.read_text_stage("report", f"reports/{name or 'report'}.json")
        raise SchemaMismatch(f"unknown stage kind {kind!r}")

    # -- verdict log ---------------------------------------------------------

    @property
    def verdict_log_path(self) -> Path:
        return self.root / "verdicts" / "log.jsonl"

    def append_verdict(self, record: dict) -> dict:
        for key in ("object_id", "grasp_id", "task", "verdict", "reviewer", "timestamp"):
            if key not in record:
                raise SchemaMismatch(f"verdict record missing {key!r}")
        line = {
            "format_version": FORMAT_VERSION,
            "kind": "verdict",
            "checksum": _checksum(record),
            "record": record,
        }
        text = json.dumps(line, sort_keys=True, separators=(",", ":")) + "\n"
        with self.writer_lock():
            self.verdict_log_path.parent.mkdir(exist_ok=True)
            with open(self.verdict_log_path, "a") as fh:
                fh.write(text)
                fh.flush()
                os.fsync(fh.fileno())
        return record

    def read_verdicts(self) -> list[dict]:
        path = self.verdict_log_path
        if not path.exists():
            return []
        records = []
        for i, line in enumerate(path.read_text().splitlines()):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorruptFile(f"{path}:{i + 1}: bad JSON: {exc}") from exc
            if doc.get("format_version") != FORMAT_VERSION or doc.get("kind") != "verdict":
                raise SchemaMismatch(f"{path}:{i + 1}: wrong kind/format_version")
            if doc.get("checksum") != _checksum(doc.get("record")):
                raise CorruptFile(f"{path}:{i + 1}: checksum mismatch")
            records.append(doc["record"])
        return records

    def effective_verdicts(self) -> dict:
        """Replay the append-only log; the latest entry per label wins."""
        state = {}
        for rec in self.read_verdicts():
            state[(rec["object_id"], rec["grasp_id"], rec["task"])] = rec["verdict"]
        return state


# ---------------------------------------------------------------------------
# Payload converters (domain values <-> JSON-safe dicts)
# ---------------------------------------------------------------------------

def _floats(arr) -> list:
    return [float(x) for x in np.asarray(arr, dtype=float).reshape(-1)]


def pose_to_payload(pose: GraspPose) -> dict:
    return {
        "rotation": _floats(pose.rotation),
        "translation": _floats(pose.translation),
        "width": float(pose.width),
    }


def pose_from_payload(data: dict) -> GraspPose:
    try:
        return GraspPose(
            np.array(data["rotation"], dtype=float).reshape(3, 3),
            np.array(data["translation"], dtype=float),
            float(data["width"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaMismatch(f"bad pose payload: {exc}") from exc


def object_to_payload(obj: ObjectModel) -> dict:
    return {
        "object_id": obj.id,
        "category": obj.category,
        "scale": float(obj.scale),
        "vertices": [_floats(v) for v in obj.mesh.vertices],
        "faces": [[int(i) for i in f] for f in obj.mesh.faces],
        "affordances": {t: sorted(map(int, tris)) for t, tris in obj.affordances.items()},
        "grasps": [
            {
                "grasp_id": g.grasp_id,
                **pose_to_payload(g.pose),
                "tasks": sorted(g.tasks),
                "verdicts": {t: g.verdicts.get(t, VERDICT_UNREVIEWED) for t in sorted(g.tasks)},
            }
            for g in obj.grasps
        ],
    }


def object_from_payload(data: dict) -> ObjectModel:
    try:
        mesh = TriMesh(np.array(data["vertices"], dtype=float),
                       np.array(data["faces"], dtype=np.int32))
        grasps = tuple(
            AnnotatedGrasp(
                g["grasp_id"],
                pose_from_payload(g),
                frozenset(g["tasks"]),
                dict(g.get("verdicts", {})),
            )
            for g in data["grasps"]
        )
        return ObjectModel(
            id=data["object_id"],
            category=data["category"],
            mesh=mesh,
            scale=float(data.get("scale", 1.0)),
            affordances={t: frozenset(v) for t, v in data["affordances"].items()},
            grasps=grasps,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaMismatch(f"bad object payload: {exc}") from exc


def scene_to_payload(scene: Scene) -> dict:
    return {
        "scene_id": scene.scene_id,
        "table": None if scene.table is None else {
            "half_extents": [float(x) for x in scene.table.half_extents],
            "top_z": float(scene.table.top_z),
            "thickness": float(scene.table.thickness),
        },
        "placements": [
            {
                "object_id": p.object_id,
                "rotation": _floats(p.rotation),
                "translation": _floats(p.translation),
                "lifted": bool(p.lifted),
            }
            for p in scene.placements
        ],
        "lift_cubes": [
            {"center": _floats(c.center), "edge": float(c.edge)} for c in scene.lift_cubes
        ],
        "cameras": [
            {
                "rotation": _floats(c.rotation),
                "translation": _floats(c.translation),
                "fx": float(c.fx), "fy": float(c.fy),
                "cx": float(c.cx), "cy": float(c.cy),
                "width": int(c.width), "height": int(c.height),
            }
            for c in scene.cameras
        ],
    }


def scene_from_payload(data: dict) -> Scene:
    try:
        table = data["table"]
        table_spec = None if table is None else TableSpec(
            tuple(float(x) for x in table["half_extents"]),
            float(table["top_z"]),
            float(table["thickness"]),
        )
        placements = tuple(
            Placement(
                p["object_id"],
                np.array(p["rotation"], dtype=float).reshape(3, 3),
                np.array(p["translation"], dtype=float),
                bool(p["lifted"]),
            )
            for p in data["placements"]
        )
        cubes = tuple(
            LiftCube(np.array(c["center"], dtype=float), float(c["edge"]))
            for c in data["lift_cubes"]
        )
        cameras = tuple(
            CameraSpec(
                np.array(c["rotation"], dtype=float).reshape(3, 3),
                np.array(c["translation"], dtype=float),
                float(c["fx"]), float(c["fy"]), float(c["cx"]), float(c["cy"]),
                int(c["width"]), int(c["height"]),
            )
            for c in data["cameras"]
        )
        return Scene(data["scene_id"], table_spec, placements, cubes, cameras)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaMismatch(f"bad scene payload: {exc}") from exc


def propagated_to_payload(scene_id: str, grasp_map: dict) -> dict:
    return {
        "scene_id": scene_id,
        "grasps": {
            oid: [
                {
                    "grasp_id": g.grasp_id,
                    **pose_to_payload(g.pose),
                    "tasks": sorted(g.tasks),
                }
                for g in grasps
            ]
            for oid, grasps in sorted(grasp_map.items())
        },
    }


def propagated_from_payload(data: dict) -> dict:
    try:
        return {
            oid: [
                AnnotatedGrasp(g["grasp_id"], pose_from_payload(g), frozenset(g["tasks"]), {})
                for g in grasps
            ]
            for oid, grasps in data["grasps"].items()
        }
    except (KeyError, TypeError) as exc:
        raise SchemaMismatch(f"bad propagated-grasp payload: {exc}") from exc


def triplets_to_payload(triplets) -> dict:
    return {
        "averaging": "per_triplet",
        "triplets": [
            {
                "triplet_id": t.triplet_id,
                "scene_id": t.scene_id,
                "camera_index": int(t.camera_index),
                "category": t.category,
                "task": t.task,
                "gt_grasps": [pose_to_payload(g) for g in t.gt_grasps],
            }
            for t in triplets
        ],
    }


def triplets_from_payload(data: dict) -> list[Triplet]:
    try:
        return [
            Triplet(
                t["triplet_id"], t["scene_id"], int(t["camera_index"]),
                t["category"], t["task"],
                tuple(pose_from_payload(g) for g in t["gt_grasps"]),
            )
            for t in data["triplets"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaMismatch(f"bad triplets payload: {exc}") from exc


def predictions_to_payload(preds) -> dict:
    return {
        "entries": [
            {
                "triplet_id": p.triplet_id,
                "grasps": [
                    {**pose_to_payload(pose), "confidence": float(conf)}
                    for pose, conf in p.grasps
                ],
            }
            for p in preds
        ],
    }


def predictions_from_payload(data: dict) -> list[PredictionSet]:
    try:
        return [
            PredictionSet(
                e["triplet_id"],
                tuple((pose_from_payload(g), float(g.get("confidence", 1.0)))
                      for g in e["grasps"]),
            )
            for e in data["entries"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaMismatch(f"bad predictions payload: {exc}") from exc


def report_to_payload(report: EvalReport) -> dict:
    return {
        "averaging": report.averaging,
        "thresholds": {
            "th_d_m": float(report.th_d),
            "th_alpha_rad": float(report.th_alpha),
            "coverage_th_d_m": float(report.coverage_th_d),
        },
        "rows": [
            {"triplet_id": r.triplet_id, "coverage": float(r.coverage), "success": int(r.success)}
            for r in report.rows
        ],
        "coverage_rate": float(report.coverage_rate),
        "success_rate": float(report.success_rate),
    }


def report_from_payload(data: dict) -> EvalReport:
    try:
        rows = tuple(EvalRow(r["triplet_id"], float(r["coverage"]), int(r["success"]))
                     for r in data["rows"])
        th = data["thresholds"]
        return EvalReport(rows, float(data["coverage_rate"]), float(data["success_rate"]),
                          float(th["th_d_m"]), float(th["th_alpha_rad"]),
                          float(th["coverage_th_d_m"]), data.get("averaging", "per_triplet"))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaMismatch(f"bad report payload: {exc}") from exc
