#!/usr/bin/env python3
"""Regenerate test/fixtures/five_point_golden.json from the Python kernel.

The frontend recomputes the 5-point skeleton on its own; this fixture pins
both implementations to the same numbers.
"""

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "src"))

from graspforge.geometry import GraspPose, GripperSpec, five_point_projection
from graspforge.stand_ins import build_desk_catalog


def random_rotation(rng):
    q = rng.normal(size=4)
    w, x, y, z = q / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def main() -> None:
    spec = GripperSpec()
    rng = np.random.default_rng(20240)
    cases = []

    for obj in build_desk_catalog(spec):
        for grasp in obj.grasps:
            cases.append((f"{obj.id}/{grasp.grasp_id}", grasp.pose))
    for k in range(20):
        pose = GraspPose(random_rotation(rng), rng.uniform(-0.4, 0.4, 3),
                         float(rng.uniform(0.0, spec.max_width)))
        cases.append((f"random_{k}", pose))

    payload = {
        "gripper": {
            "max_width": spec.max_width,
            "finger_length": spec.finger_length,
            "base_depth": spec.base_depth,
            "finger_thickness": spec.finger_thickness,
        },
        "cases": [
            {
                "name": name,
                "rotation": [float(v) for v in pose.rotation.reshape(9)],
                "translation": [float(v) for v in pose.translation],
                "width": float(pose.width),
                "five_points": [[float(v) for v in p]
                                for p in five_point_projection(pose, spec)],
            }
            for name, pose in cases
        ],
    }
    out = Path(__file__).resolve().parents[1] / "test" / "fixtures" / "five_point_golden.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(payload, indent=1))
    print(f"wrote {out} with {len(cases)} cases")


if __name__ == "__main__":
    main()
