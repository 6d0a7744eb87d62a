"""graspforge: cluttered-tabletop grasp dataset forge and benchmark harness."""

from .benchmark import (EvalReport, PredictionSet, Triplet, coverage, evaluate,
                        generate_triplets, point_selection_loss, random_task_baseline,
                        success, total_losses, two_stage_precision)
from .catalog import (CATEGORIES, CATEGORY_TASKS, TASKS, AnnotatedGrasp, ObjectModel,
                      apply_verdict, assign_task_labels, grasp_point, load_object)
from .errors import GraspForgeError
from .geometry import (GraspDistance, GraspPose, GripperSpec, five_point_projection,
                       gram_schmidt_orthonormalize, grasp_distance,
                       grasp_pose_point_distance, grasp_set_loss,
                       rotation_from_approach_baseline)
from .meshio import TriMesh, load_mesh
from .rendering import LabeledCloud, PointLabels, compute_point_labels, render_cloud
from .scenes import (CameraSpec, LiftCube, Placement, Scene, TableSpec,
                     check_mesh_collision, generate_scene, gripper_collides, mix_seed,
                     place_objects, propagate_grasps, sample_cameras, sample_object_set)
from .stand_ins import build_desk_catalog
from .workspace import Workspace

__version__ = "0.1.0"
