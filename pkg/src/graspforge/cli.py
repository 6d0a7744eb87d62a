"""Command-line driver for the dataset pipeline and review service.

Exit codes: 0 success, 1 domain error (single-line diagnostic on stderr),
2 usage error. The workspace root comes from --workspace, falling back to
the GRASPFORGE_WORKSPACE environment variable, then ./workspace.
"""

import argparse
import os
import sys

from .errors import GraspForgeError
from .workspace import ENV_ROOT, Workspace


def _workspace(args) -> Workspace:
    root = args.workspace or os.environ.get(ENV_ROOT) or "workspace"
    return Workspace(root)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graspforge",
                                     description="Cluttered-scene grasp dataset forge and benchmark")
    parser.add_argument("--workspace", help="workspace root (default: $GRASPFORGE_WORKSPACE or ./workspace)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a workspace")
    p.add_argument("--seed", type=int, default=0, help="master seed for all randomness")
    p.add_argument("--sigma", type=float, default=0.12, help="placement Gaussian sigma (m)")

    sub.add_parser("ingest", help="build the object catalog (bundled desk assets by default)") \
        .add_argument("--assets", help="asset directory with objects.json")

    p = sub.add_parser("gen-scenes", help="generate cluttered scenes")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=None, help="override the manifest master seed")
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("render", help="render labeled point clouds")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--noise-sigma", type=float, default=0.0, help="optional depth noise stddev (m)")

    p = sub.add_parser("propagate", help="propagate object grasps into scenes")
    p.add_argument("--threads", type=int, default=1)

    sub.add_parser("triplets", help="enumerate evaluation triplets")

    p = sub.add_parser("eval", help="score a prediction file")
    p.add_argument("--pred", required=True, help="prediction file (kind=predictions)")
    p.add_argument("--th-d-cm", type=float, default=3.0)
    p.add_argument("--th-alpha-deg", type=float, default=30.0)
    p.add_argument("--name", default=None, help="report name")

    p = sub.add_parser("baseline", help="run a reference baseline")
    p.add_argument("kind", choices=["random"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--draws", type=int, default=1, help="draws per labeled grasp")

    p = sub.add_parser("serve", help="run the review HTTP service")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui-dir", default=None, help="built review UI bundle to host at /")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except GraspForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    from . import pipeline

    ws = _workspace(args)
    if args.command == "init":
        Workspace.initialize(ws.root, master_seed=args.seed, config={"sigma": args.sigma})
        print(f"initialized workspace at {ws.root}")
    elif args.command == "ingest":
        n = pipeline.run_ingest(ws, getattr(args, "assets", None))
        print(f"ingested {n} objects")
    elif args.command == "gen-scenes":
        ids = pipeline.run_gen_scenes(ws, args.count, args.seed, args.sigma, args.threads)
        print(f"generated {len(ids)} scenes")
    elif args.command == "render":
        n = pipeline.run_render(ws, args.threads, args.noise_sigma)
        print(f"rendered {n} clouds")
    elif args.command == "propagate":
        n = pipeline.run_propagate(ws, args.threads)
        print(f"propagated {n} scene grasps")
    elif args.command == "triplets":
        n = pipeline.run_triplets(ws)
        print(f"built {n} triplets")
    elif args.command == "eval":
        report = pipeline.run_eval(ws, args.pred, args.th_d_cm, args.th_alpha_deg, args.name)
        print(f"coverage_rate={report.coverage_rate:.2f} success_rate={report.success_rate:.2f} "
              f"over {len(report.rows)} triplets")
    elif args.command == "baseline":
        precision = pipeline.run_baseline_random(ws, args.seed, args.draws)
        print(f"random baseline precision={100.0 * precision:.2f}")
    elif args.command == "serve":
        from .service import serve
        serve(ws, host=args.host, port=args.port, ui_dir=args.ui_dir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
