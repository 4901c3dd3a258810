"""Command line front end: solve, serve, validate, hand.

Exit codes for solve: 0 when every goal is reached, 2 when the solver
settles short of the targets (best reach or step budget), 1 on any
error. validate exits 0 on a clean rig and 1 otherwise.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import numpy as np

from .rig import build_hand_model, load_rig, rig_validate, save_rig
from .service import DEFAULT_RATE, serve_scene
from .session import export_trace, load_scene, run_to_convergence
from .solver import STATUS_REACHED


def _load_config_overrides(path) -> dict:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config file must be a JSON object")
    return data


def _cmd_solve(args) -> int:
    overrides = _load_config_overrides(args.config) if args.config else {}
    if args.fd_jacobian:
        overrides["jacobian_mode"] = "fd"
    scene = load_scene(args.rig, args.goals, overrides)
    status = run_to_convergence(scene)
    if args.trace:
        export_trace(scene, args.trace)
    final_error = scene.trace[-1].errors if scene.trace else ()
    print(f"status: {status}")
    print(f"steps: {len(scene.trace)}")
    print(f"pose: {np.array2string(scene.pose, precision=6, suppress_small=True)}")
    if final_error:
        worst = max(final_error)
        print(f"worst effector error: {worst:.3e}")
    return 0 if status == STATUS_REACHED else 2


def _cmd_serve(args) -> int:
    scene = load_scene(args.rig, args.goals)
    transport = "tcp" if args.tcp else "websocket"

    def announce(service) -> None:
        print(f"serving {transport} on {service.host}:{service.port} "
              f"at {service.rate:g} Hz", flush=True)

    try:
        asyncio.run(serve_scene(scene, host=args.host, port=args.port,
                                rate=args.rate, transport=transport,
                                save_path=args.save, ready=announce))
    except KeyboardInterrupt:
        pass
    return 0


def _cmd_validate(args) -> int:
    rig = load_rig(args.rig)
    violations = rig_validate(rig)
    if violations:
        for line in violations:
            print(f"invalid: {line}")
        return 1
    print(f"ok: {rig.dof} joints, {len(rig.end_effectors)} end effectors")
    return 0


def _cmd_hand(args) -> int:
    save_rig(args.out, build_hand_model())
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ik", description="Pose articulated rigs toward end effector goals.")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="iterate a goal set to convergence")
    solve.add_argument("--rig", required=True, help="rig JSON file")
    solve.add_argument("--goals", required=True, help="goal JSON file")
    solve.add_argument("--config", help="solver config overrides, JSON object")
    solve.add_argument("--trace", help="write the per-step trace CSV here")
    solve.add_argument("--fd-jacobian", action="store_true",
                       help="use the finite difference jacobian")
    solve.set_defaults(run=_cmd_solve)

    serve = sub.add_parser("serve", help="stream solves over a socket")
    serve.add_argument("--rig", required=True, help="rig JSON file")
    serve.add_argument("--goals", help="optional initial goal JSON file")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8765)
    serve.add_argument("--rate", type=float, default=DEFAULT_RATE,
                       help="steps per second")
    serve.add_argument("--tcp", action="store_true",
                       help="newline-delimited JSON over raw TCP instead "
                            "of WebSocket")
    serve.add_argument("--save", help="persist the final scene JSON here on stop")
    serve.set_defaults(run=_cmd_serve)

    validate = sub.add_parser("validate", help="check a rig file")
    validate.add_argument("--rig", required=True, help="rig JSON file")
    validate.set_defaults(run=_cmd_validate)

    hand = sub.add_parser("hand", help="write the bundled 22 DOF hand rig")
    hand.add_argument("--out", required=True, help="output rig JSON file")
    hand.set_defaults(run=_cmd_hand)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
