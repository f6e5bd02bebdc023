"""Command line interface: serve, rollout, phantom, validate, inspect."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import MedgymError
from .geometry import ProbePose, SampleGrid, render_slice
from .protocol import ENV_NAMES, make_env, serve_stdio, serve_tcp
from .resus import load_scenario
from .rollout import RandomAgent, ScriptedAgent, ZeroAgent, load_actions, replay_log, run_rollout
from .volume import ORGANS, PhantomSpec, generate_phantom, load_volume, organ_volume, save_volume, write_manifest


def _resource(args):
    if args.env == "imagym":
        if not args.volume:
            raise MedgymError("imagym needs --volume")
        return args.volume
    if not args.scenario:
        raise MedgymError("resus needs --scenario")
    return args.scenario


def _overrides(args) -> dict:
    out = {}
    if getattr(args, "mode", None):
        out["movement_mode"] = args.mode
    if getattr(args, "max_steps", None):
        out["max_steps"] = args.max_steps
    return out


def cmd_serve(args) -> int:
    resource = _resource(args)
    if args.port:
        serve_tcp(args.env, resource, args.port, _overrides(args))
    else:
        serve_stdio(args.env, resource, _overrides(args))
    return 0


def cmd_rollout(args) -> int:
    env = make_env(args.env, _resource(args), _overrides(args))
    if args.agent == "random":
        agent = RandomAgent(args.seed)
    elif args.agent == "zero":
        agent = ZeroAgent()
    else:
        if not args.actions:
            raise MedgymError("scripted agent needs --actions FILE")
        agent = ScriptedAgent(load_actions(args.actions))
    summary = run_rollout(env, agent, args.episodes, args.out, seed=args.seed,
                          timestamps=args.timestamps)
    success = "n/a" if summary.success_rate is None else f"{summary.success_rate:.3f}"
    print(
        f"episodes={summary.episodes} steps={summary.steps} "
        f"mean_return={summary.mean_return:.6f} success_rate={success} "
        f"steps_per_sec={summary.steps_per_sec:.1f}"
    )
    return 0


def cmd_replay(args) -> int:
    env = make_env(args.env, _resource(args), _overrides(args))
    verified = replay_log(env, args.log, seed=args.seed)
    print(f"replay ok: {verified} steps verified")
    return 0


def cmd_phantom(args) -> int:
    raw = json.loads(Path(args.spec).read_text())
    spec = PhantomSpec.from_dict(raw)
    volume = generate_phantom(spec)
    save_volume(volume, args.out)
    write_manifest(volume, args.out, provenance=f"generated from {args.spec}")
    print(f"wrote {args.out}: dims={volume.dims} surface_points={len(volume.surface)}")
    return 0


def cmd_validate(args) -> int:
    status = 0
    for path in args.files:
        try:
            if Path(path).read_bytes()[:4] == b"PHV1":
                load_volume(path)
            else:
                load_scenario(path)
            print(f"{path}: ok")
        except MedgymError as exc:
            print(f"{path}: {exc}")
            status = 1
    return status


def cmd_inspect(args) -> int:
    volume = load_volume(args.volume)
    extent = tuple(float(x) for x in volume.extent)
    print(f"dims: {volume.dims}  spacing: {tuple(volume.spacing)}  extent(mm): {extent}")
    print(f"intensity: min={volume.intensity.min():.4f} max={volume.intensity.max():.4f}")
    for organ in ORGANS:
        print(f"{organ}: voxels={int(volume.masks[organ].sum())} volume={organ_volume(volume, organ):.1f} mm^3")
    print(f"surface points: {len(volume.surface)}")

    if args.out:
        loc = tuple(float(x) for x in args.loc.split(",")) if args.loc else tuple(volume.extent / 2.0)
        angles = tuple(float(x) for x in args.angles.split(",")) if args.angles else (0.0, 0.0, 0.0)
        rows, cols = (int(x) for x in args.grid.split("x"))
        obs = render_slice(volume, ProbePose(loc, angles), SampleGrid(rows, cols))
        gray = np.clip(obs.pixels * 255.0, 0, 255).astype(np.uint8)
        with open(args.out, "wb") as fh:
            fh.write(f"P5\n{cols} {rows}\n255\n".encode())
            fh.write(gray.tobytes())
        areas = " ".join(f"{k}={v:.1f}" for k, v in obs.organ_area.items())
        print(f"wrote {args.out}; visible areas (mm^2): {areas}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="medgym", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_env_args(p):
        p.add_argument("--env", choices=ENV_NAMES, required=True)
        p.add_argument("--volume", help="PHV1 volume path (imagym)")
        p.add_argument("--scenario", help="scenario file or bundled name (resus)")
        p.add_argument("--mode", choices=("free", "realistic"), help="imagym movement mode")
        p.add_argument("--max-steps", type=int, dest="max_steps")

    p = sub.add_parser("serve", help="speak wire protocol v1 on stdio or tcp")
    add_env_args(p)
    p.add_argument("--port", type=int, help="serve on tcp 127.0.0.1:PORT instead of stdio")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("rollout", help="run episodes and write a JSONL trajectory log")
    add_env_args(p)
    p.add_argument("--agent", choices=("random", "zero", "scripted"), default="random")
    p.add_argument("--actions", help="action file for the scripted agent (JSON array or JSONL log)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--episodes", type=int, default=1)
    p.add_argument("--out", help="JSONL log destination")
    p.add_argument("--timestamps", action="store_true", help="record wall times (breaks byte-reproducibility)")
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("replay", help="verify a trajectory log against the environment")
    add_env_args(p)
    p.add_argument("--log", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("phantom", help="generate a PHV1 volume from a JSON spec")
    p.add_argument("spec", help="phantom spec JSON file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("validate", help="check PHV1 and scenario files")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("inspect", help="print volume stats and render a slice to PGM")
    p.add_argument("--volume", required=True)
    p.add_argument("--out", help="PGM image destination")
    p.add_argument("--loc", help="slice center as x,y,z mm (default: volume center)")
    p.add_argument("--angles", help="roll,pitch,yaw in radians (default 0,0,0)")
    p.add_argument("--grid", default="128x128", help="ROWSxCOLS sampling grid")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MedgymError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
