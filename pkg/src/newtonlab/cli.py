"""Command-line entry point.

Subcommands:

* run: execute one configured scene run and write its CSV/JSON log.
* sweep: repeat a base run across one axis (solver, resolution,
  tolerance, projection, boundary-mode) and write a combined summary.
* list-scenes: print the scene catalog.

Exit codes: 0 on success, 2 when a solver fails (the log is still
written), 3 on configuration errors.
"""

import argparse
import json
import sys
from dataclasses import fields, replace

from . import bench

EXIT_OK = 0
EXIT_SOLVER_FAILURE = 2
EXIT_CONFIG_ERROR = 3

_SOLVERS = ("newton", "pn", "pod", "kn")
_LINE_SEARCHES = ("armijo", "robust")
_CRITERIA = ("resnorm", "scaled", "step", "accel")
_PROJECTIONS = ("element", "quadrature")
_BC_MODES = ("direct", "penalty")


def _add_run_flags(parser):
    parser.add_argument("--config", help="JSON file with RunConfig fields; "
                                         "flags override file values")
    parser.add_argument("--scene")
    parser.add_argument("--solver", choices=_SOLVERS)
    parser.add_argument("--line-search", choices=_LINE_SEARCHES)
    parser.add_argument("--criterion", choices=_CRITERIA)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--projection", choices=_PROJECTIONS)
    parser.add_argument("--bc", choices=_BC_MODES)
    parser.add_argument("--max-iters", type=int)
    parser.add_argument("--out")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="newtonlab",
        description="Newton-type solver laboratory for implicit elasticity")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configuration")
    _add_run_flags(p_run)

    p_sweep = sub.add_parser("sweep", help="run a one-axis parameter sweep")
    _add_run_flags(p_sweep)
    p_sweep.add_argument("--axis", required=True, choices=bench.SWEEP_AXES)
    p_sweep.add_argument("--values", required=True, nargs="+")

    sub.add_parser("list-scenes", help="print the scene catalog")
    return parser


def config_from_args(args):
    values = {}
    if args.config:
        with open(args.config) as f:
            file_values = json.load(f)
        known = {f.name for f in fields(bench.RunConfig)}
        unknown = set(file_values) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(file_values)
    overrides = {
        "scene": args.scene,
        "solver": args.solver,
        "line_search": args.line_search,
        "criterion": args.criterion,
        "tolerance": args.tol,
        "projection": args.projection,
        "bc_mode": args.bc,
        "max_iterations": args.max_iters,
        "out_dir": args.out,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "scene" not in values:
        raise ValueError("a scene is required (--scene or config file)")
    if "subdivisions" in values and values["subdivisions"] is not None:
        values["subdivisions"] = tuple(values["subdivisions"])
    config = bench.RunConfig(**values)
    bench.find_scene(config.scene)  # validate early
    return config


def main(argv=None):
    args = build_parser().parse_args(argv)

    if args.command == "list-scenes":
        for scene in bench.scene_catalog():
            subs = "x".join(str(s) for s in scene.subdivisions)
            print(f"{scene.name}: {scene.element_kind} {subs}, "
                  f"dt={scene.dt:g}s, T={scene.duration:g}s, "
                  f"E={scene.youngs_modulus:g}Pa, nu={scene.poisson_ratio}, "
                  f"bc={scene.boundary_kind}/{scene.default_bc_mode}")
        return EXIT_OK

    try:
        config = config_from_args(args)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    if args.command == "run":
        log = bench.run(config)
        summary = log.summary
        print(f"{config.run_name()}: steps {summary['steps_completed']}"
              f"/{summary['steps_planned']}, "
              f"iterations {summary['total_iterations']} "
              f"(mean {summary['mean_iterations_per_step']:.2f}/step)")
        if not summary["completed"]:
            print(f"solver failure: {summary['failure_reason']}",
                  file=sys.stderr)
            return EXIT_SOLVER_FAILURE
        return EXIT_OK

    # sweep
    logs = bench.sweep(config, args.axis, args.values)
    failed = False
    for value, log in logs:
        if isinstance(log, bench.RunLog):
            ok = log.summary["completed"]
            failed |= not ok
            print(f"{args.axis}={value}: "
                  f"iterations {log.summary['total_iterations']}, "
                  f"{'ok' if ok else log.summary['failure_reason']}")
        else:
            failed = True
            print(f"{args.axis}={value}: error: {log}")
    return EXIT_SOLVER_FAILURE if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
