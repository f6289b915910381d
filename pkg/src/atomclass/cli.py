"""Command-line entry point: ``python3 -m atomclass <command> ...``."""
import argparse
import sys
from dataclasses import fields, replace
from pathlib import Path

from . import cado, harness, io
from .baseline import LAPLACIANS, SpectralConfig
from .datagen import GenParams, generate
from .errors import StageError
from .objective import TermWeights
from .recovery import recovery_report

GEN_FLAGS = [f.name for f in fields(GenParams)]
SOLVER_FLAGS = ["r", "beta_g", "beta_f", "beta_l", "rho_minus", "rho_plus",
                "max_iters", "tol", "structural", "graph_scale", "dither", "restarts", "window"]


def _add_gen(p):
    g = p.add_argument_group("generator")
    for f in fields(GenParams):
        g.add_argument(f"--{f.name}", type=str, default=None, metavar=f.name.upper(),
                       help=f"default {f.default!r}")
    p.add_argument("--config", help="key=value file with gen./solver./spectral. prefixes")
    p.add_argument("--instance", help="load an instance directory instead of generating")


def _add_solver(p):
    g = p.add_argument_group("solver")
    for name in SOLVER_FLAGS:
        g.add_argument(f"--{name}", type=str, default=None)
    g.add_argument("--solver_seed", type=str, default=None,
                   help="initialization seed (defaults to --seed)")
    g.add_argument("--configuration", default="GFL",
                   choices=[c for c in harness.CONFIGURATIONS if c not in harness.SPECTRAL_CONFIGS])


def _add_spectral(p):
    g = p.add_argument_group("spectral baseline")
    g.add_argument("--laplacian_kind", choices=LAPLACIANS, default=None)
    g.add_argument("--kmeans_restarts", type=str, default=None)
    g.add_argument("--kmeans_iters", type=str, default=None)


def _mapping(args):
    mapping = dict(io.read_keyvalue(args.config)) if getattr(args, "config", None) else {}
    for name in GEN_FLAGS:
        val = getattr(args, name, None)
        if val is not None:
            mapping[f"gen.{name}"] = val
    for name in SOLVER_FLAGS:
        val = getattr(args, name, None)
        if val is not None:
            mapping[f"solver.{name}"] = val
    if getattr(args, "solver_seed", None) is not None:
        mapping["solver.seed"] = args.solver_seed
    elif "solver.seed" not in mapping and "gen.seed" in mapping:
        mapping["solver.seed"] = mapping["gen.seed"]
    for name in ("laplacian_kind", "kmeans_restarts", "kmeans_iters"):
        val = getattr(args, name, None)
        if val is not None:
            mapping[f"spectral.{name}"] = val
    return {k: v for k, v in mapping.items() if v is not None}


def _configs(args):
    try:
        gen, solver, spectral, rest = harness.build_configs(_mapping(args))
    except Exception as exc:
        raise StageError("config", exc) from exc
    if rest:
        raise StageError("config", ValueError(f"unknown keys: {sorted(rest)}"))
    return gen, solver, spectral


def _instance(args, gen):
    if getattr(args, "instance", None):
        try:
            return io.load_instance(args.instance)
        except Exception as exc:
            raise StageError("load", exc) from exc
    try:
        return generate(gen)
    except Exception as exc:
        raise StageError("generate", exc) from exc


def cmd_generate(args):
    gen, _, _ = _configs(args)
    instance = _instance(args, gen)
    try:
        io.save_instance(instance, args.out)
    except Exception as exc:
        raise StageError("write", exc) from exc
    print(f"n={instance.n}")
    print(f"edges={int(instance.adjacency.sum()) // 2}")
    print(f"train={int(instance.train_mask.sum())}")
    print(f"out={args.out}")


def cmd_solve(args):
    gen, solver, _ = _configs(args)
    instance = _instance(args, gen)
    try:
        config = harness.ablation(solver, args.configuration)
    except Exception as exc:
        raise StageError("config", exc) from exc
    try:
        state = cado.iterate(instance, config)
    except Exception as exc:
        raise StageError("solve", exc) from exc
    try:
        pred = cado.decode_prediction(instance, state, config)
    except Exception as exc:
        raise StageError("decode", exc) from exc
    acc = cado.test_accuracy(instance, pred)
    try:
        if args.trace:
            io.write_trace(args.trace, state.objective_trace)
        if args.prediction:
            io.write_prediction(args.prediction, instance, pred)
    except Exception as exc:
        raise StageError("write", exc) from exc
    print(f"configuration={args.configuration}")
    print(f"test_accuracy={acc!r}")
    print(f"iterations={state.t}")
    print(f"final_objective={state.final_objective!r}")


def cmd_baseline(args):
    gen, _, spectral = _configs(args)
    instance = _instance(args, gen)
    spectral = replace(spectral, K=instance.K, seed=gen.seed)
    acc, pred = harness.spectral_accuracy(instance, spectral)
    if args.assignment:
        try:
            io.write_assignment(args.assignment, pred.atom_assignment)
        except Exception as exc:
            raise StageError("write", exc) from exc
    print("configuration=G-spectral")
    print(f"test_accuracy={acc!r}")


def cmd_check(args):
    gen, solver, _ = _configs(args)
    instance = _instance(args, gen)
    centroids = None
    if args.gamma is not None:
        try:
            state = cado.iterate(instance, harness.ablation(solver, "GFL"))
        except Exception as exc:
            raise StageError("solve", exc) from exc
        centroids = state.models
    try:
        report = recovery_report(instance, args.gamma, centroids)
    except Exception as exc:
        raise StageError("check", exc) from exc
    text = report.to_keyvalue()
    try:
        if args.out:
            Path(args.out).write_text(text)
        if args.csv:
            Path(args.csv).write_text(report.to_csv())
    except Exception as exc:
        raise StageError("write", exc) from exc
    sys.stdout.write(text)


def cmd_sweep(args):
    try:
        spec = harness.load_sweep_spec(args.config)
        if args.output:
            spec = replace(spec, output_path=args.output)
        if args.workers:
            spec = replace(spec, workers=args.workers)
    except Exception as exc:
        raise StageError("config", exc) from exc
    result = harness.run_sweep(spec)
    print("axis_value,configuration,median,iqr")
    for s in harness.summarize(result):
        print(f"{s.axis_value!r},{s.configuration},{s.median!r},{s.iqr!r}")
    if spec.output_path:
        print(f"wrote {len(result.rows)} rows to {spec.output_path}", file=sys.stderr)


def build_parser():
    parser = argparse.ArgumentParser(prog="atomclass", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a planted-partition instance to a directory")
    _add_gen(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="run the solver and report test accuracy")
    _add_gen(p)
    _add_solver(p)
    p.add_argument("--trace", help="objective trace CSV")
    p.add_argument("--prediction", help="per-node prediction CSV")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("baseline", help="run the spectral-clustering baseline")
    _add_gen(p)
    _add_spectral(p)
    p.add_argument("--assignment", help="cluster assignment CSV")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("check", help="print recovery diagnostics")
    _add_gen(p)
    _add_solver(p)
    p.add_argument("--gamma", type=float, default=None,
                   help="also evaluate the node-only margin at solver centroids")
    p.add_argument("--out", help="key=value report file")
    p.add_argument("--csv", help="per-cluster CSV")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sweep", help="run a sweep described by a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--output", help="override sweep.output")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: [{args.command}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0
