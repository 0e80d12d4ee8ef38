"""
Command-line interface.

Every subcommand reads and writes the documented JSON and CSV formats, so a
pipeline such as ``gen`` -> ``solve saa`` -> ``evaluate`` can be scripted
and re-run byte for byte with the same ``--seed``. Errors are reported as a
JSON object on stderr and mapped to exit codes by ``exit_code_for``.
"""

import argparse
import json
import logging
import sys
from collections.abc import Callable, Sequence
from dataclasses import asdict
from pathlib import Path
from typing import Any, NoReturn

from cascada._internal.config_resolver import ConfigResolver, ResolvedConfig
from cascada._internal.seeding import Stream
from cascada.cascade import estimate_objective, sample_cascades
from cascada.core import Instance, Strategy
from cascada.exceptions import (
    CascadaError,
    DocumentValidationError,
    NoIncumbentError,
    StrategyError,
    UsageError,
    exit_code_for,
)
from cascada.generators import corridor_metapop, distant_reservoir, figure2, spatial_metapop
from cascada.greedy import greedy_select
from cascada.metapop import MetapopSpec
from cascada.mip import build_mip, export_standard
from cascada.models import EvalMode, GreedyConfig, GreedyVariant, KernelParams, SaaConfig
from cascada.preprocess import reduce, reduce_pool, summarize_stats
from cascada.saa import METHODS, budget_sweep, gap_vs_training_size, run_saa
from cascada.serializers import dump_instance, dump_pool, get_serializer, read_bytes, tag_table
from cascada.serializers.json import cascade_from_document, strategy_to_document
from cascada.types import CascadePoolDocument, EvaluationDocument

logger = logging.getLogger("cascada")

_json = get_serializer("json")
_csv = get_serializer("csv")

DEFAULT_SEED = 0


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports bad usage as ``UsageError``."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(message)


def _float_list(arg: str) -> list[float]:
    try:
        values = [float(part) for part in arg.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"{arg!r} is not a comma-separated list of numbers") from e
    if not values:
        raise argparse.ArgumentTypeError("expected at least one value")
    return values


def _int_list(arg: str) -> list[int]:
    try:
        values = [int(part) for part in arg.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"{arg!r} is not a comma-separated list of integers") from e
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("expected positive integers")
    return values


def _name_list(arg: str) -> list[str]:
    return [part.strip() for part in arg.split(",") if part.strip()]


# I/O helpers


def _write(data: bytes, path: str | None) -> None:
    if not data.endswith(b"\n"):
        data += b"\n"
    if path is None or path == "-":
        sys.stdout.write(data.decode("utf-8"))
        sys.stdout.flush()
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(data)
    logger.info("Wrote %s", target)


def _load_instance(path: str) -> Instance:
    instance = _json.load(path, Instance)
    instance.check()
    return instance


def _load_strategy(path: str, instance: Instance) -> Strategy:
    strategy = _json.load(path, Strategy)
    if strategy.n_actions != instance.n_actions:
        raise StrategyError(
            f"Strategy has {strategy.n_actions} actions, instance has {instance.n_actions}"
        )
    # cost is recomputed from the instance
    return Strategy.for_instance(instance, strategy.actions)


def _resolve(
    args: argparse.Namespace,
    keys: Sequence[str],
    defaults: dict[str, Any],
    instance: Instance | None = None,
) -> ResolvedConfig:
    flags = {key: getattr(args, key, None) for key in keys}
    file_config = {k: v for k, v in ConfigResolver.load_file(args.config).items() if k in keys}
    instance_config = {"budget": instance.budget} if instance is not None else {}
    return ConfigResolver.resolve(flags, file_config, instance_config, defaults)


def _seed(args: argparse.Namespace) -> int:
    return int(_resolve(args, ["seed"], {"seed": DEFAULT_SEED}).get("seed"))


def _saa_config(args: argparse.Namespace, instance: Instance, **fixed: Any) -> SaaConfig:
    defaults = asdict(SaaConfig())
    defaults["seed"] = DEFAULT_SEED
    keys = [k for k in defaults if k not in fixed]
    resolved = _resolve(args, keys, defaults, instance)
    resolved.values.update(fixed)
    return resolved.build(SaaConfig)


# Subcommands


def _cmd_gen(args: argparse.Namespace) -> int:
    seed = _seed(args)
    kernel = KernelParams(r0=args.r0, alpha=args.alpha, gamma=args.gamma)
    built: Instance | MetapopSpec
    if args.kind == "figure2":
        built = figure2(args.c, budget=args.budget if args.budget is not None else 2.0)
    elif args.kind in ("spatial", "reservoir"):
        built = spatial_metapop(
            n_patches=args.patches,
            n_parcels=args.parcels,
            area=args.area,
            occupancy_rate=args.occupancy,
            kernel=kernel,
            beta=args.beta,
            horizon=args.horizon if args.horizon is not None else 10,
            seed=seed,
            conserved_fraction=args.conserved_fraction,
            budget=args.budget,
        )
        if args.kind == "reservoir":
            built = distant_reservoir(built, seed=seed)
    else:
        built = corridor_metapop(
            corridor_length=args.length,
            decoys=args.decoys,
            reservoir_size=args.reservoir_size,
            spacing=args.spacing,
            kernel=kernel,
            beta=args.beta,
            horizon=args.horizon if args.horizon is not None else 20,
            budget=args.budget,
        )
    _write(dump_instance(built, seed), args.output)
    return 0


def _cmd_sample(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    seed = _seed(args)
    jobs = int(_resolve(args, ["jobs"], {"jobs": 1}).get("jobs"))
    # replication 0 of the training stream
    cascades = sample_cascades(instance, args.n, (seed, Stream.TRAIN, 0), jobs=jobs)
    _write(dump_pool(cascades, seed), args.output)
    return 0


def _cmd_preprocess(args: argparse.Namespace) -> int:
    try:
        document = CascadePoolDocument.model_validate_json(read_bytes(args.cascades))
    except ValueError as e:
        raise DocumentValidationError(f"{args.cascades} is not a cascade pool: {e}") from e
    cascades = [cascade_from_document(c) for c in document.cascades]
    jobs = int(_resolve(args, ["jobs"], {"jobs": 1}).get("jobs"))
    reduced = reduce_pool(cascades, jobs=jobs)
    stats = [r.stats for r in reduced if r.stats is not None]
    summary = summarize_stats(stats)
    logger.info(
        "Reduced %d cascades: node ratio %.3f, edge ratio %.3f",
        summary.cascades,
        summary.node_ratio,
        summary.edge_ratio,
    )
    payload = {
        "summary": summary.model_dump(mode="json"),
        "per_cascade": [s.model_dump(mode="json") for s in stats],
    }
    seed = document.seed if document.seed is not None else _seed(args)
    _write(dump_pool(reduced, seed, stats=payload), args.output)
    return 0


def _export_first_replication(instance: Instance, cfg: SaaConfig, path: str) -> None:
    cascades = sample_cascades(instance, cfg.n, (cfg.seed, Stream.TRAIN, 0), jobs=cfg.jobs)
    if cfg.preprocess:
        cascades = [reduce(c) for c in cascades]
    budget = cfg.budget if cfg.budget is not None else instance.budget
    export_standard(build_mip(cascades, instance.costs, budget), path)


def _cmd_solve_saa(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    cfg = _saa_config(args, instance)
    if args.export_mps:
        _export_first_replication(instance, cfg, args.export_mps)
    report = run_saa(instance, cfg)
    _write(_json.serialize(report), args.output)
    missing = [i for i, c in enumerate(report.candidates) if c is None]
    if missing:
        _report_error(
            NoIncumbentError(f"Replications {missing} hit the node limit without an incumbent")
        )
        return 3
    return 0


def _cmd_solve_greedy(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    defaults = asdict(GreedyConfig())
    defaults["seed"] = DEFAULT_SEED
    cfg = _resolve(args, list(defaults), defaults, instance).build(GreedyConfig)
    strategy, trace = greedy_select(instance, cfg)
    _write(_json.serialize(strategy_to_document(strategy, cfg.seed)), args.output)
    if args.trace:
        frame = tag_table(trace.frame(timings=args.timings), "greedy_trace", cfg.seed)
        _write(_csv.serialize(frame), args.trace)
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    strategy = _load_strategy(args.strategy, instance)
    resolved = _resolve(
        args, ["seed", "n_test", "jobs"], {"seed": DEFAULT_SEED, "n_test": 500, "jobs": 1}
    )
    seed, n_test, jobs = (int(resolved.values[k]) for k in ("seed", "n_test", "jobs"))
    mean, stderr = estimate_objective(instance, strategy, n_test, (seed, Stream.TEST), jobs=jobs)
    document = EvaluationDocument(
        seed=seed, actions=sorted(strategy.actions), n=n_test, mean=mean, stderr=stderr
    )
    _write(_json.serialize(document), args.output)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    cfg = _saa_config(args, instance, budget=None)
    frame = budget_sweep(instance, args.budgets, cfg, methods=args.methods, greedy_n=args.greedy_n)
    _write(_csv.serialize(tag_table(frame, "sweep", cfg.seed)), args.output)
    return 0


def _cmd_gapcurve(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance)
    cfg = _saa_config(args, instance)
    frame = gap_vs_training_size(instance, args.sizes, cfg)
    _write(_csv.serialize(tag_table(frame, "gapcurve", cfg.seed)), args.output)
    return 0


# Parser


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="Global seed (default 0)")
    common.add_argument("--jobs", type=int, default=None, help="Worker processes (default 1)")
    common.add_argument("--config", default=None, help="JSON file with default option values")
    common.add_argument("--verbose", "-v", action="store_true", help="Log at DEBUG level")
    common.add_argument("--output", "-o", default=None, help="Output file (default stdout)")
    return common


def _saa_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--m", type=int, default=None, help="Replications (default 10)")
    parser.add_argument("--n-valid", dest="n_valid", type=int, default=None)
    parser.add_argument("--n-test", dest="n_test", type=int, default=None)
    parser.add_argument("--node-limit", dest="node_limit", type=int, default=None)
    parser.add_argument(
        "--no-preprocess",
        dest="preprocess",
        action="store_const",
        const=False,
        default=None,
        help="Solve on raw cascades",
    )


def build_parser() -> argparse.ArgumentParser:
    """Build the ``cascada`` argument parser."""
    common = _common()
    parser = _Parser(prog="cascada", description="Stochastic network design by SAA and greedy")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", parents=[common], help="Generate an instance")
    gen.add_argument("kind", choices=["figure2", "spatial", "reservoir", "corridor"])
    gen.add_argument("--c", type=int, default=10, help="figure2 payoff size")
    gen.add_argument("--budget", type=float, default=None)
    gen.add_argument("--patches", type=int, default=100)
    gen.add_argument("--parcels", type=int, default=20)
    gen.add_argument("--area", type=float, default=20000.0)
    gen.add_argument("--occupancy", type=float, default=0.5)
    gen.add_argument("--conserved-fraction", dest="conserved_fraction", type=float, default=0.2)
    gen.add_argument("--beta", type=float, default=0.29, help="Extinction probability")
    gen.add_argument("--horizon", type=int, default=None)
    gen.add_argument("--r0", type=float, default=KernelParams.r0)
    gen.add_argument("--alpha", type=float, default=KernelParams.alpha)
    gen.add_argument("--gamma", type=float, default=KernelParams.gamma)
    gen.add_argument("--length", type=int, default=4, help="Corridor parcels")
    gen.add_argument("--decoys", type=int, default=2)
    gen.add_argument("--reservoir-size", dest="reservoir_size", type=int, default=20)
    gen.add_argument("--spacing", type=float, default=2900.0)
    gen.set_defaults(handler=_cmd_gen)

    sample = commands.add_parser("sample", parents=[common], help="Sample cascades")
    sample.add_argument("--instance", required=True)
    sample.add_argument("--n", type=int, default=10)
    sample.set_defaults(handler=_cmd_sample)

    preprocess = commands.add_parser("preprocess", parents=[common], help="Reduce cascades")
    preprocess.add_argument("--cascades", required=True)
    preprocess.set_defaults(handler=_cmd_preprocess)

    solve = commands.add_parser("solve", help="Solve an instance")
    solvers = solve.add_subparsers(dest="solver", required=True)

    saa = solvers.add_parser("saa", parents=[common], help="Replicated SAA")
    saa.add_argument("--instance", required=True)
    saa.add_argument("--budget", type=float, default=None)
    saa.add_argument("--n", type=int, default=None, help="Training cascades (default 10)")
    _saa_options(saa)
    saa.add_argument("--export-mps", dest="export_mps", default=None)
    saa.set_defaults(handler=_cmd_solve_saa)

    greedy = solvers.add_parser("greedy", parents=[common], help="Greedy baseline")
    greedy.add_argument("--instance", required=True)
    greedy.add_argument("--variant", type=GreedyVariant, default=None, help="uc or cb")
    greedy.add_argument(
        "--mode",
        dest="eval_mode",
        type=EvalMode,
        default=None,
        help="fresh, reuse, reuse+pre or reuse+pre+repeat",
    )
    greedy.add_argument("--n", type=int, default=None, help="Training cascades (default 100)")
    greedy.add_argument("--budget", type=float, default=None)
    greedy.add_argument("--trace", default=None, help="Write the round trace CSV here")
    greedy.add_argument("--timings", action="store_true", help="Keep wallclock times in the trace")
    greedy.set_defaults(handler=_cmd_solve_greedy)

    evaluate = commands.add_parser("evaluate", parents=[common], help="Estimate a strategy")
    evaluate.add_argument("--instance", required=True)
    evaluate.add_argument("--strategy", required=True)
    evaluate.add_argument("--n-test", dest="n_test", type=int, default=None)
    evaluate.set_defaults(handler=_cmd_evaluate)

    sweep = commands.add_parser("sweep", parents=[common], help="Compare methods over budgets")
    sweep.add_argument("--instance", required=True)
    sweep.add_argument("--budgets", type=_float_list, required=True)
    sweep.add_argument("--methods", type=_name_list, default=list(METHODS))
    sweep.add_argument("--n", type=int, default=None)
    sweep.add_argument("--greedy-n", dest="greedy_n", type=int, default=None)
    _saa_options(sweep)
    sweep.set_defaults(handler=_cmd_sweep)

    gapcurve = commands.add_parser("gapcurve", parents=[common], help="Bounds by training size")
    gapcurve.add_argument("--instance", required=True)
    gapcurve.add_argument("--sizes", type=_int_list, required=True)
    gapcurve.add_argument("--budget", type=float, default=None)
    _saa_options(gapcurve)
    gapcurve.set_defaults(handler=_cmd_gapcurve)

    return parser


def _report_error(exc: BaseException) -> int:
    code = exit_code_for(exc)
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(payload) + "\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    """
    Run the command line.

    Args:
        argv: Arguments without the program name (``sys.argv[1:]`` when None)

    Returns:
        The exit code
    """
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.INFO,
            stream=sys.stderr,
            format="%(asctime)s %(name)s %(levelname)s %(message)s",
        )
        handler: Callable[[argparse.Namespace], int] = args.handler
        return handler(args)
    except (CascadaError, ValueError) as e:
        logger.debug("Command failed", exc_info=True)
        return _report_error(e)


if __name__ == "__main__":
    sys.exit(main())
