"""Command-line entry point: ``shapval <method> ...``, ``experiment`` and ``pareto``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, ShapvalError
from .harness import (
    ExperimentConfig,
    ExperimentFailure,
    MethodSpec,
    pareto_csv,
    pareto_sweep,
    run_experiment,
)
from .scenarios import SCENARIOS, ScenarioConfig

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
_SINGLE = ("exact", "sample", "kgreedy", "ipss", "tmc", "ccshapley")


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _source_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--table", help="JSON utility table")
    src.add_argument("--scenario", help=f"synthetic scenario: {', '.join(SCENARIOS)} (or a-e)")
    p.add_argument("--n", type=int, default=6, help="number of clients")
    p.add_argument("--t", type=int, default=80, help="samples per client")
    p.add_argument("--d", type=int, default=5, help="feature dimension")
    p.add_argument("--sigma", type=float, default=1.0, help="label noise std")
    p.add_argument("--noise", type=float, default=0.0, help="noise level for the noisy scenarios")
    p.add_argument("--null", type=int, action="append", default=[], metavar="J",
                   help="0-based client to empty (repeatable)")
    p.add_argument("--duplicate", action="append", default=[], metavar="I,J",
                   help="0-based pair; J gets a copy of I's data (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shapval", description="Shapley-value data valuation for simulated federations.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in _SINGLE:
        p = sub.add_parser(name, help=f"run {name}")
        _source_args(p)
        if name == "exact":
            p.add_argument("--scheme", choices=("mc", "cc", "perm"), default="mc")
        if name == "sample":
            p.add_argument("--scheme", choices=("mc", "cc"), default="mc")
            p.add_argument("--sampling", choices=("shared", "per_client"), default="shared")
        if name in ("sample", "ipss", "ccshapley"):
            p.add_argument("--gamma", type=int, required=True, help="evaluation budget")
        if name == "kgreedy":
            p.add_argument("--K", type=int, required=True, help="largest coalition size used")
        if name == "tmc":
            p.add_argument("--rounds", type=int, default=None, help="permutations (default n)")
            p.add_argument("--trunc-tol", type=float, default=None, help="truncation tolerance")
        p.add_argument("--repeats", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--exact-ref", action="store_true", help="also report relative error against exact MC-SV")
        p.add_argument("--out", help="directory for report.json and aggregates.csv")
    p = sub.add_parser("experiment", help="run a JSON experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="overrides the config's output directory")
    p = sub.add_parser("pareto", help="sweep sampling budgets")
    p.add_argument("--config", required=True)
    p.add_argument("--gammas", required=True, help="comma-separated budgets, e.g. 8,16,32")
    p.add_argument("--out", help="directory for pareto.csv")
    return parser


def _pair(text: str) -> tuple[int, int]:
    try:
        i, j = (int(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"--duplicate expects I,J, got {text!r}") from None
    return i, j


def _single_config(args) -> ExperimentConfig:
    name = args.command
    params: dict = {}
    if name == "exact":
        name = f"exact_{args.scheme}"
    if args.command == "sample":
        params.update(scheme=args.scheme.upper(), sampling=args.sampling)
    for attr, key in (("gamma", "gamma"), ("K", "K"), ("rounds", "rounds"), ("trunc_tol", "trunc_tol")):
        value = getattr(args, attr, None)
        if value is not None:
            params[key] = value
    scenario = None
    if args.scenario is not None:
        scenario = ScenarioConfig(
            scenario=args.scenario, n=args.n, t=args.t, d=args.d, sigma=args.sigma,
            noise_level=args.noise, seed=args.seed,
            null_clients=list(args.null), duplicates=[_pair(p) for p in args.duplicate],
        )
    return ExperimentConfig(
        methods=[MethodSpec(name, params)],
        scenario=scenario,
        table=args.table,
        repeats=args.repeats,
        seed=args.seed,
        out=args.out,
        exact=args.exact_ref or name.startswith("exact"),
    )


def _main(args) -> int:
    if args.command in _SINGLE:
        report = run_experiment(_single_config(args))
        for row in report.rows:
            print(json.dumps(row, sort_keys=True), flush=True)
        return EXIT_OK
    config = ExperimentConfig.load(args.config)
    if args.out:
        config.out = args.out
    if args.command == "experiment":
        report = run_experiment(config, log=lambda msg: print(msg, file=sys.stderr, flush=True))
        print(json.dumps(report.aggregates, indent=1, sort_keys=True))
        return EXIT_OK
    try:
        gammas = [int(g) for g in args.gammas.split(",") if g.strip()]
    except ValueError:
        raise ConfigError(f"--gammas expects comma-separated integers, got {args.gammas!r}") from None
    text = pareto_csv(pareto_sweep(config, gammas))
    if config.out:
        Path(config.out).mkdir(parents=True, exist_ok=True)
        (Path(config.out) / "pareto.csv").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _main(args)
    except ExperimentFailure as exc:
        # a method rejecting its parameters is still a configuration problem
        code = EXIT_CONFIG if isinstance(exc.cause, (ConfigError, ValueError)) else EXIT_RUNTIME
        print(f"shapval: {exc}", file=sys.stderr)
        return code
    except (ConfigError, ValueError, OSError) as exc:
        print(f"shapval: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ShapvalError, RuntimeError, ArithmeticError) as exc:
        print(f"shapval: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
