"""Command-line interface.

Exit codes: 0 success, 1 computation error, 2 input or validation error.
The default seed comes from ``$SEMIQUANTUM_SEED`` when set.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import game as game_mod
from . import mdl, metrics, minm, serialize, steering
from .errors import (
    PreconditionError,
    SemiQuantumError,
    SizeGuardError,
    ValidationError,
)

DEFAULT_SEED = 20131204
SEED_ENV = "SEMIQUANTUM_SEED"

GAME_BUILTINS = {
    "tetrahedron": game_mod.tetrahedron_game,
    "steering-demo": game_mod.steering_demo_game,
}
MODEL_BUILTINS = {"paper": mdl.paper_model}

log = logging.getLogger("semiquantum")


class InputError(Exception):
    """Bad command-line input (exit code 2)."""


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"${SEED_ENV} must be an integer, got {raw!r}") from None


def _read_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _load_game(args) -> game_mod.GameSpec:
    if args.input:
        return serialize.game_from_json(_read_json(args.input))
    return GAME_BUILTINS[args.builtin]()


def _load_model(args) -> mdl.MdlModel:
    if args.input:
        return serialize.model_from_json(_read_json(args.input))
    return MODEL_BUILTINS[args.builtin]()


def _table_source(ref: str) -> game_mod.CorrelationTable:
    """A builtin game name, a table JSON file or a game JSON file."""
    if ref in GAME_BUILTINS:
        return game_mod.correlation(GAME_BUILTINS[ref]())
    obj = _read_json(ref)
    if isinstance(obj, dict) and "values" in obj:
        return serialize.table_from_json(obj)
    return game_mod.correlation(serialize.game_from_json(obj))


def _emit(args, text: str) -> None:
    if args.output and args.output != "-":
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def cmd_correlations(args) -> None:
    game = _load_game(args)
    tab = game_mod.correlation(game)
    if args.format == "json":
        out = serialize.table_to_json(tab)
        out["scenario"] = game_mod.classify(game).value
        _emit(args, _dump(out))
    else:
        _emit(args, serialize.table_to_csv(tab))


def cmd_mdl(args) -> None:
    model = _load_model(args)
    tab = mdl.table(model)
    report = {"table": serialize.table_to_json(tab)}
    if args.verify_against:
        ref = _table_source(args.verify_against)
        report["verification"] = {"against": args.verify_against, "max_deviation": tab.max_deviation(ref)}
    if args.samples:
        emp = mdl.empirical_table(model, args.samples, args.seed, threads=args.threads)
        report["empirical"] = {
            "samples_per_setting": args.samples,
            "seed": args.seed,
            "table": serialize.table_to_json(emp),
            "max_deviation": emp.max_deviation(tab),
        }
    if args.format == "json":
        _emit(args, _dump(report))
        return
    _emit(args, serialize.table_to_csv(tab))
    if "verification" in report:
        print(f"max deviation vs {args.verify_against}: {report['verification']['max_deviation']:.3e}", file=sys.stderr)
    if "empirical" in report:
        print(f"empirical max deviation ({args.samples} samples/setting): "
              f"{report['empirical']['max_deviation']:.3e}", file=sys.stderr)


def cmd_metrics(args) -> None:
    model = _load_model(args)
    if args.prior == "uniform":
        prior = metrics.uniform_prior(model)
    else:
        prior = serialize.prior_from_json(_read_json(args.prior), model)
    rep = metrics.metrics_report(model, prior, method=args.method)
    d = rep.to_dict()
    if args.format == "json":
        _emit(args, _dump(d))
    else:
        keys = ["M", "F", "H_at_prior", "capacity", "P_star"]
        _emit(args, ",".join(keys) + "\n" + ",".join("" if d[k] is None else f"{d[k]:.12g}" for k in keys) + "\n")


def cmd_curve(args) -> None:
    model = _load_model(args)
    if args.grid < 2:
        raise InputError("--grid needs at least 2 points")
    pts = metrics.curve(model, args.grid)
    if args.format == "json":
        _emit(args, _dump([{"P": P, "H_bits": H} for P, H in pts]))
    else:
        _emit(args, metrics.curve_csv(pts))


def cmd_steering(args) -> None:
    game = _load_game(args)
    config = steering.ProtocolConfig(game, args.variant)
    exact = steering.simulated_table(config)
    reference = game_mod.correlation(game)
    result = steering.run_rounds(config, args.rounds, args.seed)
    emp = result.table()
    summary = {
        "game": game.name,
        "scenario": game_mod.classify(game).value,
        "variant": args.variant,
        "rounds": args.rounds,
        "seed": args.seed,
        "exact_vs_correlation_max_deviation": exact.max_deviation(reference),
        "empirical_max_deviation": emp.max_deviation(reference),
        "bits_per_round": result.bits_per_round,
        "total_bits": result.total_bits,
        "exact_table": serialize.table_to_json(exact),
        "empirical_table": serialize.table_to_json(emp),
    }
    if args.transcript:
        Path(args.transcript).write_text(steering.run_protocol(config, game.alice_inputs.labels[0],
                                                               game.bob_inputs.labels[0], args.seed).transcript.to_jsonl())
    if args.format == "json":
        _emit(args, _dump(summary))
    else:
        _emit(args, result.rows_csv())
        bits = summary["bits_per_round"]
        print(f"rounds={args.rounds} forward_bits={bits['forward']} backward_bits={bits['backward']} "
              f"empirical_max_deviation={summary['empirical_max_deviation']:.3e}", file=sys.stderr)


def cmd_minm(args) -> None:
    target = _table_source(args.input or args.builtin)
    sol = minm.min_M(target, args.mode, backend=args.backend)
    out = serialize.solution_to_json(sol)
    out["certified"] = minm.certify(sol, target) if sol.status == "optimal" else False
    out["table_variational_distance"] = minm.table_variational_distance(target)
    _emit(args, _dump(out))
    if sol.status != "optimal":
        raise SemiQuantumError(f"solver finished with status {sol.status}")


def _common(p: argparse.ArgumentParser, formats=("csv", "json"), default="csv") -> None:
    p.add_argument("--format", choices=formats, default=default)
    p.add_argument("--output", "-o", help="write here instead of stdout")
    p.add_argument("--seed", type=int, default=None, help=f"RNG seed (default ${SEED_ENV} or {DEFAULT_SEED})")
    p.add_argument("--threads", type=int, default=1, help="worker cap for sampling")


def _source(p, builtins, default=None, required=True):
    g = p.add_mutually_exclusive_group(required=required and default is None)
    g.add_argument("--builtin", choices=sorted(builtins), default=default)
    g.add_argument("--input", "-i", help="JSON spec file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semiquantum", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("correlations", help="quantum correlation table of a game")
    _source(p, GAME_BUILTINS)
    _common(p)
    p.set_defaults(func=cmd_correlations)

    p = sub.add_parser("mdl", help="correlation table of a hidden-variable model")
    _source(p, MODEL_BUILTINS)
    p.add_argument("--verify-against", metavar="GAME", help="builtin game name, game JSON or table JSON")
    p.add_argument("--samples", type=int, default=0, help="add a Monte-Carlo table with this many draws per setting")
    _common(p)
    p.set_defaults(func=cmd_mdl)

    p = sub.add_parser("metrics", help="M, F, mutual information and capacity")
    _source(p, MODEL_BUILTINS)
    p.add_argument("--prior", default="uniform", help="'uniform' or a JSON prior file")
    p.add_argument("--method", choices=("auto", "golden", "blahut_arimoto"), default="auto")
    _common(p, default="json")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("curve", help="mutual information against same-label probability P")
    _source(p, MODEL_BUILTINS)
    p.add_argument("--grid", type=int, default=101)
    _common(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("steering", help="run the LOCC steering-game protocol")
    _source(p, GAME_BUILTINS, default="steering-demo")
    p.add_argument("--rounds", type=int, default=1_000_000)
    p.add_argument("--variant", choices=steering.VARIANTS, default=steering.TWO_WAY)
    p.add_argument("--transcript", metavar="PATH", help="write one round's transcript as JSON lines")
    _common(p, default="json")
    p.set_defaults(func=cmd_steering)

    p = sub.add_parser("minm", help="minimal measurement dependence via linear programming")
    _source(p, GAME_BUILTINS)
    p.add_argument("--mode", choices=minm.MODES, default=minm.LAMBDA_ONLY)
    p.add_argument("--backend", choices=("auto", "simplex", "highs"), default="auto")
    _common(p, formats=("json",), default="json")
    p.set_defaults(func=cmd_minm)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.seed is None:
            args.seed = _default_seed()
        if getattr(args, "rounds", 1) < 1 or getattr(args, "samples", 0) < 0:
            raise InputError("--rounds must be positive and --samples nonnegative")
        args.func(args)
    except (InputError, ValidationError, PreconditionError, SizeGuardError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SemiQuantumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
