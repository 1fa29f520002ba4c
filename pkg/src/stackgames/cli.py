"""Command-line interface.

Subcommands: ``solve-exact`` (exact Stackelberg table, optional golden-file
check), ``train`` (run a config file), ``reproduce`` (preset experiment
bundles per figure), ``verify`` (equilibrium check of a saved leader
policy), and ``plot`` (render learning curves).

Exit codes: 0 success, 2 configuration error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import (
    FIGURE_IDS,
    ConfigError,
    _preset_games,
    parse_config,
    reproduce,
    run_experiment,
)
from .games import GameError, canonical_games, load_game_file
from .oracles import exact_best_response
from .plotting import PlotError, emit_plots
from .policies import PolicyError, load_policy
from .solver import solve_stackelberg, verify_equilibrium
from .experiments import stream_rng

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3


def _policy_string(policy) -> str:
    return "".join(str(a) for a in policy.actions)


def cmd_solve_exact(args) -> int:
    if args.game_file:
        games = {None: load_game_file(args.game_file)}
        names = [None]
    elif args.game:
        games = canonical_games()
        if args.game not in games:
            print(f"unknown game {args.game!r}", file=sys.stderr)
            return EXIT_CONFIG
        names = [args.game]
    else:
        games = canonical_games()
        names = list(games)

    rows = []
    for name in names:
        game = games[name]
        solution = solve_stackelberg(game)
        rows.append((game.name, _policy_string(solution.leader),
                     _policy_string(solution.follower),
                     repr(solution.leader_value), repr(solution.follower_value)))

    print("game,leader_policy,follower_policy,leader_value,follower_value")
    for row in rows:
        print(",".join(row))

    if args.golden:
        golden = Path(args.golden)
        content = "game,leader_policy,follower_policy,leader_value,follower_value\n"
        content += "".join(",".join(row) + "\n" for row in rows)
        if golden.exists():
            if golden.read_text() != content:
                print(f"golden mismatch: {golden}", file=sys.stderr)
                return EXIT_VERIFY
            print(f"golden check passed: {golden}")
        else:
            golden.parent.mkdir(parents=True, exist_ok=True)
            golden.write_text(content)
            print(f"golden written: {golden}")
    return EXIT_OK


def cmd_train(args) -> int:
    path = Path(args.config)
    if not path.exists():
        print(f"config not found: {path}", file=sys.stderr)
        return EXIT_CONFIG
    config = parse_config(path.read_text(), base_dir=path.parent)
    if args.seed is not None:
        config.seeds = (args.seed,)
    elif args.seeds:
        config.seeds = tuple(int(s) for s in args.seeds.split(","))
    if args.scale:
        config.scale = args.scale
    out_dir = Path(args.out)
    result = run_experiment(config, out_dir, trace=args.dump_episodes)
    for record in result.records:
        status = "equilibrium" if record.equilibrium else "NOT an equilibrium"
        print(f"{config.run_id} seed {record.seed}: final {record.final_value:.3f} "
              f"eval {record.eval_value:.3f} (exact optimum "
              f"{result.reference_value:.3f}) [{status}]")
    print(f"outputs in {out_dir}")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    seeds = tuple(int(s) for s in args.seeds.split(",")) if args.seeds else None
    results = reproduce(args.figure, args.out, seeds=seeds)
    for run_id, result in results.items():
        values = ", ".join(f"{r.final_value:.2f}" for r in result.records)
        print(f"{run_id}: finals [{values}] vs exact {result.reference_value:.2f}")
    print(f"outputs in {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    games = _preset_games()
    if args.game_file:
        game = load_game_file(args.game_file)
    elif args.game in games:
        game = games[args.game]
    else:
        print(f"unknown game {args.game!r}", file=sys.stderr)
        return EXIT_CONFIG
    leader = load_policy(args.policy)
    follower, follower_value, leader_value = exact_best_response(game, leader)
    report = verify_equilibrium(game, leader, follower_value,
                                iterations=args.iterations,
                                rng=stream_rng(args.seed, "verify"),
                                leader_value_before=leader_value)
    print(f"leader value {leader_value!r}, follower best response value "
          f"{follower_value!r}")
    print(f"verification: improvement {report.follower_improvement:.4f}, "
          f"leader value after {report.leader_value_after:.4f} "
          f"-> {'PASS' if report.passed else 'FAIL'}")
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_plot(args) -> int:
    inputs = []
    for entry in args.inputs:
        path = Path(entry)
        if path.is_dir():
            inputs.extend(sorted(p for p in path.glob("*.csv")
                                 if not p.name.endswith("_summary.csv")))
        else:
            inputs.append(path)
    written = emit_plots(inputs, args.out)
    for run_id, path in sorted(written.items()):
        print(f"{run_id} -> {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stackgames",
        description="Learn, solve, and stress-test Stackelberg equilibria "
                    "in iterated matrix games.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-exact", help="exact Stackelberg solutions")
    p.add_argument("--game", help="canonical game name (default: all)")
    p.add_argument("--game-file", help="game definition file")
    p.add_argument("--golden", help="write or check a golden solution file")
    p.set_defaults(func=cmd_solve_exact)

    p = sub.add_parser("train", help="run an experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", help="comma-separated seed list")
    p.add_argument("--out", default="results")
    p.add_argument("--scale", choices=("table", "centered"))
    p.add_argument("--dump-episodes", action="store_true",
                   help="write per-step episode traces")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("reproduce", help="run a preset experiment bundle")
    p.add_argument("figure", choices=FIGURE_IDS)
    p.add_argument("--out", default="results")
    p.add_argument("--seeds", help="comma-separated seed list override")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("verify", help="equilibrium-check a saved leader policy")
    p.add_argument("policy")
    p.add_argument("--game", help="canonical or preset game name")
    p.add_argument("--game-file")
    p.add_argument("--iterations", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("plot", help="render learning-curve charts")
    p.add_argument("inputs", nargs="+", help="curve CSV files or directories")
    p.add_argument("--out", default="plots")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GameError, PolicyError, PlotError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
