"""Command-line entry point.

    alphafair run --config FILE [--seed-list 0,1,2] [--out DIR] [--set key=value ...]
    alphafair sweep-alpha --config FILE --alphas "0.0:0.99:100"
    alphafair validate-data --csv FILE [--movies-csv FILE] [--limit-rows N]

Exit codes: 0 success, 2 config error, 3 data error, 4 benchmark not converged.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .data import DataError, MOVIELENS_GENRES, load_ratings_csv
from .harness import ConfigError, load_config, parse_alpha_grid, run_experiment, sweep_alpha

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NONCONVERGED = 0, 2, 3, 4


def _parse_set(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        try:
            out[key.strip()] = tomllib.loads(f"v = {value}")["v"]
        except tomllib.TOMLDecodeError:
            out[key.strip()] = value  # bare string
    return out


def _overrides(args):
    ov = _parse_set(args.set)
    if getattr(args, "seed_list", None):
        try:
            ov["seeds"] = [int(s) for s in args.seed_list.split(",") if s.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad --seed-list: {exc}") from exc
    if getattr(args, "out", None):
        ov["out_dir"] = args.out
    return ov


def cmd_run(args) -> int:
    config = load_config(args.config, _overrides(args))
    result = run_experiment(config)
    s = result.summary
    print(f"wrote {config.out_dir}: jain={s['final_jain_index']['mean']:.6f} "
          f"alpha_perf={s['final_alpha_performance']['mean']:.6f} "
          f"approx_regret={s['final_approx_regret']['mean']:.6f}")
    return EXIT_OK if result.benchmark_converged else EXIT_NONCONVERGED


def cmd_sweep(args) -> int:
    config = load_config(args.config, _overrides(args))
    rows = sweep_alpha(config, parse_alpha_grid(args.alphas))
    for row in rows:
        print(f"alpha={row['alpha']:.4f} jain={row['jain_index']:.6f} "
              f"avg_cum={row['avg_cumulative_reward']:.6f}")
    return EXIT_OK if all(r["benchmark_converged"] for r in rows) else EXIT_NONCONVERGED


def cmd_validate(args) -> int:
    genres = args.genres.split("|") if args.genres else MOVIELENS_GENRES
    seq, maps = load_ratings_csv(
        args.csv,
        limit_rows=args.limit_rows,
        delta=args.delta,
        min_context_frequency=args.min_context_frequency,
        movies_csv=args.movies_csv,
        genres=genres,
    )
    print(json.dumps({
        "rows": seq.horizon,
        "num_contexts": seq.num_contexts,
        "num_arms": seq.num_arms,
        "arms_featured": int((seq.rewards == 1.0).any(axis=0).sum()),
        "delta": seq.delta,
    }, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alphafair", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--seed-list")
    p.add_argument("--out")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep-alpha", help="final fairness and reward across alpha values")
    p.add_argument("--config", required=True)
    p.add_argument("--alphas", default="0.0:0.99:100")
    p.add_argument("--out")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate-data", help="check a ratings CSV and report M, N")
    p.add_argument("--csv", required=True)
    p.add_argument("--movies-csv")
    p.add_argument("--limit-rows", type=int, default=5000)
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--min-context-frequency", type=int)
    p.add_argument("--genres", help="pipe-separated arm list (default: MovieLens genres)")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
