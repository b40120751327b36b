"""Command-line front end.

    stochpower simulate     --config run.yaml [--out DIR] [--seeds N] [--quiet]
    stochpower region       --config run.yaml
    stochpower compare      --config run.yaml
    stochpower lambda-bound --config run.yaml

Exit codes: 0 success, 2 config error, 3 numerical error, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .channel import FiniteMarkovProcess, ReducibleChainError
from .config import ConfigError, RunConfig, load_config
from .csvio import write_array_csv, write_csv
from .equilibrium import BudgetExceeded, equilibrium_report, expected_utility
from .game import SolverError
from .region import enumerate_region, pareto_frontier
from .sim import compare_mechanisms, run_episode
from .strategies import GrimTrigger, SMUPolicy, make_mechanism

EXIT_CONFIG, EXIT_NUMERIC, EXIT_BUDGET = 2, 3, 4


def _meta(cfg: RunConfig, command: str, **extra) -> dict:
    meta = {
        "command": command,
        "config_sha256": cfg.digest,
        "seeds": ",".join(str(s) for s in cfg.analysis.seeds),
        "lambda": repr(cfg.game.lam),
        "p_max": repr(cfg.game.p_max),
    }
    meta.update({k: str(v) for k, v in extra.items()})
    return meta


def _say(args, *lines):
    if not args.quiet:
        for line in lines:
            print(line)


def _policy(cfg: RunConfig):
    name = cfg.strategy.policy
    exhaustive = cfg.strategy.selection == "exhaustive"
    if name == "grim_smu":
        return GrimTrigger(SMUPolicy(cfg.game, exhaustive), cfg.game)
    return make_mechanism(name, cfg.game, cfg.process, exhaustive)


def _equilibrium_warning(cfg: RunConfig):
    report = equilibrium_report(cfg.process, cfg.game, n_samples=cfg.analysis.mc_samples)
    if not report.holds_for(cfg.game.lam):
        print(
            f"WARNING: lambda={cfg.game.lam:g} exceeds the SMU equilibrium bound "
            f"lambda_max={report.lambda_max:.6g}; grim-trigger SMU is not guaranteed to be an equilibrium",
            file=sys.stderr,
        )
        return True
    return False


def cmd_simulate(cfg: RunConfig, args) -> int:
    out = args.out
    policy = _policy(cfg)
    K, T = cfg.game.K, cfg.analysis.T
    rows, results = [], []
    for seed in cfg.analysis.seeds:
        res = run_episode(policy, cfg.process, cfg.game, T, seed, trace=cfg.output.trace)
        results.append(res)
        rows.extend((T, seed, i, res.discounted[i], res.average[i]) for i in range(K))
        if res.trace is not None:
            tr = res.trace
            trace_rows = [
                (int(tr["stage"][t]), i, tr["eta"][t, i], tr["power"][t, i], tr["sinr"][t, i], tr["utility"][t, i])
                for t in range(len(tr["stage"])) for i in range(K)
            ]
            write_csv(out / f"trace_seed{seed}.csv", ["stage", "player", "eta", "power", "sinr", "utility"],
                      trace_rows, _meta(cfg, "simulate", policy=policy.name, T=T))
    meta = _meta(cfg, "simulate", policy=policy.name, T=T,
                 truncation_bound=repr(results[0].truncation_bound))
    write_csv(out / "simulate_episodes.csv", ["stage_count", "seed", "player", "discounted", "average"], rows, meta)
    disc = np.array([r.discounted for r in results])
    avg = np.array([r.average for r in results])
    n = len(results)

    def se(x):
        return x.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.full(K, np.nan)

    summary = [(i, disc[:, i].mean(), se(disc)[i], avg[:, i].mean(), se(avg)[i], n) for i in range(K)]
    write_csv(out / "simulate_summary.csv",
              ["player", "discounted_mean", "discounted_stderr", "average_mean", "average_stderr", "n_seeds"],
              summary, meta)
    _say(args, f"policy {policy.name}, T={T}, {n} seed(s), truncation bound {results[0].truncation_bound:.3g}")
    for i, d, _, a, _, _ in summary:
        _say(args, f"  player {i}: discounted {d:.6f}  average {a:.6f}")
    _equilibrium_warning(cfg)
    return 0


def _named_points(cfg: RunConfig):
    proc, game = cfg.process, cfg.game
    return [(name, expected_utility(rule, proc, game).mean)
            for name, rule in (("SMU", "smu"), ("OP", "op"), ("NE", "nash"))]


def cmd_region(cfg: RunConfig, args) -> int:
    if not isinstance(cfg.process, FiniteMarkovProcess):
        raise ConfigError("region needs a markov channel (channel.type: markov)")
    out, K = args.out, cfg.game.K
    coords = [f"u{i + 1}" for i in range(K)]
    named = _named_points(cfg)
    meta = _meta(cfg, "region", grid=cfg.analysis.grid)
    write_csv(out / "region_points.csv", ["name"] + coords, [(n, *u) for n, u in named], meta)
    if K > 2:
        print(f"region: the point cloud is limited to K <= 2 (got K={K}); wrote named points only",
              file=sys.stderr)
        return 0
    region = enumerate_region(cfg.process, cfg.game, cfg.analysis.grid, budget=cfg.analysis.budget,
                              minmax_grid=cfg.analysis.minmax_grid)
    meta = _meta(cfg, "region", grid=len(region.levels),
                 levels=",".join(format(x, ".17g") for x in region.levels))
    write_array_csv(out / "region_cloud.csv", ["profile"] + coords,
                    np.arange(len(region.points)), region.points, meta)
    write_csv(out / "region_frontier.csv", coords, pareto_frontier(region.points).tolist(), meta)
    write_csv(out / "region_minmax.csv", ["player", "minmax"], list(enumerate(region.minmax)), meta)
    if region.hull is not None:
        write_csv(out / "region_hull.csv", ["vertex"] + coords,
                  [(k, *v) for k, v in enumerate(region.hull.vertices)], meta)
        write_csv(out / "region_hull_ir.csv", ["vertex"] + coords,
                  [(k, *v) for k, v in enumerate(region.ir_hull.vertices)], meta)
    _say(args, f"{len(region.points)} profiles on {len(region.levels)} power levels")
    for name, u in named:
        _say(args, f"  {name}: " + ", ".join(f"{x:.6f}" for x in u))
    _say(args, "  minmax: " + ", ".join(f"{x:.6f}" for x in region.minmax))
    return 0


def cmd_compare(cfg: RunConfig, args) -> int:
    stats = compare_mechanisms(cfg.process, cfg.game, cfg.K_values, cfg.analysis.T, cfg.analysis.seeds,
                               cfg.strategy.mechanisms, cfg.strategy.selection == "exhaustive")
    rows = [(s.K, s.mechanism, s.mean, s.stderr, s.n_seeds) for s in stats]
    write_csv(args.out / "compare.csv", ["K", "mechanism", "mean", "stderr", "seeds"], rows,
              _meta(cfg, "compare", T=cfg.analysis.T))
    for s in stats:
        _say(args, f"K={s.K:<3d} {s.mechanism:<16s} {s.mean:.6f} +- {s.stderr:.2g}")
    return 0


def cmd_lambda_bound(cfg: RunConfig, args) -> int:
    report = equilibrium_report(cfg.process, cfg.game, n_samples=cfg.analysis.mc_samples)
    rows = [(i, report.expected_smu[i], report.expected_ne[i], report.delta[i], report.deviation_cap[i],
             report.bounds[i]) for i in range(cfg.game.K)]
    write_csv(args.out / "lambda_bound.csv",
              ["player", "expected_smu", "expected_ne", "delta", "cap", "bound"], rows,
              _meta(cfg, "lambda-bound", exact=report.exact, lambda_max=repr(report.lambda_max)))
    for i, smu, ne, d, cap, b in rows:
        _say(args, f"player {i}: delta {d:.6f}  cap {cap:.6f}  bound {b:.6f}")
    holds = report.holds_for(cfg.game.lam)
    _say(args, f"lambda_max {report.lambda_max:.6f}; configured lambda {cfg.game.lam:g} "
               f"{'satisfies' if holds else 'violates'} the bound")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "region": cmd_region,
    "compare": cmd_compare,
    "lambda-bound": cmd_lambda_bound,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, required=True, help="YAML run configuration")
    common.add_argument("--out", type=Path, default=None, help="output directory (overrides output.directory)")
    common.add_argument("--seeds", type=int, default=None, help="use N seeds starting at channel.seed")
    common.add_argument("--quiet", action="store_true", help="suppress the printed summary")
    parser = argparse.ArgumentParser(prog="stochpower", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seeds is not None:
            if args.seeds < 1:
                raise ConfigError("--seeds must be >= 1")
            cfg.analysis = replace(cfg.analysis, seeds=[cfg.process.seed + j for j in range(args.seeds)])
        if args.out is None:
            args.out = cfg.output.directory
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (SolverError, ReducibleChainError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
