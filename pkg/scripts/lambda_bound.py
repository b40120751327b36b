"""Discount bound for SMU with grim-trigger punishment, checked against simulation.

For each lambda in a sweep, compares a player's discounted utility when
complying with the best one-stage deviation followed by NE punishment.

    python scripts/lambda_bound.py [--config configs/single_state.yaml]
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from stochpower.config import load_config
from stochpower.equilibrium import equilibrium_report
from stochpower.sim import run_episode
from stochpower.strategies import Deviator, GrimTrigger, SMUPolicy

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, default=ROOT / "configs" / "single_state.yaml")
    parser.add_argument("--T", type=int, default=10_000)
    parser.add_argument("--seeds", type=int, default=8)
    args = parser.parse_args(argv)

    cfg = load_config(args.config)
    report = equilibrium_report(cfg.process, cfg.game)
    print(f"lambda_max = {report.lambda_max:.6f}  (delta {report.delta.min():.6f}, cap {report.deviation_cap.max():.6f})")
    print(f"{'lambda':>10s} {'comply':>12s} {'deviate':>12s}  winner")
    for factor in (0.5, 0.9, 1.1, 2.0, 5.0, 9.0, 12.0):
        lam = factor * report.lambda_max
        if lam >= 1:
            continue
        game = cfg.game.with_lam(lam)
        comply = np.mean([run_episode(GrimTrigger(SMUPolicy(game), game), cfg.process, game, args.T, s).discounted[0]
                          for s in range(args.seeds)])
        deviate = np.mean([run_episode(Deviator(GrimTrigger(SMUPolicy(game), game), game, 0, 0), cfg.process, game,
                                       args.T, s).discounted[0] for s in range(args.seeds)])
        print(f"{lam:10.6f} {comply:12.6f} {deviate:12.6f}  {'comply' if comply > deviate else 'deviate'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
