"""Mean per-player utility of the four mechanisms against the number of transmitters.

    python scripts/mechanism_comparison.py [--config configs/default.yaml] [--out out/compare]

Writes compare.csv and prints, for each K, SMU's paired lead over every other
mechanism in units of its standard error.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from stochpower.config import load_config
from stochpower.csvio import write_csv
from stochpower.sim import compare_mechanisms

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, default=ROOT / "configs" / "default.yaml")
    parser.add_argument("--out", type=Path, default=Path("out/compare"))
    parser.add_argument("--T", type=int, default=None, help="override analysis.T")
    args = parser.parse_args(argv)

    cfg = load_config(args.config)
    T = args.T or cfg.analysis.T
    stats = compare_mechanisms(cfg.process, cfg.game, cfg.K_values, T, cfg.analysis.seeds,
                               cfg.strategy.mechanisms)
    rows = [(s.K, s.mechanism, s.mean, s.stderr, s.n_seeds) for s in stats]
    meta = {"config_sha256": cfg.digest, "seeds": ",".join(map(str, cfg.analysis.seeds)), "T": T}
    write_csv(args.out / "compare.csv", ["K", "mechanism", "mean", "stderr", "seeds"], rows, meta)

    table = {(s.K, s.mechanism): s for s in stats}
    others = [m for m in cfg.strategy.mechanisms if m != "smu"]
    print("K   " + "".join(f"{m:>18s}" for m in cfg.strategy.mechanisms) + "   SMU lead (se)")
    for K in cfg.K_values:
        means = "".join(f"{table[K, m].mean:18.6f}" for m in cfg.strategy.mechanisms)
        leads = []
        for m in others:
            d = table[K, "smu"].per_seed - table[K, m].per_seed
            leads.append(f"{m}:{d.mean() / (d.std(ddof=1) / np.sqrt(len(d))):+.1f}")
        print(f"{K:<4d}{means}   " + " ".join(leads))
    return 0


if __name__ == "__main__":
    sys.exit(main())
