"""Two-player achievable region with the SMU, operating-point and one-shot NE points.

Writes the region CSVs (cloud, hull, individually rational hull, frontier,
named points, minmax levels) and prints the dominance and containment checks.

    python scripts/achievable_region.py [--config configs/default.yaml] [--out out/region]
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from stochpower.channel import joint_state_distribution
from stochpower.cli import main as cli_main
from stochpower.config import load_config
from stochpower.csvio import read_csv
from stochpower.game import stage_outcome
from stochpower.region import Hull
from stochpower.strategies import MyopicNashPolicy

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, default=ROOT / "configs" / "default.yaml")
    parser.add_argument("--out", type=Path, default=Path("out/region"))
    args = parser.parse_args(argv)

    code = cli_main(["region", "--config", str(args.config), "--out", str(args.out)])
    if code:
        return code
    cfg = load_config(args.config)
    _, _, rows = read_csv(args.out / "region_points.csv")
    points = {r[0]: np.array(r[1:], dtype=float) for r in rows}
    _, _, hull_rows = read_csv(args.out / "region_hull.csv")
    _, _, mm_rows = read_csv(args.out / "region_minmax.csv")
    minmax = np.array([r[1] for r in mm_rows])

    states, probs = joint_state_distribution(cfg.process)
    myopic = MyopicNashPolicy(cfg.game, cfg.process.mean_gain()).batch(states)
    points["myopic NE"] = probs @ stage_outcome(myopic, states, cfg.game).utility

    hull = Hull(np.array([r[1:] for r in hull_rows], dtype=float))
    print()
    for name, u in points.items():
        print(f"{name:>10s}  u=({u[0]:.6f}, {u[1]:.6f})  inside hull: {hull.contains(u)}")
    print(f"SMU dominates OP: {bool(np.all(points['SMU'] >= points['OP']))}")
    print(f"SMU dominates NE: {bool(np.all(points['SMU'] >= points['NE']))}")
    print(f"NE individually rational: {bool(np.all(points['NE'] >= minmax))}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
