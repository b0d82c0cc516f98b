#!/usr/bin/env python3
"""Parameter sensitivity table on a generated dataset.

Generates a dataset once, then runs ``vpcalib sweep`` over each parameter
block and prints the rows.

    python scripts/sweep.py --n 30 --noise 1.0 --outliers 0.3
"""

import argparse
import tempfile
from pathlib import Path

from vpcalib.cli import main as cli

# (grid, extra flags); delta_s only changes the hypothesis labels c, never the output
BLOCKS = [
    (["k=1,4,8,16"], []),
    (["delta_c=0.3,0.5,0.7"], []),
    (["delta_s=0.3,0.5,0.7"], ["--mode", "oracle"]),
    (["delta_z=1.0,2.0,5.0"], []),
    # about 20 lines per scene pass the steepness filter
    (["n_lines=8,12,256"], []),
]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--seed", type=int, default=5)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--outliers", type=float, default=0.3)
    p.add_argument("--images", action="store_true", help="also sweep density_min on detected segments")
    args = p.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        data = Path(tmp) / "data"
        cli(["synth", "--out", str(data), "--n", str(args.n), "--seed", str(args.seed),
             "--noise-px", str(args.noise), "--outlier-frac", str(args.outliers)] + ([] if args.images else ["--no-image"]))
        blocks = BLOCKS + ([(["density_min=0.6,0.7,0.8"], ["--source", "image"])] if args.images else [])
        for grid, extra in blocks:
            argv = ["sweep", "--data", str(data)] + extra
            for g in grid:
                argv += ["--grid", g]
            cli(argv)


if __name__ == "__main__":
    main()
