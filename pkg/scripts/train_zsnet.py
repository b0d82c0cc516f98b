#!/usr/bin/env python3
"""Train the toy zenith scorer and compare it with the consensus fallback.

    python scripts/train_zsnet.py --out zsnet.json
"""

import argparse

from vpcalib.evaluation import synthetic_records
from vpcalib.metrics import summarize
from vpcalib.pipeline import PipelineConfig
from vpcalib.synth import SynthConfig
from vpcalib.zsnet_lite import TrainConfig, accuracy, init_params, make_zenith_batches, save_params, train


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="zsnet.json")
    p.add_argument("--seed", type=int, default=10)
    p.add_argument("--n-train", type=int, default=200)
    p.add_argument("--n-test", type=int, default=100)
    p.add_argument("--compare", type=int, default=100, help="scenes for the scorer swap (0 to skip)")
    args = p.parse_args()

    params, hist = train(init_params(args.seed), make_zenith_batches(args.n_train, args.seed), TrainConfig(seed=args.seed))
    save_params(params, args.out)
    for epoch, (c, l) in enumerate(zip(hist.l_cls, hist.l_loc)):
        print(f"epoch {epoch:2d}  L_cls {c:.4f}  L_loc {l:.4f}")
    print(f"L_cls ratio {hist.l_cls[-1] / hist.l_cls[0]:.3f}")
    print(f"held-out accuracy {accuracy(params, make_zenith_batches(args.n_test, args.seed + 1)):.3f}")
    if args.compare:
        for name, zs in (("fallback", None), ("trained", params)):
            recs, _ = synthetic_records(args.compare, 1, SynthConfig(), PipelineConfig(), zsnet_params=zs)
            print(f"{name:8s} mean angle error {summarize(recs).mean['angle']:.3f} deg")


if __name__ == "__main__":
    main()
