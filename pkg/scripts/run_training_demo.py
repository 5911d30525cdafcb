"""Train the one-layer predictor with soft-Dice (alpha=0) and the combined loss.

Prints mean held-out scores per alpha and, with --out, writes one CSV row per
(alpha, seed).
"""
import argparse
import csv
import json
import time

import numpy as np

from cldice.trainer import TrainConfig, compare_alphas

FIELDS = ["dice", "cldice", "betti0_err", "betti1_err", "euler_err"]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=8)
    ap.add_argument("--steps", type=int, default=None)
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.0, 0.5])
    ap.add_argument("--config", help="JSON overrides for TrainConfig")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    overrides = json.loads(open(args.config).read()) if args.config else {}
    overrides["seeds"] = list(range(args.seeds))
    if args.steps is not None:
        overrides["steps"] = args.steps
    cfg = TrainConfig(**overrides)

    t0 = time.perf_counter()
    runs = compare_alphas(cfg, tuple(args.alphas), jobs=args.jobs)
    print(f"{len(cfg.seeds)} seeds, {cfg.steps} steps, {time.perf_counter() - t0:.0f}s")
    print("alpha  " + "  ".join(f"{f:>10}" for f in FIELDS))
    for alpha, results in runs.items():
        means = [np.mean([getattr(r.heldout, f) for r in results]) for f in FIELDS]
        print(f"{alpha:<5}  " + "  ".join(f"{m:>10.4f}" for m in means))

    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha", "seed"] + FIELDS)
            for alpha, results in runs.items():
                for seed, r in zip(cfg.seeds, results):
                    w.writerow([alpha, seed] + [getattr(r.heldout, f) for f in FIELDS])


if __name__ == "__main__":
    main()
