"""Time the soft skeleton against k and against voxel count; fit log-log slopes."""
import argparse
import time

import numpy as np

from cldice.morphology import soft_skeleton


def best_time(fn, reps):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def sweep(xs, timings, label):
    slope = np.polyfit(np.log(xs), np.log(timings), 1)[0]
    for x, t in zip(xs, timings):
        print(f"  {label}={x:<8} {t * 1e3:9.2f} ms")
    print(f"  exponent {slope:.2f}")
    return slope


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ks", type=int, nargs="+", default=[8, 16, 32, 64])
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256, 512])
    ap.add_argument("--base-size", type=int, default=128)
    ap.add_argument("--base-k", type=int, default=5)
    ap.add_argument("--ndim", type=int, choices=(2, 3), default=2)
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)

    field = rng.random((args.base_size,) * args.ndim)
    print(f"k sweep on {field.shape}")
    sweep(args.ks, [best_time(lambda: soft_skeleton(field, k), args.reps) for k in args.ks], "k")

    fields = [rng.random((s,) * args.ndim) for s in args.sizes]
    print(f"voxel sweep at k={args.base_k}")
    sweep([f.size for f in fields],
          [best_time(lambda: soft_skeleton(f, args.base_k), args.reps) for f in fields], "voxels")


if __name__ == "__main__":
    main()
