"""Command-line interface.

Exit codes: 0 success, 2 validation error, 3 IO error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import datetime
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .grid import threshold
from .volio import VolumeFormatError, load_volume, save_volume

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


class CLIError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load(path) -> np.ndarray:
    try:
        return load_volume(path)
    except VolumeFormatError as e:
        raise CLIError(f"{path}: {e.code}: {e}", EXIT_IO) from e
    except OSError as e:
        raise CLIError(f"{path}: {e.strerror or e}", EXIT_IO) from e


def _load_mask(path, t: float) -> np.ndarray:
    vol = _load(path)
    return vol if vol.dtype == bool else threshold(vol, t)


def _load_pair(pred, label, t):
    p, l = _load_mask(pred, t), _load_mask(label, t)
    if p.shape != l.shape:
        raise CLIError(f"dimension mismatch: {p.shape} vs {l.shape}", EXIT_VALIDATION)
    return p, l


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serializable: {type(o)}")


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default, allow_nan=False) + "\n"
    if out:
        try:
            Path(out).write_text(text)
        except OSError as e:
            raise CLIError(f"{out}: {e.strerror or e}", EXIT_IO) from e
    else:
        sys.stdout.write(text)


def _provenance(args, inputs: dict, params: dict) -> dict:
    prov = {"tool": "cldice", "version": __version__, "inputs": inputs, "params": params}
    if not getattr(args, "deterministic", False):
        prov["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return prov


def cmd_evaluate(args) -> int:
    from .metrics import patch_evaluate

    p, l = _load_pair(args.pred, args.label, args.threshold)
    report = patch_evaluate(
        p, l,
        patch_size=args.patch_size,
        n_patches=args.n_patches,
        seed=args.seed,
        with_smd=args.with_smd,
        with_background=args.with_background,
        smd_points=args.smd_points,
        jobs=args.jobs,
    )
    metrics = report.as_dict()
    if not all(v is None or math.isfinite(v) for v in metrics.values()):
        raise CLIError("report contains non-finite values", EXIT_NUMERIC)
    params = {k: getattr(args, k) for k in
              ("threshold", "patch_size", "n_patches", "seed", "with_smd", "with_background",
               "smd_points")}
    _emit({"metrics": metrics,
           "provenance": _provenance(args, {"pred": args.pred, "label": args.label}, params)},
          args.out)
    return EXIT_OK


def cmd_skeletonize(args) -> int:
    from .morphology import inscribed_radius, soft_skeleton, thin_skeletonize

    vol = _load(args.input)
    if args.mode == "thin":
        out = thin_skeletonize(vol if vol.dtype == bool else threshold(vol, args.threshold))
    else:
        field = vol.astype(np.float64)
        k = args.k if args.k is not None else max(1, inscribed_radius(field >= 0.5))
        out = np.clip(np.asarray(soft_skeleton(field, k)), 0.0, 1.0)
        if vol.dtype == bool:
            out = out > 0.5
    try:
        save_volume(args.output, out)
    except OSError as e:
        raise CLIError(f"{args.output}: {e.strerror or e}", EXIT_IO) from e
    return EXIT_OK


def cmd_betti(args) -> int:
    from .topology import betti_numbers, euler_characteristic

    m = _load_mask(args.input, args.threshold)
    out = betti_numbers(m).as_dict()
    if args.euler:
        out["euler"] = euler_characteristic(m)
    _emit(out, args.out)
    return EXIT_OK


def cmd_certify(args) -> int:
    from .topology import homotopy_certificate

    p, l = _load_pair(args.pred, args.label, args.threshold)
    _emit(homotopy_certificate(p, l).as_dict(), args.out)
    return EXIT_OK


def cmd_smd(args) -> int:
    from .graphmetrics import skeleton_to_graph, streetmover_distance
    from .morphology import thin_skeletonize

    p, l = _load_pair(args.pred, args.label, args.threshold)
    res = streetmover_distance(skeleton_to_graph(thin_skeletonize(p)),
                               skeleton_to_graph(thin_skeletonize(l)), args.n, args.seed)
    mean = None if math.isnan(res.mean_distance) else res.mean_distance
    _emit({"smd": res.value, "mean_distance": mean, "degenerate": res.degenerate,
           "n": args.n, "seed": args.seed}, args.out)
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    from .autodiff import grad_check
    from .metrics import LossParams, combined_loss

    rng = np.random.default_rng(args.seed)
    x = rng.uniform(0.05, 0.95, (args.size, args.size))
    label = np.zeros((args.size, args.size))
    mid = args.size // 2
    label[mid - 1:mid + 2, 1:-1] = 1.0
    label[1:-1, mid] = 1.0
    params = LossParams(args.alpha, args.k)
    rep = grad_check(lambda v: combined_loss(v, label, params), x, h=args.h, tol=args.tol)
    _emit({"max_rel_err": rep.max_rel_err, "n_checked": rep.n_checked,
           "n_excluded_ties": rep.n_excluded_ties, "tol": args.tol,
           "passed": rep.passed(args.tol),
           "worst": [{"coord": list(c), "rel_err": r, "analytic": a, "numeric": n}
                     for c, r, a, n in rep.worst]}, args.out)
    return EXIT_OK if rep.passed(args.tol) else EXIT_NUMERIC


def cmd_train_demo(args) -> int:
    from .trainer import TrainConfig, TrainingDiverged, run_ensemble

    cfg_dict = {}
    if args.config:
        try:
            cfg_dict = json.loads(Path(args.config).read_text())
        except OSError as e:
            raise CLIError(f"{args.config}: {e.strerror or e}", EXIT_IO) from e
        except json.JSONDecodeError as e:
            raise CLIError(f"{args.config}: invalid JSON: {e}", EXIT_VALIDATION) from e
    try:
        cfg = TrainConfig(**cfg_dict)
    except TypeError as e:
        raise CLIError(f"invalid config: {e}", EXIT_VALIDATION) from e
    try:
        results = run_ensemble(cfg, jobs=args.jobs)
    except TrainingDiverged as e:
        raise CLIError(str(e), EXIT_NUMERIC) from e
    fields = ["seed", "step", "loss", "dice", "cldice", "b0err", "b1err"]
    stream = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(fields)
        for seed, res in zip(cfg.seeds, results):
            for row in res.history:
                vals = [seed, row.step, repr(row.loss)] + [
                    "" if v is None else repr(v) for v in (row.dice, row.cldice, row.b0err, row.b1err)
                ]
                w.writerow(vals)
    finally:
        if args.out:
            stream.close()
    if args.summary:
        _emit({"config": cfg.as_dict(),
               "heldout": [dict(seed=s, **r.heldout.as_dict()) for s, r in zip(cfg.seeds, results)]},
              args.summary)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cldice", description="clDice metrics, skeletons and topology checks")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    e = sub.add_parser("evaluate", help="score a prediction against a label")
    e.add_argument("pred")
    e.add_argument("label")
    e.add_argument("--threshold", type=float, default=0.5)
    e.add_argument("--patch-size", type=int, default=None)
    e.add_argument("--n-patches", type=int, default=1)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--with-smd", action="store_true")
    e.add_argument("--smd-points", type=int, default=100)
    e.add_argument("--with-background", action="store_true")
    e.add_argument("--deterministic", action="store_true", help="omit the timestamp")
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("skeletonize", help="soft or thinning skeleton of a volume")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--mode", choices=("soft", "thin"), default="thin")
    s.add_argument("--k", type=int, default=None)
    s.add_argument("--threshold", type=float, default=0.5)
    s.set_defaults(func=cmd_skeletonize)

    b = sub.add_parser("betti", help="Betti numbers of a mask")
    b.add_argument("input")
    b.add_argument("--threshold", type=float, default=0.5)
    b.add_argument("--euler", action="store_true")
    b.add_argument("--out")
    b.set_defaults(func=cmd_betti)

    c = sub.add_parser("certify", help="skeleton-inclusion homotopy certificate")
    c.add_argument("pred")
    c.add_argument("label")
    c.add_argument("--threshold", type=float, default=0.5)
    c.add_argument("--out")
    c.set_defaults(func=cmd_certify)

    m = sub.add_parser("smd", help="StreetMover distance between skeleton graphs")
    m.add_argument("pred")
    m.add_argument("label")
    m.add_argument("--n", type=int, default=100)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--threshold", type=float, default=0.5)
    m.add_argument("--out")
    m.set_defaults(func=cmd_smd)

    g = sub.add_parser("gradcheck", help="finite-difference check of the combined loss")
    g.add_argument("--k", type=int, default=3)
    g.add_argument("--alpha", type=float, default=0.5)
    g.add_argument("--size", type=int, default=10)
    g.add_argument("--tol", type=float, default=1e-4)
    g.add_argument("--h", type=float, default=1e-5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gradcheck)

    t = sub.add_parser("train-demo", help="soft-Dice vs combined-loss training demo")
    t.add_argument("--config")
    t.add_argument("--out", help="history CSV (default stdout)")
    t.add_argument("--summary", help="held-out metrics JSON")
    t.add_argument("--jobs", type=int, default=1)
    t.set_defaults(func=cmd_train_demo)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CLIError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except (ValueError, IndexError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (FloatingPointError, ArithmeticError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
