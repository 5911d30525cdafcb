"""Overlap, skeleton and topology scores, the soft losses and patch evaluation."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .autodiff import Var
from .grid import binary_mask, check_same_shape, scalar_field
from .morphology import inscribed_radius, soft_skeleton, soft_skeleton_mask, thin_skeletonize
from .topology import betti_numbers, euler_characteristic

DEFAULT_EPSILON = 1e-6


@dataclass(frozen=True)
class LossParams:
    """alpha weights soft-clDice in the combined loss; k=None picks k per label."""

    alpha: float = 0.5
    k: int | None = None
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 0.5:
            raise ValueError(f"alpha must lie in [0, 0.5], got {self.alpha}")
        if self.k is not None and self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


def _shape(x):
    return x.shape if isinstance(x, Var) else np.shape(x)


def _check_soft_pair(p, l):
    if _shape(p) != _shape(l):
        raise ValueError(f"shape mismatch: {_shape(p)} vs {_shape(l)}")
    out = []
    for x in (p, l):
        out.append(x if isinstance(x, Var) else scalar_field(x))
    return out


def _as_float(x):
    return x if isinstance(x, Var) else float(x)


def soft_dice(p, l, epsilon: float = DEFAULT_EPSILON):
    """(2 sum(p*l) + eps) / (sum(p) + sum(l) + eps)."""
    p, l = _check_soft_pair(p, l)
    return _as_float((2.0 * (p * l).sum() + epsilon) / (p.sum() + l.sum() + epsilon))


def _resolve_k(l, k):
    if k is not None:
        return k
    lv = l.value if isinstance(l, Var) else l
    return max(1, inscribed_radius(np.asarray(lv) >= 0.5))


def soft_cl_dice(p, l, params: LossParams = LossParams()):
    """Soft-clDice from soft skeletons of prediction and label.

    Works on arrays and on autodiff Vars (either argument).
    """
    p, l = _check_soft_pair(p, l)
    k = _resolve_k(l, params.k)
    eps = params.epsilon
    s_p = soft_skeleton(p, k)
    s_l = soft_skeleton(l, k)
    tprec = ((s_p * l).sum() + eps) / (s_p.sum() + eps)
    tsens = ((s_l * p).sum() + eps) / (s_l.sum() + eps)
    return _as_float(2.0 * tprec * tsens / (tprec + tsens))


def combined_loss(p, l, params: LossParams = LossParams()):
    """(1 - alpha)(1 - softDice) + alpha (1 - softclDice)."""
    dice_term = 1.0 - soft_dice(p, l, params.epsilon)
    if params.alpha == 0:
        return dice_term
    cl_term = 1.0 - soft_cl_dice(p, l, params)
    return (1.0 - params.alpha) * dice_term + params.alpha * cl_term


def dice_hard(p, l) -> float:
    p, l = binary_mask(p), binary_mask(l)
    check_same_shape(p, l)
    denom = int(p.sum()) + int(l.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int(np.count_nonzero(p & l)) / denom


def accuracy(p, l) -> float:
    p, l = binary_mask(p), binary_mask(l)
    check_same_shape(p, l)
    return float(np.count_nonzero(p == l)) / p.size


class TopoFraction(NamedTuple):
    value: float
    empty_skeleton: bool


def _skeleton_fraction(skel, mask) -> TopoFraction:
    s, v = binary_mask(skel), binary_mask(mask)
    check_same_shape(s, v)
    n = int(s.sum())
    if n == 0:
        return TopoFraction(0.0, True)
    return TopoFraction(int(np.count_nonzero(s & v)) / n, False)


def tprec(pred_skel, label) -> TopoFraction:
    """Fraction of the predicted skeleton inside the label (0 if skeleton empty)."""
    return _skeleton_fraction(pred_skel, label)


def tsens(label_skel, pred) -> TopoFraction:
    """Fraction of the label skeleton inside the prediction (0 if skeleton empty)."""
    return _skeleton_fraction(label_skel, pred)


def _skeletonize(m, method: str, k: int | None):
    if method == "thin":
        return thin_skeletonize(m)
    if method == "soft":
        return soft_skeleton_mask(m, k)
    raise ValueError(f"unknown skeleton method {method!r}")


def _harmonic(a: float, b: float) -> float:
    return 0.0 if a + b == 0 else 2.0 * a * b / (a + b)


def cl_dice(pred, label, skeleton: str = "thin", k: int | None = None) -> float:
    """Hard clDice of two binary masks; both empty scores 1."""
    p, l = binary_mask(pred), binary_mask(label)
    check_same_shape(p, l)
    if not p.any() and not l.any():
        return 1.0
    tp = tprec(_skeletonize(p, skeleton, k), l).value
    ts = tsens(_skeletonize(l, skeleton, k), p).value
    return _harmonic(tp, ts)


def cl_dice_background(pred, label) -> float:
    """clDice of the background phases, scored in the one-voxel padded grid."""
    from .topology import background_skeleton

    p, l = binary_mask(pred), binary_mask(label)
    check_same_shape(p, l)
    p_bg = np.pad(~p, 1, constant_values=True)
    l_bg = np.pad(~l, 1, constant_values=True)
    tp = tprec(background_skeleton(p), l_bg).value
    ts = tsens(background_skeleton(l), p_bg).value
    return _harmonic(tp, ts)


def betti_errors(p, l) -> tuple[int, int, int]:
    p, l = binary_mask(p), binary_mask(l)
    check_same_shape(p, l)
    bp, bl = betti_numbers(p), betti_numbers(l)
    return tuple(abs(a - b) for a, b in zip(bp.as_tuple(), bl.as_tuple()))


def euler_error(p, l) -> int:
    p, l = binary_mask(p), binary_mask(l)
    check_same_shape(p, l)
    return abs(euler_characteristic(p) - euler_characteristic(l))


def euler_ratio(p, l) -> float | None:
    """chi(p) / chi(l), or None when chi(l) == 0."""
    chi_l = euler_characteristic(l)
    return None if chi_l == 0 else euler_characteristic(p) / chi_l


@dataclass
class MetricReport:
    dice: float
    accuracy: float
    cldice: float
    betti0_err: float
    betti1_err: float
    betti2_err: float
    euler_err: float
    patch_count: int
    euler_ratio: float | None = None
    smd: float | None = None
    cldice_background: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def patch_origins(shape: Sequence[int], patch: Sequence[int], n_patches: int, seed: int):
    """Seeded list of patch corner coordinates, generated up front."""
    rng = np.random.default_rng(seed)
    highs = [s - p for s, p in zip(shape, patch)]
    return [tuple(int(rng.integers(0, h + 1)) for h in highs) for _ in range(n_patches)]


def _patch_scores(p, l, with_smd: bool, smd_points: int, seed: int):
    be = betti_errors(p, l)
    out = {"b": be, "chi": euler_error(p, l), "ratio": euler_ratio(p, l), "smd": None}
    if with_smd:
        from .graphmetrics import skeleton_to_graph, streetmover_distance

        gp = skeleton_to_graph(thin_skeletonize(p))
        gl = skeleton_to_graph(thin_skeletonize(l))
        out["smd"] = streetmover_distance(gp, gl, smd_points, seed).value
    return out


def _patch_job(args):
    return _patch_scores(*args)


def patch_evaluate(
    pred,
    label,
    patch_size: int | Sequence[int] | None = None,
    n_patches: int = 1,
    seed: int = 0,
    with_smd: bool = False,
    with_background: bool = False,
    smd_points: int = 100,
    jobs: int = 1,
) -> MetricReport:
    """Global overlap scores plus topology/graph scores averaged over patches.

    `patch_size=None` uses the whole volume as the only patch.
    """
    p, l = binary_mask(pred), binary_mask(label)
    check_same_shape(p, l)
    if patch_size is None:
        patch = p.shape
        n_patches = 1
    elif isinstance(patch_size, int):
        patch = (patch_size,) * p.ndim
    else:
        patch = tuple(int(s) for s in patch_size)
    if len(patch) != p.ndim or any(s < 1 or s > n for s, n in zip(patch, p.shape)):
        raise ValueError(f"patch {patch} does not fit volume {p.shape}")
    if n_patches < 1:
        raise ValueError("n_patches must be >= 1")
    origins = patch_origins(p.shape, patch, n_patches, seed)
    jobs_args = []
    for i, o in enumerate(origins):
        sl = tuple(slice(a, a + s) for a, s in zip(o, patch))
        jobs_args.append((p[sl], l[sl], with_smd, smd_points, seed + i))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            scores = list(ex.map(_patch_job, jobs_args))
    else:
        scores = [_patch_job(a) for a in jobs_args]
    b = np.array([s["b"] for s in scores], dtype=np.float64)
    ratios = [s["ratio"] for s in scores if s["ratio"] is not None]
    return MetricReport(
        dice=dice_hard(p, l),
        accuracy=accuracy(p, l),
        cldice=cl_dice(p, l),
        betti0_err=float(b[:, 0].mean()),
        betti1_err=float(b[:, 1].mean()),
        betti2_err=float(b[:, 2].mean()),
        euler_err=float(np.mean([s["chi"] for s in scores])),
        patch_count=len(scores),
        euler_ratio=float(np.mean(ratios)) if ratios else None,
        smd=float(np.mean([s["smd"] for s in scores])) if with_smd else None,
        cldice_background=cl_dice_background(p, l) if with_background else None,
    )


def is_finite_report(r: MetricReport) -> bool:
    return all(v is None or math.isfinite(v) for v in asdict(r).values())
