"""Desk-scale training demo: synthetic fragile tubes and a one-layer predictor.

Each curve lives in its own horizontal band and is drawn column by column as a
vertical run of 2r+1 pixels around a smooth centerline, so every curve is one
simply connected component.  Every sample carries at least one neck where a
curve narrows to a single pixel; blurring makes necks faint, which is what
makes their connectivity fragile.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage

from .autodiff import Tape, conv2d, sigmoid
from .metrics import (
    LossParams,
    MetricReport,
    betti_errors,
    cl_dice,
    combined_loss,
    patch_evaluate,
    dice_hard,
)
from .grid import threshold


@dataclass
class SyntheticSample:
    image: np.ndarray
    label: np.ndarray
    seed: int
    n_curves: int = 0


def _tube_plan(rng, size, n_curves, radius_range, neck_prob):
    band = size / n_curves
    lo_r, hi_r = radius_range
    curves = []
    for c in range(n_curves):
        r = int(rng.integers(lo_r, hi_r + 1))
        margin = hi_r + 2
        centre = band * (c + 0.5)
        amp_max = max(0.0, band / 2 - r - 1.5)
        amp = rng.uniform(0.3, 1.0) * amp_max
        period = rng.uniform(0.6, 1.5) * size
        # slope of the centerline stays below 1 so consecutive columns touch
        amp = min(amp, 0.9 * period / (2 * math.pi))
        phase = rng.uniform(0, 2 * math.pi)
        x0 = int(rng.integers(1, max(2, size // 8)))
        x1 = size - 1 - int(rng.integers(1, max(2, size // 8)))
        neck = None
        if c == 0 or rng.random() < neck_prob:
            length = int(rng.integers(3, max(4, size // 6)))
            start = int(rng.integers(x0 + 2, max(x0 + 3, x1 - length - 2)))
            neck = (start, start + length)
        curves.append(dict(r=r, centre=centre, amp=amp, period=period, phase=phase,
                           x0=x0, x1=x1, neck=neck, margin=margin))
    return curves


def render_tubes(size: int, curves) -> np.ndarray:
    label = np.zeros((size, size), dtype=bool)
    for cv in curves:
        for x in range(cv["x0"], cv["x1"] + 1):
            yc = cv["centre"] + cv["amp"] * math.sin(2 * math.pi * x / cv["period"] + cv["phase"])
            yc = int(round(yc))
            r = cv["r"]
            if cv["neck"] is not None and cv["neck"][0] <= x < cv["neck"][1]:
                r = 0
            label[max(0, yc - r):min(size, yc + r + 1), x] = True
    return label


def gen_synthetic_tubes(
    seed: int,
    size: int = 48,
    n_curves: int = 3,
    radius_range: tuple[int, int] = (1, 3),
    noise_sigma: float = 0.1,
    blur_sigma: float = 1.0,
    neck_prob: float = 0.5,
) -> SyntheticSample:
    """Noisy image of `n_curves` disjoint tubes and the matching label."""
    lo, hi = radius_range
    if not (1 <= lo <= hi <= size / 8):
        raise ValueError(f"radius_range must satisfy 1 <= lo <= hi <= size/8, got {radius_range}")
    if n_curves < 1 or size / n_curves < 2 * hi + 4:
        raise ValueError(f"{n_curves} curves of radius {hi} do not fit in {size} rows")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    rng = np.random.default_rng(seed)
    curves = _tube_plan(rng, size, n_curves, radius_range, neck_prob)
    label = render_tubes(size, curves)
    image = ndimage.gaussian_filter(label.astype(np.float64), blur_sigma, mode="constant")
    if noise_sigma > 0:
        image = image + rng.normal(0.0, noise_sigma, image.shape)
    return SyntheticSample(np.clip(image, 0.0, 1.0), label, seed, n_curves)


@dataclass
class TrainConfig:
    alpha: float = 0.5
    k: int | None = None
    epsilon: float = 1e-6
    steps: int = 300
    learning_rate: float = 5.0
    seeds: list[int] = field(default_factory=lambda: list(range(8)))
    kernel_size: int = 5
    size: int = 48
    n_curves: int = 3
    radius_range: tuple[int, int] = (1, 3)
    noise_sigma: float = 0.1
    n_train: int = 2
    eval_every: int = 50

    def __post_init__(self):
        self.radius_range = tuple(self.radius_range)
        LossParams(self.alpha, self.k, self.epsilon)
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd")

    @property
    def loss_params(self) -> LossParams:
        k = self.radius_range[1] if self.k is None else self.k
        return LossParams(self.alpha, k, self.epsilon)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["radius_range"] = list(self.radius_range)
        return d


class TrainingDiverged(RuntimeError):
    def __init__(self, step: int, value: float):
        super().__init__(f"loss became non-finite ({value}) at step {step}")
        self.step = step


@dataclass
class HistoryRow:
    step: int
    loss: float
    dice: float | None = None
    cldice: float | None = None
    b0err: float | None = None
    b1err: float | None = None


@dataclass
class TrainResult:
    history: list[HistoryRow]
    kernel: np.ndarray
    bias: float
    heldout: MetricReport


def init_params(kernel_size: int, seed: int) -> tuple[np.ndarray, float]:
    rng = np.random.default_rng(seed)
    kernel = rng.normal(0.0, 0.05, (kernel_size, kernel_size))
    return kernel, 0.0


def predict(kernel, bias, image):
    """sigmoid(conv(image) + bias); arguments may be arrays or Vars."""
    return sigmoid(conv2d(image, kernel) + bias)


def _scores(pred: np.ndarray, label: np.ndarray) -> tuple[float, float, int, int]:
    m = threshold(pred, 0.5)
    be = betti_errors(m, label)
    return dice_hard(m, label), cl_dice(m, label), be[0], be[1]


def train_demo(cfg: TrainConfig, data: list[SyntheticSample], heldout: SyntheticSample,
               seed: int = 0) -> TrainResult:
    """Plain gradient descent on the combined loss, averaged over `data`."""
    if not data:
        raise ValueError("training data must not be empty")
    params = cfg.loss_params
    kernel, bias = init_params(cfg.kernel_size, seed)
    history = []
    for step in range(cfg.steps + 1):
        tape = Tape()
        w = tape.leaf(kernel)
        b = tape.leaf(bias)
        total = 0.0
        preds = []
        for s in data:
            pred = predict(w, b, s.image)
            preds.append(pred.value)
            total = total + combined_loss(pred, s.label.astype(np.float64), params)
        loss = total / len(data)
        value = float(loss.value)
        if not math.isfinite(value):
            raise TrainingDiverged(step, value)
        row = HistoryRow(step, value)
        if cfg.eval_every and (step % cfg.eval_every == 0 or step == cfg.steps):
            d, c, e0, e1 = _scores(preds[0], data[0].label)
            row.dice, row.cldice, row.b0err, row.b1err = d, c, e0, e1
        history.append(row)
        if step == cfg.steps:
            break
        gw, gb = tape.backward(loss)
        kernel = kernel - cfg.learning_rate * gw
        bias = bias - cfg.learning_rate * float(gb)
    final = predict(kernel, bias, heldout.image)
    report = patch_evaluate(threshold(final, 0.5), heldout.label)
    return TrainResult(history, kernel, float(bias), report)


def make_run_data(cfg: TrainConfig, seed: int) -> tuple[list[SyntheticSample], SyntheticSample]:
    gen = dict(size=cfg.size, n_curves=cfg.n_curves, radius_range=cfg.radius_range,
               noise_sigma=cfg.noise_sigma)
    train = [gen_synthetic_tubes(1000 * seed + i, **gen) for i in range(cfg.n_train)]
    held = gen_synthetic_tubes(1000 * seed + 999, **gen)
    return train, held


def _run_seed(args) -> TrainResult:
    cfg, seed = args
    train, held = make_run_data(cfg, seed)
    return train_demo(cfg, train, held, seed)


def run_ensemble(cfg: TrainConfig, jobs: int = 1) -> list[TrainResult]:
    """One independent training run per seed in `cfg.seeds`."""
    args = [(cfg, s) for s in cfg.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_run_seed, args))
    return [_run_seed(a) for a in args]


def compare_alphas(cfg: TrainConfig, alphas=(0.0, 0.5), jobs: int = 1) -> dict[float, list[TrainResult]]:
    out = {}
    for a in alphas:
        run_cfg = TrainConfig(**{**cfg.as_dict(), "alpha": a})
        out[a] = run_ensemble(run_cfg, jobs)
    return out
