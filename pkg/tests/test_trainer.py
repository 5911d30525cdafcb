import math

import numpy as np
import pytest
from scipy import ndimage

from cldice.metrics import combined_loss
from cldice.topology import betti_numbers
from cldice.trainer import (
    TrainConfig,
    TrainingDiverged,
    gen_synthetic_tubes,
    init_params,
    make_run_data,
    predict,
    run_ensemble,
    train_demo,
)

SMALL = dict(size=24, n_curves=2, radius_range=(1, 2), steps=20, eval_every=10, seeds=[0, 1])


def small_cfg(**kw):
    return TrainConfig(**{**SMALL, **kw})


# generator

def test_generator_deterministic():
    a, b = gen_synthetic_tubes(3), gen_synthetic_tubes(3)
    np.testing.assert_array_equal(a.image, b.image)
    np.testing.assert_array_equal(a.label, b.label)
    assert not np.array_equal(a.label, gen_synthetic_tubes(4).label)


def test_generator_noise_free_is_blur():
    s = gen_synthetic_tubes(5, noise_sigma=0.0, blur_sigma=1.0)
    ref = ndimage.gaussian_filter(s.label.astype(np.float64), 1.0, mode="constant")
    np.testing.assert_array_equal(s.image, np.clip(ref, 0.0, 1.0))


@pytest.mark.parametrize("seed", range(10))
def test_generator_matches_plan(seed):
    s = gen_synthetic_tubes(seed)
    assert betti_numbers(s.label).as_tuple() == (s.n_curves, 0, 0)
    assert s.image.min() >= 0.0 and s.image.max() <= 1.0


@pytest.mark.parametrize("seed", range(5))
def test_generator_has_neck(seed):
    label = gen_synthetic_tubes(seed).label
    band = label[: label.shape[0] // 3]
    heights = band.sum(axis=0)
    assert np.any(heights == 1)


@pytest.mark.parametrize("kw", [dict(radius_range=(0, 2)), dict(radius_range=(3, 2)),
                                dict(radius_range=(1, 9)), dict(n_curves=0),
                                dict(n_curves=10), dict(noise_sigma=-1.0)])
def test_generator_rejects_bad_ranges(kw):
    with pytest.raises(ValueError):
        gen_synthetic_tubes(0, **kw)


# config

def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(alpha=0.7)
    with pytest.raises(ValueError):
        TrainConfig(steps=0)
    with pytest.raises(ValueError):
        TrainConfig(kernel_size=4)
    assert TrainConfig().loss_params.k == TrainConfig().radius_range[1]
    assert TrainConfig(k=7).loss_params.k == 7


# training

def test_training_reproducible():
    cfg = small_cfg()
    a, b = run_ensemble(cfg), run_ensemble(cfg)
    for ra, rb in zip(a, b):
        assert ra.history == rb.history
        np.testing.assert_array_equal(ra.kernel, rb.kernel)
        assert ra.heldout == rb.heldout


def test_training_parallel_matches_serial():
    cfg = small_cfg(steps=5)
    serial, parallel = run_ensemble(cfg, jobs=1), run_ensemble(cfg, jobs=2)
    assert [r.history for r in serial] == [r.history for r in parallel]


def test_zero_learning_rate_constant():
    cfg = small_cfg(learning_rate=0.0, steps=6, eval_every=2)
    train, held = make_run_data(cfg, 0)
    res = train_demo(cfg, train, held)
    losses = {r.loss for r in res.history}
    assert len(losses) == 1
    assert len({(r.dice, r.cldice) for r in res.history if r.dice is not None}) == 1


def test_soft_dice_loss_decreases():
    cfg = small_cfg(alpha=0.0, steps=60, n_train=1)
    train, held = make_run_data(cfg, 0)
    res = train_demo(cfg, train, held)
    assert res.history[-1].loss < res.history[0].loss
    first = np.mean([r.loss for r in res.history[:10]])
    last = np.mean([r.loss for r in res.history[-10:]])
    assert last < first


@pytest.mark.parametrize("alpha", [0.0, 0.5])
def test_logged_loss_matches_recomputation(alpha):
    cfg = small_cfg(alpha=alpha, steps=4)
    train, held = make_run_data(cfg, 1)
    res = train_demo(cfg, train, held, seed=1)

    def recompute(kernel, bias):
        vals = [combined_loss(predict(kernel, bias, s.image), s.label.astype(float), cfg.loss_params)
                for s in train]
        return float(np.mean(vals))

    k0, b0 = init_params(cfg.kernel_size, 1)
    assert res.history[0].loss == pytest.approx(recompute(k0, b0), rel=1e-12)
    assert res.history[-1].loss == pytest.approx(recompute(res.kernel, res.bias), rel=1e-12)


def test_history_rows_and_report():
    cfg = small_cfg(steps=20, eval_every=10)
    train, held = make_run_data(cfg, 0)
    res = train_demo(cfg, train, held)
    assert [r.step for r in res.history] == list(range(21))
    evaluated = [r.step for r in res.history if r.dice is not None]
    assert evaluated == [0, 10, 20]
    assert 0.0 <= res.heldout.dice <= 1.0 and res.heldout.patch_count == 1


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_reports_step():
    cfg = small_cfg(learning_rate=math.inf, steps=5)
    train, held = make_run_data(cfg, 0)
    with pytest.raises(TrainingDiverged) as exc:
        train_demo(cfg, train, held)
    assert exc.value.step == 1


def test_empty_data_rejected():
    cfg = small_cfg()
    _, held = make_run_data(cfg, 0)
    with pytest.raises(ValueError):
        train_demo(cfg, [], held)
