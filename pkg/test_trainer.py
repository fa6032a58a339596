#!/usr/bin/env python3
"""Tests for the loss, LR schedule, optimizer and head training loop."""

import math
import sys

import numpy as np

from test_support import expect_error, run_tests, temp_dir

from dataset.samples import RatingSample
from dataset.synthetic import brightness_samples
from model.backbone import BackboneConfig, init_backbone
from model.regression_head import HeadGradients, HeadParams, init_head
from model.seeded_rng import SplitMix64, derive_seed
from model.weights_io import encode_blob
from preprocessing.image_processor import ImageConfig, ImageTensor
from preprocessing.text_processor import PromptConfig
from training import (
    EarlyStopping,
    FeatureExtractor,
    OptimizerState,
    RatingModel,
    TrainConfig,
    load_checkpoint,
    lr_at,
    mse_loss,
    optimizer_step,
    read_history,
    save_checkpoint,
    train,
    write_history,
)
from training.trainer import validate

TINY_IMAGE = ImageConfig(resolution=32, patch_size=16, shuffle_factor=2)


def _tiny_extractor(seed: int = 1) -> FeatureExtractor:
    backbone = init_backbone(BackboneConfig(d_model=16, seed=seed, visual_dim=TINY_IMAGE.token_dim))
    return FeatureExtractor(backbone, PromptConfig(), TINY_IMAGE, batch_size=8)


def _with_targets(samples, targets):
    return [
        RatingSample(sample_id=sample.sample_id, fields=sample.fields, image=sample.image, target=target)
        for sample, target in zip(samples, targets)
    ]


def test_mse_examples():
    assert mse_loss([3.0, 3.0], [3.0, 3.0]) == 0.0
    assert mse_loss([1.0], [5.0]) == 16.0
    assert mse_loss([2.0, 4.0], [3.0, 3.0]) == 1.0
    assert mse_loss([2.0, 4.0], [1.0, 2.0]) == 2.5
    assert mse_loss([5.0], [1.0]) == 16.0
    expect_error("length mismatch", mse_loss, [1.0, 2.0], [1.0])
    expect_error("empty input", mse_loss, [], [])


def test_lr_schedule_examples():
    cfg = TrainConfig()
    assert abs(lr_at(1, 100, cfg) - 4e-4 * 2 / 3) < 1e-12
    assert abs(lr_at(2, 100, cfg) - 4e-4) < 1e-12
    assert lr_at(100, 100, cfg) == 0.0
    assert abs(lr_at(50, 100, cfg) - 4e-4 * 50 / 97) < 1e-12
    rates = [lr_at(step, 100, cfg) for step in range(101)]
    assert min(rates) >= 0.0 and max(rates) <= 4e-4 + 1e-15
    expect_error("outside", lr_at, 101, 100, cfg)


def test_lr_schedule_single_step():
    cfg = TrainConfig()
    assert lr_at(0, 1, cfg) == cfg.peak_lr
    assert lr_at(1, 1, cfg) == 0.0


def _scalar_head() -> HeadParams:
    return HeadParams(W1=np.ones((2, 1)), b1=np.ones(1), W2=np.ones((1, 1)), b2=np.zeros(1))


def _gradients(b2: float = 0.0, fill: float = 0.0) -> HeadGradients:
    return HeadGradients(
        W1=np.full((2, 1), fill), b1=np.full(1, fill), W2=np.full((1, 1), fill), b2=np.array([b2]),
    )


def test_optimizer_first_step_size():
    params = _scalar_head()
    state = OptimizerState.zeros_like(params)
    optimizer_step(params, _gradients(b2=1.0), state, 1e-3, TrainConfig(weight_decay=0.0))
    assert abs(params.b2[0] + 1e-3) < 1e-10
    assert np.all(params.W1 == 1.0) and np.all(params.b1 == 1.0)


def test_optimizer_weight_decay_skips_biases():
    params = _scalar_head()
    state = OptimizerState.zeros_like(params)
    optimizer_step(params, _gradients(), state, 0.1, TrainConfig(weight_decay=0.01))
    assert np.allclose(params.W1, 0.999, atol=1e-15)
    assert np.allclose(params.W2, 0.999, atol=1e-15)
    assert np.all(params.b1 == 1.0) and np.all(params.b2 == 0.0)

    unchanged = _scalar_head()
    optimizer_step(unchanged, _gradients(), OptimizerState.zeros_like(unchanged), 0.1,
                   TrainConfig(weight_decay=0.0))
    assert np.all(unchanged.W1 == 1.0) and np.all(unchanged.b2 == 0.0)


def test_optimizer_rejects_non_finite_gradient():
    params = _scalar_head()
    state = OptimizerState.zeros_like(params)
    expect_error("diverged", optimizer_step, params, _gradients(b2=math.nan), state, 1e-3, TrainConfig())


def test_early_stopping_patience():
    stopper = EarlyStopping(patience=1)
    assert stopper.update(0.5, 1)
    assert not stopper.update(0.4, 2)
    assert stopper.should_stop and stopper.best_epoch == 1

    patient = EarlyStopping(patience=2)
    assert patient.update(0.5, 1)
    assert not patient.update(0.4, 2) and not patient.should_stop
    assert patient.update(0.6, 3) and patient.best_epoch == 3

    undefined = EarlyStopping(patience=1)
    assert undefined.update(math.nan, 1)
    assert undefined.update(-0.2, 2) and undefined.best_epoch == 2


def test_zero_loss_stops_after_first_epoch():
    samples = brightness_samples(30, seed=2)
    train_set = _with_targets(samples[:20], [3.0] * 20)
    val_set = _with_targets(samples[20:], [2.0, 4.0] * 5)
    extractor = _tiny_extractor()
    result = train(train_set, val_set, extractor, TrainConfig(max_epochs=5),
                   initial_head=init_head(16, zero=True))
    assert len(result.history) == 1
    assert result.history[0].train_mse == 0.0
    assert result.best_epoch == 1
    for array in result.params.arrays().values():
        assert not array.any()


def test_training_input_errors():
    samples = brightness_samples(12, seed=3)
    extractor = _tiny_extractor()
    constant_val = _with_targets(samples[8:], [3.0] * 4)
    expect_error("degenerate validation set", train, samples[:8], constant_val, extractor, TrainConfig())
    expect_error("nothing to train", train, samples[:8], samples[8:], extractor, TrainConfig(max_epochs=0))
    expect_error("empty training set", train, [], samples[8:], extractor, TrainConfig())
    expect_error("empty validation set", train, samples[:8], [], extractor, TrainConfig())


def test_training_is_deterministic_and_keeps_backbone_frozen():
    samples = brightness_samples(80, seed=4)
    cfg = TrainConfig(max_epochs=3, batch_size=16, patience=3, seed=derive_seed(4, "train"))
    first_extractor = _tiny_extractor(seed=5)
    before = encode_blob(first_extractor.backbone.weights, {})
    first = train(samples[:60], samples[60:], first_extractor, cfg)
    second = train(samples[:60], samples[60:], _tiny_extractor(seed=5), cfg)

    assert encode_blob(first_extractor.backbone.weights, {}) == before
    assert [record.as_row() for record in first.history] == [record.as_row() for record in second.history]
    for name, array in first.params.arrays().items():
        assert np.array_equal(array, second.params.arrays()[name]), name


def test_returned_params_belong_to_best_epoch():
    samples = brightness_samples(80, seed=6)
    extractor = _tiny_extractor(seed=7)
    result = train(samples[:60], samples[60:], extractor, TrainConfig(max_epochs=4, batch_size=16, patience=4))
    val_set = samples[60:]
    targets = np.array([sample.target for sample in val_set])
    _, val_plcc, _ = validate(result.params, extractor.pooled(val_set), targets, result.best_epoch)
    assert val_plcc == result.best_record.val_plcc
    plccs = [record.val_plcc for record in result.history]
    assert result.best_record.val_plcc == max(plccs)


def test_shared_id_does_not_share_features():
    dark, bright = brightness_samples(2, seed=12)
    dark = RatingSample(sample_id="X", fields=dark.fields,
                        image=ImageTensor(np.full((20, 20, 3), 0.1)), target=1.0)
    bright = RatingSample(sample_id="X", fields=bright.fields,
                          image=ImageTensor(np.full((20, 20, 3), 0.9)), target=5.0)
    shared = _tiny_extractor(seed=3)
    rows = shared.pooled([dark, bright])
    assert not np.array_equal(rows[0], rows[1])
    assert np.allclose(rows[0], _tiny_extractor(seed=3).pooled([dark])[0], atol=1e-12)
    assert np.allclose(rows[1], _tiny_extractor(seed=3).pooled([bright])[0], atol=1e-12)
    assert np.array_equal(shared.pooled([bright])[0], rows[1])


def test_checkpoint_and_history_files():
    params = init_head(6, SplitMix64(1))
    samples = brightness_samples(40, seed=8)
    result = train(samples[:30], samples[30:], _tiny_extractor(), TrainConfig(max_epochs=2, patience=2))
    with temp_dir() as directory:
        save_checkpoint(directory / "checkpoint.bin", params, {"config_hash": "abc", "epoch": 2})
        restored, meta = load_checkpoint(directory / "checkpoint.bin")
        write_history(directory / "history.csv", result.history, preamble="config_hash=abc seed=0")
        history = read_history(directory / "history.csv")
        first_line = (directory / "history.csv").read_text(encoding="utf-8").splitlines()[0]
    assert meta["config_hash"] == "abc" and meta["epoch"] == 2
    for name, array in params.arrays().items():
        assert np.array_equal(restored.arrays()[name], array)
    assert first_line == "# config_hash=abc seed=0"
    assert [record.as_row() for record in history] == [record.as_row() for record in result.history]


def test_head_learns_brightness_signal():
    samples = brightness_samples(2000, seed=11)
    train_set, val_set = samples[:1800], samples[1800:]
    backbone = init_backbone(BackboneConfig(seed=derive_seed(0, "backbone")))
    extractor = FeatureExtractor(backbone, PromptConfig(), ImageConfig(), batch_size=32)
    result = train(train_set, val_set, extractor, TrainConfig(seed=derive_seed(0, "train")))
    best = result.best_record
    assert best.val_plcc >= 0.9, f"val_plcc={best.val_plcc}"
    assert best.val_rmse <= 0.35, f"val_rmse={best.val_rmse}"
    predictions = RatingModel(extractor, result.params).predict(val_set)
    assert np.all((predictions > 1.0) & (predictions < 5.0))


if __name__ == "__main__":
    sys.exit(run_tests(dict(globals()), "Testing head training"))
