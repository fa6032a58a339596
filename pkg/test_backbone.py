#!/usr/bin/env python3
"""Tests for the seeded random stream and the frozen toy backbone."""

import sys

import numpy as np

from test_support import expect_error, run_tests, temp_dir

from model.backbone import BackboneConfig, ToyBackbone, init_backbone
from model.seeded_rng import SplitMix64, derive_seed
from model.weights_io import encode_blob
from preprocessing.image_processor import VisualTokens
from preprocessing.text_processor import BatchedTokens, TokenSequence, pad_batch

SMALL = dict(d_model=4, visual_dim=6)


def test_splitmix_reference_outputs():
    assert SplitMix64(0).next_uint64(2).tolist() == [16294208416658607535, 7960286522194355700]
    assert SplitMix64(7).next_uint64(3).tolist() == [
        7191089600892374487, 309689372594955804, 16616101746815609346,
    ]


def test_splitmix_split_draws_match_single_draw():
    whole = SplitMix64(42).random(10)
    rng = SplitMix64(42)
    parts = np.concatenate([rng.random(3), rng.random(0), rng.random(7)])
    assert np.array_equal(whole, parts)
    assert whole.min() >= 0.0 and whole.max() < 1.0


def test_permutation_reference():
    assert SplitMix64(7).permutation(5).tolist() == [3, 4, 2, 0, 1]
    assert SplitMix64(7).permutation(1).tolist() == [0]
    order = SplitMix64(3).permutation(1000)
    assert sorted(order.tolist()) == list(range(1000))


def test_derive_seed():
    assert derive_seed(7, "backbone") == 6569604945104130061
    assert derive_seed(7, "backbone") != derive_seed(7, "split")
    assert SplitMix64(7).spawn("backbone").seed == derive_seed(7, "backbone")


def test_init_backbone_reference_weights():
    backbone = init_backbone(BackboneConfig(seed=7, **SMALL))
    expected = {
        "visual_proj": [-0.0899536312, -0.394540697, 0.327219725, 0.0677122995],
        "embed": [0.4025396705, 0.460328996, -0.4233187435, -0.092955962],
        "mix_0_weight": [0.0212058686, 0.4518134, 0.181119531, -0.194395527],
        "mix_0_bias": [0.22355485, -0.187612444, -0.0464886986, -0.268846333],
    }
    for name, values in expected.items():
        actual = backbone.weights[name].ravel()[:4]
        assert actual.dtype == np.float32
        assert np.allclose(actual, np.array(values, dtype=np.float32), rtol=1e-7, atol=0), name
    for name in ("embed", "mix_0_weight", "mix_0_bias"):
        assert np.abs(backbone.weights[name]).max() <= 0.5, name


def test_init_backbone_is_deterministic():
    first = init_backbone(BackboneConfig(seed=11, **SMALL))
    second = init_backbone(BackboneConfig(seed=11, **SMALL))
    other = init_backbone(BackboneConfig(seed=12, **SMALL))
    assert encode_blob(first.weights, {}) == encode_blob(second.weights, {})
    assert encode_blob(first.weights, {}) != encode_blob(other.weights, {})


def test_encode_sequence_length_and_width():
    backbone = init_backbone(BackboneConfig(seed=1))
    visual = VisualTokens(SplitMix64(2).uniform(-1.0, 1.0, (64, 6912)))
    text = pad_batch([TokenSequence(ids=list(range(2, 52)), mask=[1] * 50)])
    states = backbone.encode(visual, text)
    assert states.values.shape == (114, 576)
    assert states.mask.tolist() == [1] * 114


def test_encode_is_deterministic():
    backbone = init_backbone(BackboneConfig(seed=5, **SMALL))
    visual = SplitMix64(6).uniform(-1.0, 1.0, (2, 3, 6))
    text = pad_batch([TokenSequence(ids=[3, 4], mask=[1, 1]), TokenSequence(ids=[5, 6, 7, 8], mask=[1] * 4)])
    first = backbone.encode_batch(visual, text)
    second = backbone.encode_batch(visual, text)
    assert np.array_equal(first.values, second.values)


def test_padding_positions_are_zero():
    backbone = init_backbone(BackboneConfig(seed=5, **SMALL))
    visual = SplitMix64(6).uniform(-1.0, 1.0, (2, 3, 6))
    text = pad_batch([TokenSequence(ids=[3, 4, 5], mask=[1] * 3), TokenSequence(ids=[5, 6, 7, 8, 9], mask=[1] * 5)])
    states = backbone.encode_batch(visual, text)
    assert states.values.shape == (2, 8, 4)
    assert states.mask[0].tolist() == [1, 1, 1, 1, 1, 1, 0, 0]
    assert not states.values[0, 6:].any()
    assert np.all(np.abs(states.values[0, :6]).sum(axis=-1) > 0)


def test_encode_errors():
    backbone = init_backbone(BackboneConfig(seed=5, **SMALL))
    empty_text = BatchedTokens(ids=np.zeros((1, 0), dtype=np.int64), mask=np.zeros((1, 0), dtype=np.int64))
    expect_error("empty sequence", backbone.encode_batch, np.zeros((1, 0, 6)), empty_text)
    text = pad_batch([TokenSequence(ids=[3], mask=[1])])
    expect_error("dimension mismatch", backbone.encode_batch, np.zeros((1, 2, 5)), text)
    bad_ids = BatchedTokens(ids=np.array([[300]]), mask=np.array([[1]]))
    expect_error("token id out of range", backbone.encode_batch, np.zeros((1, 2, 6)), bad_ids)


def test_weights_are_read_only():
    backbone = init_backbone(BackboneConfig(seed=5, **SMALL))
    try:
        backbone.weights["embed"][0, 0] = 1.0
    except ValueError:
        return
    raise AssertionError("backbone weights must not be writable")


def test_save_and_load():
    backbone = init_backbone(BackboneConfig(seed=9, **SMALL))
    with temp_dir() as directory:
        backbone.save(directory / "backbone.bin")
        restored = ToyBackbone.load(directory / "backbone.bin")
    assert restored.config == backbone.config
    for name, array in backbone.weights.items():
        assert np.array_equal(restored.weights[name], array)


def test_backbone_config_requires_even_width():
    expect_error("d_model must be even", BackboneConfig, d_model=5)


if __name__ == "__main__":
    sys.exit(run_tests(dict(globals()), "Testing the toy backbone"))
