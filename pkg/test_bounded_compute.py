#!/usr/bin/env python3
"""Per-sample compute must not depend on the input.

Random images of any size and metadata of any length produce the same
sequence length, and so the same FLOP estimate, for a fixed configuration.
"""

import sys
from pathlib import Path

import numpy as np

from test_support import run_tests

from dataset.samples import RatingSample
from evaluation.flop_model import flop_estimate, load_arch_spec
from model.backbone import BackboneConfig, init_backbone
from model.seeded_rng import SplitMix64
from preprocessing.image_processor import ImageConfig, ImageTensor, image_to_visual_tokens
from preprocessing.text_processor import MetadataFields, PromptConfig, build_prompt, sequence_budget, tokenize
from training.trainer import FeatureExtractor

ALPHABET = "abcXYZ 0123,.-éß漢字🙂"
SPEC_256M = Path(__file__).resolve().parent / "configs" / "smolvlm2_256m.arch"


def _text(rng: SplitMix64, max_len: int) -> str:
    length = int(rng.random(1)[0] * max_len)
    picks = (rng.random(length) * len(ALPHABET)).astype(int)
    return "".join(ALPHABET[index] for index in picks)


def _random_sample(rng: SplitMix64, index: int) -> RatingSample:
    height = 1 + int(rng.random(1)[0] * 300)
    width = 1 + int(rng.random(1)[0] * 700)
    fields = MetadataFields(
        title=_text(rng, 400), description=_text(rng, 5000),
        features=_text(rng, 2000), main_category=_text(rng, 50),
    )
    image = ImageTensor(rng.uniform(0.0, 1.0, (height, width, 3)))
    return RatingSample(sample_id=f"R{index:03d}", fields=fields, image=image, target=3.0)


def _random_samples(n: int = 100, seed: int = 99):
    rng = SplitMix64(seed)
    return [_random_sample(rng, index) for index in range(n)]


def _fixed_length_extractor(prompt_cfg: PromptConfig, image_cfg: ImageConfig) -> FeatureExtractor:
    backbone = init_backbone(BackboneConfig(d_model=8, seed=1))
    return FeatureExtractor(backbone, prompt_cfg, image_cfg, batch_size=1, fixed_length=True)


def test_sequence_length_is_constant():
    prompt_cfg = PromptConfig()
    image_cfg = ImageConfig()
    budget = sequence_budget(prompt_cfg, image_cfg)
    extractor = _fixed_length_extractor(prompt_cfg, image_cfg)
    lengths = set()
    for sample in _random_samples():
        assert image_to_visual_tokens(sample.image, image_cfg).count == image_cfg.token_count
        assert len(tokenize(build_prompt(sample.fields, prompt_cfg), prompt_cfg)) <= prompt_cfg.max_text_tokens
        states = extractor.encode([sample])
        lengths.add(states.length)
        assert np.all(np.isfinite(states.values))
    assert lengths == {budget}


def test_flop_estimate_depends_on_config_only():
    spec = load_arch_spec(SPEC_256M)
    prompt_cfg = PromptConfig()
    image_cfg = ImageConfig()
    extractor = _fixed_length_extractor(prompt_cfg, image_cfg)
    estimates = set()
    text_lengths = set()
    for sample in _random_samples(seed=101):
        visual = image_to_visual_tokens(sample.image, image_cfg).count
        text_lengths.add(len(tokenize(build_prompt(sample.fields, prompt_cfg), prompt_cfg)))
        text = extractor.encode([sample]).length - visual
        estimates.add(flop_estimate(spec, visual, text).total)
    assert len(text_lengths) > 1
    assert estimates == {flop_estimate(spec, image_cfg.token_count, prompt_cfg.max_text_tokens).total}


if __name__ == "__main__":
    sys.exit(run_tests(dict(globals()), "Testing bounded per-sample compute"))
