#!/usr/bin/env python3
"""Tests for the fixed-resolution image pipeline and image codecs."""

import struct
import sys

import numpy as np

from test_support import expect_error, run_tests, temp_dir

from model.seeded_rng import SplitMix64
from preprocessing.image_io import (
    decode_ppm,
    decode_raw_tensor,
    encode_ppm,
    encode_raw_tensor,
    load_image,
    load_images,
    save_image,
)
from preprocessing.image_processor import (
    ImageConfig,
    ImageTensor,
    image_to_visual_tokens,
    normalize,
    patchify,
    pixel_shuffle,
    resize_bilinear,
    unpatchify,
)


def _random_image(seed: int, height: int, width: int) -> ImageTensor:
    return ImageTensor(SplitMix64(seed).uniform(0.0, 1.0, (height, width, 3)))


def _reference_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Loop-based bilinear resize with half-pixel centers and clamped sampling."""
    in_h, in_w, _ = img.shape
    out = np.zeros((out_h, out_w, 3))
    for i in range(out_h):
        sy = min(max((i + 0.5) * in_h / out_h - 0.5, 0.0), in_h - 1)
        y0 = int(np.floor(sy))
        y1 = min(y0 + 1, in_h - 1)
        fy = sy - y0
        for j in range(out_w):
            sx = min(max((j + 0.5) * in_w / out_w - 0.5, 0.0), in_w - 1)
            x0 = int(np.floor(sx))
            x1 = min(x0 + 1, in_w - 1)
            fx = sx - x0
            top = img[y0, x0] + fx * (img[y0, x1] - img[y0, x0])
            bottom = img[y1, x0] + fx * (img[y1, x1] - img[y1, x0])
            out[i, j] = top + fy * (bottom - top)
    return out


def test_resize_constant_image_stays_constant():
    img = ImageTensor(np.full((17, 23, 3), 0.7))
    out = resize_bilinear(img, 384, 384)
    assert out.data.shape == (384, 384, 3)
    assert np.all(out.data == 0.7)


def test_resize_identity_is_bit_identical():
    img = _random_image(1, 384, 384)
    out = resize_bilinear(img, 384, 384)
    assert np.array_equal(out.data, img.data)
    assert out.data is not img.data


def test_resize_checkerboard_downsample():
    board = np.zeros((2, 2, 3))
    board[0, 1] = 1.0
    board[1, 0] = 1.0
    out = resize_bilinear(ImageTensor(board), 1, 1)
    assert np.allclose(out.data, 0.5, atol=1e-12)


def test_resize_matches_loop_reference():
    for seed, (in_h, in_w, out_h, out_w) in enumerate([(5, 7, 9, 4), (3, 3, 11, 11), (40, 13, 6, 20)]):
        img = _random_image(seed + 10, in_h, in_w)
        out = resize_bilinear(img, out_h, out_w)
        assert np.allclose(out.data, _reference_resize(img.data, out_h, out_w), atol=1e-12)


def test_resize_is_convex():
    img = _random_image(3, 31, 9)
    out = resize_bilinear(img, 64, 64)
    assert out.data.min() >= img.data.min() - 1e-12
    assert out.data.max() <= img.data.max() + 1e-12


def test_resize_rejects_degenerate_image():
    expect_error("degenerate image", resize_bilinear, ImageTensor(np.zeros((0, 5, 3))), 8, 8)
    expect_error("degenerate image", resize_bilinear, ImageTensor(np.zeros((4, 4, 3))), 0, 8)


def test_normalize_examples():
    img = ImageTensor(np.full((2, 2, 3), 0.5))
    assert np.all(normalize(img, (0.5,) * 3, (0.5,) * 3) == 0.0)
    white = ImageTensor(np.ones((1, 1, 3)))
    black = ImageTensor(np.zeros((1, 1, 3)))
    assert np.all(normalize(white, (0.5,) * 3, (0.5,) * 3) == 1.0)
    assert np.all(normalize(black, (0.5,) * 3, (0.5,) * 3) == -1.0)
    expect_error("invalid normalization", normalize, img, (0.5,) * 3, (0.5, 0.0, 0.5))


def test_patchify_grid_sizes():
    for resolution, grid in ((384, 24), (512, 32)):
        patches = patchify(np.zeros((resolution, resolution, 3)), 16)
        assert patches.shape == (grid, grid, 768)
    zero = patchify(np.zeros((32, 32, 3)), 16)
    assert zero.shape == (2, 2, 768) and not zero.any()
    expect_error("resolution/patch mismatch", patchify, np.zeros((30, 30, 3)), 16)


def test_patchify_layout_and_inverse():
    pixels = _random_image(4, 48, 48).data
    patches = patchify(pixels, 16)
    assert np.array_equal(patches[1, 2], pixels[16:32, 32:48].reshape(-1))
    assert np.array_equal(unpatchify(patches, 16), pixels)


def test_pixel_shuffle_examples():
    grid = np.arange(24 * 24 * 8, dtype=np.float64).reshape(24, 24, 8)
    shuffled = pixel_shuffle(grid, 3)
    assert shuffled.shape == (8, 8, 72)
    assert np.array_equal(pixel_shuffle(grid, 1), grid)

    small = np.array([[[1.0], [2.0]], [[3.0], [4.0]]])
    assert pixel_shuffle(small, 2)[0, 0].tolist() == [1.0, 2.0, 3.0, 4.0]
    expect_error("shuffle factor mismatch", pixel_shuffle, np.zeros((5, 5, 2)), 2)


def test_image_config_validation():
    config = ImageConfig()
    assert config.token_count == 64 and config.token_dim == 6912
    assert ImageConfig(resolution=512, shuffle_factor=4).token_count == 64
    expect_error("shuffle factor mismatch", ImageConfig, resolution=512)
    expect_error("resolution/patch mismatch", ImageConfig, resolution=500)
    expect_error("invalid normalization", ImageConfig, std=(0.5, 0.0, 0.5))


def test_visual_token_count_is_independent_of_input_size():
    config = ImageConfig()
    for seed, (height, width) in enumerate([(1, 1), (7, 300), (384, 384), (600, 41)]):
        tokens = image_to_visual_tokens(_random_image(seed, height, width), config)
        assert (tokens.count, tokens.dim) == (64, 6912)


def test_ppm_codec():
    values = np.arange(2 * 3 * 3).reshape(2, 3, 3) * 10 / 255.0
    img = ImageTensor(values)
    payload = encode_ppm(img)
    assert payload.startswith(b"P6\n3 2\n255\n")
    assert np.allclose(decode_ppm(payload).data, values, atol=1e-12)

    commented = b"P6\n# made by hand\n1 1\n255\n" + bytes([255, 0, 51])
    assert np.allclose(decode_ppm(commented).data[0, 0], [1.0, 0.0, 0.2])
    expect_error("unsupported PPM magic", decode_ppm, b"P3\n1 1\n255\n1 2 3")
    expect_error("unsupported PPM maxval", decode_ppm, b"P6\n1 1\n65535\n" + bytes(6))
    expect_error("cannot decode PPM", decode_ppm, b"P6\n2 2\n255\n" + bytes(5))
    expect_error("PPM", decode_ppm, b"P6\n0 1\n255\n")


def test_raw_tensor_codec():
    img = ImageTensor(np.full((2, 4, 3), 0.25))
    payload = encode_raw_tensor(img)
    assert struct.unpack("<II", payload[:8]) == (2, 4)
    assert len(payload) == 8 + 2 * 4 * 3 * 4
    assert np.array_equal(decode_raw_tensor(payload).data, img.data)

    bad = struct.pack("<II", 1, 1) + np.array([0.5, 1.5, 0.0], dtype="<f4").tobytes()
    expect_error("within [0, 1]", decode_raw_tensor, bad)
    expect_error("expected 12", decode_raw_tensor, struct.pack("<II", 1, 1) + bytes(4))


def test_load_images_keeps_order():
    with temp_dir() as directory:
        paths = []
        for index in range(6):
            path = directory / f"{index}.raw"
            save_image(ImageTensor(np.full((1, 1, 3), index / 8.0)), path)
            paths.append(path)
        for workers in (1, 3):
            images = load_images(paths, workers=workers)
            assert [float(image.data[0, 0, 0]) for image in images] == [index / 8.0 for index in range(6)]
        expect_error("image not found", load_image, directory / "missing.ppm", exc=FileNotFoundError)


if __name__ == "__main__":
    sys.exit(run_tests(dict(globals()), "Testing image preprocessing"))
