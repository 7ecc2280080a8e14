"""Image pipeline tests: decode, normalize, pairing, degradations."""

import numpy as np
import pytest
from PIL import Image

from mfp import images as I
from mfp.errors import ConfigError, DecodeError, NoPairsError


class FakeConfig:
    image_size = (256, 256)


def write_png(path, arr):
    Image.fromarray(np.asarray(arr, dtype=np.uint8), mode="RGB").save(path)


class TestDecode:
    def test_1x1_white_png(self, tmp_path):
        p = tmp_path / "w.png"
        write_png(p, np.full((1, 1, 3), 255))
        np.testing.assert_array_equal(I.decode_image(p), [[[255, 255, 255]]])

    def test_corrupt_file(self, tmp_path):
        p = tmp_path / "bad.png"
        p.write_bytes(b"\x89PNG\r\n\x1a\nnot really a png")
        with pytest.raises(DecodeError):
            I.decode_image(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            I.decode_image(tmp_path / "nope.png")

    def test_unsupported_format(self, tmp_path):
        p = tmp_path / "x.bmp"
        Image.fromarray(np.zeros((4, 4, 3), np.uint8)).save(p, format="BMP")
        with pytest.raises(DecodeError):
            I.decode_image(p)

    def test_paletted_png_matches_reference(self, tmp_path, rng):
        rgb = rng.integers(0, 8, size=(16, 16, 3), dtype=np.uint8) * 32
        p = tmp_path / "pal.png"
        Image.fromarray(rgb).convert("P", palette=Image.ADAPTIVE).save(p)
        # reference decoder: Pillow's own convert("RGB") on the palette file
        with Image.open(p) as im:
            ref = np.asarray(im.convert("RGB"))
        np.testing.assert_array_equal(I.decode_image(p), ref)

    def test_grayscale_expands(self, tmp_path):
        p = tmp_path / "g.png"
        Image.fromarray(np.arange(16, dtype=np.uint8).reshape(4, 4), mode="L").save(p)
        out = I.decode_image(p)
        assert out.shape == (4, 4, 3)
        np.testing.assert_array_equal(out[..., 0], out[..., 1])

    def test_alpha_composited_over_white(self, tmp_path):
        rgba = np.zeros((2, 2, 4), np.uint8)
        rgba[..., 0] = 255  # pure red
        rgba[..., 3] = [[0, 255], [128, 255]]
        p = tmp_path / "a.png"
        Image.fromarray(rgba, mode="RGBA").save(p)
        out = I.decode_image(p)
        np.testing.assert_array_equal(out[0, 0], [255, 255, 255])  # transparent
        np.testing.assert_array_equal(out[0, 1], [255, 0, 0])  # opaque red

    def test_jpeg_roundtrip_decodes(self, tmp_path, rng):
        arr = rng.integers(0, 255, size=(32, 32, 3), dtype=np.uint8)
        p = tmp_path / "x.jpg"
        Image.fromarray(arr).save(p, quality=95)
        out = I.decode_image(p)
        assert out.shape == (32, 32, 3) and out.dtype == np.uint8

    def test_png_roundtrip_identity(self, tmp_path, rng):
        arr = rng.integers(0, 256, size=(20, 24, 3), dtype=np.uint8)
        p = tmp_path / "rt.png"
        I.encode_png(p, arr)
        np.testing.assert_array_equal(I.decode_image(p), arr)


class TestToModelInput:
    def test_same_size_no_resample(self, rng):
        img = rng.integers(0, 256, size=(256, 256, 3), dtype=np.uint8)
        out = I.to_model_input(img, FakeConfig())
        assert out.shape == (3, 256, 256)
        mean = np.asarray(I.RGB_MEAN, np.float32)
        std = np.asarray(I.RGB_STD, np.float32)
        expect = (img.astype(np.float32) / 255.0 - mean) / std
        np.testing.assert_allclose(out, expect.transpose(2, 0, 1), atol=1e-6)

    def test_black_image_closed_form(self):
        out = I.to_model_input(np.zeros((256, 256, 3), np.uint8), FakeConfig())
        for c in range(3):
            expect = (0.0 - I.RGB_MEAN[c]) / I.RGB_STD[c]
            np.testing.assert_allclose(out[c], expect, atol=1e-6)

    def test_constant_image_resize_preserves_constant(self):
        img = np.full((512, 512, 3), 200, np.uint8)
        out = I.to_model_input(img, FakeConfig())
        for c in range(3):
            expect = (200 / 255.0 - I.RGB_MEAN[c]) / I.RGB_STD[c]
            np.testing.assert_allclose(out[c], expect, atol=1e-5)

    def test_deterministic(self, rng):
        img = rng.integers(0, 256, size=(100, 300, 3), dtype=np.uint8)
        a = I.to_model_input(img, FakeConfig())
        b = I.to_model_input(img, FakeConfig())
        np.testing.assert_array_equal(a, b)


class TestResizeBilinear:
    def test_identity_at_same_size(self, rng):
        img = rng.standard_normal((10, 10, 3)).astype(np.float32)
        np.testing.assert_array_equal(I.resize_bilinear(img, 10, 10), img)

    def test_constant_preserved(self):
        img = np.full((8, 8, 3), 4.25, np.float32)
        out = I.resize_bilinear(img, 13, 5)
        np.testing.assert_allclose(out, 4.25, atol=1e-6)

    def test_2x_upsample_midpoints(self):
        img = np.array([[0.0, 1.0]], np.float32).reshape(1, 2, 1)
        out = I.resize_bilinear(img, 1, 4)[0, :, 0]
        # half-pixel centers: src positions -0.25, 0.25, 0.75, 1.25 (clamped)
        np.testing.assert_allclose(out, [0.0, 0.25, 0.75, 1.0], atol=1e-6)


class TestDiscoverPairs:
    def make(self, d, names):
        d.mkdir(exist_ok=True)
        for n in names:
            write_png(d / n, np.zeros((2, 2, 3)))

    def test_partial_overlap_warns(self, tmp_path):
        self.make(tmp_path / "g", ["a.png", "b.png"])
        self.make(tmp_path / "t", ["a.png", "c.png"])
        with pytest.warns(UserWarning):
            m = I.discover_pairs(tmp_path / "g", tmp_path / "t")
        assert [p[0] for p in m.pairs] == ["a"]
        assert len(m.unmatched_generated) == 1 and len(m.unmatched_target) == 1

    def test_identical_dirs_sorted(self, tmp_path):
        names = [f"{c}.png" for c in "ecabd"]
        self.make(tmp_path / "g", names)
        self.make(tmp_path / "t", names)
        m = I.discover_pairs(tmp_path / "g", tmp_path / "t")
        assert [p[0] for p in m.pairs] == ["a", "b", "c", "d", "e"]
        assert len(m) == 5

    def test_empty_target_raises(self, tmp_path):
        self.make(tmp_path / "g", ["a.png"])
        (tmp_path / "t").mkdir()
        with pytest.raises(NoPairsError):
            I.discover_pairs(tmp_path / "g", tmp_path / "t")

    def test_mixed_extensions_match_by_stem(self, tmp_path):
        self.make(tmp_path / "g", ["a.png"])
        (tmp_path / "t").mkdir()
        Image.fromarray(np.zeros((2, 2, 3), np.uint8)).save(tmp_path / "t" / "a.jpg")
        m = I.discover_pairs(tmp_path / "g", tmp_path / "t")
        assert m.pairs[0][0] == "a"


class TestDegrade:
    def test_noise_sigma_zero_identity(self, rng):
        img = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
        np.testing.assert_array_equal(I.degrade(img, "noise", 0.0, seed=3), img)

    def test_noise_reproducible(self, rng):
        img = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
        a = I.degrade(img, "noise", 10, seed=7)
        b = I.degrade(img, "noise", 10, seed=7)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, I.degrade(img, "noise", 10, seed=8))

    def test_noise_sample_statistics(self):
        # interior gray level avoids clamping, so diff std tracks sigma
        img = np.full((256, 256, 3), 128, np.uint8)
        out = I.degrade(img, "noise", 10, seed=0)
        diff = out.astype(np.float64) - img.astype(np.float64)
        assert abs(diff.std() - 10.0) / 10.0 < 0.1

    def test_patch_shuffle_identity_permutation(self, rng):
        img = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
        out = I.shuffle_tiles(img, np.arange(16), 16)
        np.testing.assert_array_equal(out, img)

    def test_patch_shuffle_preserves_tiles(self, rng):
        img = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
        out = I.degrade(img, "patch_shuffle", 16, seed=5)
        def tile_set(a):
            t = a.reshape(4, 16, 4, 16, 3).transpose(0, 2, 1, 3, 4).reshape(16, -1)
            return sorted(map(tuple, t))
        assert tile_set(out) == tile_set(img)
        assert not np.array_equal(out, img)

    def test_blur_reduces_variance(self, rng):
        img = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
        out = I.degrade(img, "blur", 2.0, seed=0)
        assert out.astype(np.float64).var() < img.astype(np.float64).var()

    def test_unknown_kind(self, rng):
        with pytest.raises(ConfigError):
            I.degrade(np.zeros((8, 8, 3), np.uint8), "sepia", 1.0)

    def test_indivisible_tiling_rejected(self):
        with pytest.raises(ConfigError):
            I.degrade(np.zeros((30, 30, 3), np.uint8), "patch_shuffle", 16)
