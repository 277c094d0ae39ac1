import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from bandmask import imaging
from bandmask.errors import ValidationError


def uniform_rgb(value, h=256, w=256):
    return np.full((h, w, 3), value, dtype=np.float64)


class TestToGrayscale:
    def test_pure_red_bt601(self):
        g = imaging.to_grayscale(uniform_rgb(0.0, 4, 4) + [1.0, 0.0, 0.0])
        np.testing.assert_allclose(g, 0.299)

    def test_equal_channels_identity(self):
        for v in (0.0, 0.25, 1.0):
            g = imaging.to_grayscale(uniform_rgb(v, 3, 3), weights=(0.2, 0.3, 0.5))
            np.testing.assert_allclose(g, v)

    def test_hand_arithmetic(self):
        px = np.array([[[0.2, 0.5, 0.9]]])
        g = imaging.to_grayscale(px)
        assert g[0, 0] == pytest.approx(0.2 * 0.299 + 0.5 * 0.587 + 0.9 * 0.114)
        assert g[0, 0] == pytest.approx(0.4559)

    def test_rejects_non_rgb(self):
        with pytest.raises(ValidationError):
            imaging.to_grayscale(np.zeros((4, 4)))


class TestReduceContrast:
    def test_formula_cases(self):
        assert imaging.reduce_contrast(np.array([1.0]), 0.2, 0.5)[0] == pytest.approx(0.6)
        assert imaging.reduce_contrast(np.array([0.0]), 0.2, 0.5)[0] == pytest.approx(0.4)

    def test_factor_one_is_identity(self):
        rng = np.random.default_rng(0)
        img = rng.random((16, 16))
        np.testing.assert_allclose(imaging.reduce_contrast(img, 1.0, 0.5), img)

    def test_pivot_is_fixed_point(self):
        img = np.full((8, 8), 0.5)
        np.testing.assert_allclose(imaging.reduce_contrast(img, 0.2, 0.5), 0.5)

    @given(
        factor=st.floats(0.05, 1.0),
        pivot=st.floats(0.0, 1.0),
        seed=st.integers(0, 2**16),
    )
    @settings(max_examples=40, deadline=None)
    def test_output_range_bound(self, factor, pivot, seed):
        img = np.random.default_rng(seed).random((8, 8))
        out = imaging.reduce_contrast(img, factor, pivot)
        lo = pivot - factor * pivot
        hi = pivot + factor * (1 - pivot)
        assert out.min() >= lo - 1e-12 and out.max() <= hi + 1e-12

    def test_affine_in_input(self):
        # reduce_contrast(a*I + b) = a*reduce_contrast(I) + factor*b relation
        rng = np.random.default_rng(1)
        img = rng.random((8, 8)) * 0.4
        a, b, f, pv = 0.7, 0.1, 0.2, 0.5
        lhs = imaging.reduce_contrast(a * img + b, f, pv)
        rhs = imaging.reduce_contrast(img, f, pv) * a + f * b + (1 - a) * (pv - f * pv)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestPreprocess:
    def test_uniform_white_maps_to_0p6(self):
        out = imaging.preprocess(uniform_rgb(1.0))
        assert out.shape == (224, 224)
        np.testing.assert_allclose(out, 0.6)

    def test_uniform_midgray_fixed_point(self):
        np.testing.assert_allclose(imaging.preprocess(uniform_rgb(0.5)), 0.5)

    def test_matches_reference_resampler(self):
        # oracle: PIL's float-mode bilinear resize per channel
        rng = np.random.default_rng(11)
        img = rng.random((384, 512, 3))
        cfg = imaging.PreprocessConfig()
        got = imaging.preprocess(img, cfg)

        chans = []
        for c in range(3):
            im = Image.fromarray(img[:, :, c].astype(np.float32), mode="F")
            chans.append(np.asarray(im.resize((341, 256), Image.BILINEAR), dtype=np.float64))
        ref = np.stack(chans, axis=2)
        ref = ref[16 : 16 + 224, 58 : 58 + 224]
        ref = imaging.to_grayscale(ref)
        ref = imaging.reduce_contrast(ref, 0.2, 0.5)
        assert np.abs(got - ref).max() < 1.0 / 255.0  # within one 8-bit gray level
        assert np.abs(got - ref).max() < 1e-5

    def test_default_output_range(self):
        rng = np.random.default_rng(2)
        out = imaging.preprocess(rng.random((400, 300, 3)))
        assert out.min() >= 0.4 - 1e-9 and out.max() <= 0.6 + 1e-9

    def test_crop_idempotent_when_resize_disabled(self):
        rng = np.random.default_rng(3)
        img = rng.random((224, 224, 3))
        cfg = imaging.PreprocessConfig(resize_short_side=None, contrast_factor=1.0)
        out = imaging.preprocess(img, cfg)
        np.testing.assert_allclose(out, imaging.to_grayscale(img), atol=1e-12)

    def test_too_small_rejected(self):
        cfg = imaging.PreprocessConfig(resize_short_side=None)
        with pytest.raises(ValidationError):
            imaging.preprocess(np.zeros((100, 300, 3)), cfg)

    def test_aspect_preserving_resize(self):
        out = imaging.resize_short_side(np.zeros((384, 512, 3)), 256)
        assert out.shape == (256, 341, 3)
        out = imaging.resize_short_side(np.zeros((512, 384, 3)), 256)
        assert out.shape == (341, 256, 3)


class TestConfig:
    def test_bad_weights_rejected(self):
        with pytest.raises(ValidationError):
            imaging.PreprocessConfig(grayscale_weights=(0.5, 0.5, 0.5)).validate()

    def test_bad_factor_rejected(self):
        with pytest.raises(ValidationError):
            imaging.PreprocessConfig(contrast_factor=0.0).validate()

    def test_roundtrip(self):
        cfg = imaging.PreprocessConfig()
        assert imaging.PreprocessConfig.from_dict(cfg.to_dict()) == cfg
