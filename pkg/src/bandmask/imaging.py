"""Deterministic image preprocessing: resize, center-crop, grayscale, contrast.

The stimulus pipeline follows the common ImageNet evaluation protocol:
shorter side resized to 256 (antialiased triangle filter, the convention
used by mainstream image libraries), center crop to 224, luminance
conversion, then affine contrast reduction about a fixed pivot so that
strong additive noise cannot clip at 0/1.
"""

from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from bandmask import kernels
from bandmask.errors import ValidationError

BT601_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class PreprocessConfig:
    resize_short_side: int | None = 256
    crop: int = 224
    contrast_factor: float = 0.2
    contrast_pivot: float = 0.5
    grayscale_weights: tuple = field(default=BT601_WEIGHTS)
    resample: str = "triangle"  # recorded in manifests for reproducibility

    def validate(self):
        if not (0.0 < self.contrast_factor <= 1.0):
            raise ValidationError(f"contrast_factor {self.contrast_factor} not in (0, 1]")
        if not (0.0 <= self.contrast_pivot <= 1.0):
            raise ValidationError(f"contrast_pivot {self.contrast_pivot} not in [0, 1]")
        w = np.asarray(self.grayscale_weights, dtype=float)
        if w.shape != (3,) or (w < 0).any() or abs(w.sum() - 1.0) > 1e-9:
            raise ValidationError("grayscale_weights must be 3 nonnegative values summing to 1")
        if self.crop < 1:
            raise ValidationError("crop must be positive")
        if self.resize_short_side is not None and self.resize_short_side < self.crop:
            raise ValidationError("resize_short_side smaller than crop")
        return self

    def to_dict(self):
        return {
            "resize_short_side": self.resize_short_side,
            "crop": self.crop,
            "contrast_factor": self.contrast_factor,
            "contrast_pivot": self.contrast_pivot,
            "grayscale_weights": list(self.grayscale_weights),
            "resample": self.resample,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "grayscale_weights" in d:
            d["grayscale_weights"] = tuple(d["grayscale_weights"])
        return cls(**d).validate()


def load_rgb(path):
    """Read an 8-bit image file as float64 RGB in [0, 1], shape (H, W, 3)."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def resample_coeffs(in_size, out_size):
    """Triangle-filter resampling weights, one compact row per output pixel.

    Follows the widely used convention (identical to PIL's bilinear
    resampler): for downscaling the filter support is widened by the scale
    factor, which antialiases; for upscaling it reduces to classic 2-tap
    bilinear interpolation. Returns (starts, weights) where output pixel i
    is the dot product of weights[i] with input[starts[i] : starts[i]+k].
    """
    if in_size < 1 or out_size < 1:
        raise ValidationError("resample sizes must be positive")
    scale = in_size / out_size
    filterscale = max(scale, 1.0)
    support = filterscale  # triangle filter has unit support before scaling
    kmax = int(np.ceil(support)) * 2 + 1
    starts = np.zeros(out_size, dtype=np.int64)
    weights = np.zeros((out_size, kmax))
    inv = 1.0 / filterscale
    for i in range(out_size):
        center = (i + 0.5) * scale
        xmin = int(center - support + 0.5)
        if xmin < 0:
            xmin = 0
        xmax = int(center + support + 0.5)
        if xmax > in_size:
            xmax = in_size
        total = 0.0
        for k in range(xmax - xmin):
            x = (k + xmin - center + 0.5) * inv
            w = 1.0 - abs(x) if abs(x) < 1.0 else 0.0
            weights[i, k] = w
            total += w
        if total != 0.0:
            weights[i, : xmax - xmin] /= total
        starts[i] = xmin
    return starts, weights


def resize(img, out_h, out_w):
    """Resize an (H, W, C) or (H, W) float image with the triangle filter."""
    img = np.asarray(img, dtype=np.float64)
    squeeze = img.ndim == 2
    if squeeze:
        img = img[:, :, None]
    sv, wv = resample_coeffs(img.shape[0], out_h)
    sh, wh = resample_coeffs(img.shape[1], out_w)
    out = kernels.resample_2d(img, sv, wv, sh, wh)
    return out[:, :, 0] if squeeze else out


def resize_short_side(img, target):
    h, w = img.shape[:2]
    if h <= w:
        return resize(img, target, int(round(w * target / h)))
    return resize(img, int(round(h * target / w)), target)


def center_crop(img, size):
    h, w = img.shape[:2]
    if h < size or w < size:
        raise ValidationError(f"image {h}x{w} smaller than {size}x{size} crop")
    top = (h - size) // 2
    left = (w - size) // 2
    return img[top : top + size, left : left + size]


def to_grayscale(rgb, weights=BT601_WEIGHTS):
    """Weighted luminance, pixel = w_r*R + w_g*G + w_b*B."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValidationError(f"expected (H, W, 3) RGB array, got shape {rgb.shape}")
    w = np.asarray(weights, dtype=float)
    return rgb[:, :, 0] * w[0] + rgb[:, :, 1] * w[1] + rgb[:, :, 2] * w[2]


def reduce_contrast(gray, factor, pivot=0.5):
    """Affine contrast change p' = pivot + factor * (p - pivot)."""
    if not (0.0 < factor <= 1.0):
        raise ValidationError(f"contrast factor {factor} not in (0, 1]")
    return pivot + factor * (np.asarray(gray, dtype=np.float64) - pivot)


def preprocess(rgb, config=None):
    """Full pipeline: resize shorter side, center crop, grayscale + contrast.

    Returns a float64 (crop, crop) array with every pixel in [0, 1]; for the
    default config the output range is [0.4, 0.6], leaving 0.4 of headroom
    before additive noise can clip.
    """
    config = (config or PreprocessConfig()).validate()
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValidationError(f"expected (H, W, 3) RGB array, got shape {rgb.shape}")
    if config.resize_short_side is not None:
        rgb = resize_short_side(rgb, config.resize_short_side)
    rgb = center_crop(rgb, config.crop)
    wr, wg, wb = config.grayscale_weights
    out = kernels.rgb_to_gray_contrast(
        np.ascontiguousarray(rgb), wr, wg, wb, config.contrast_factor, config.contrast_pivot
    )
    # resampling is a convex combination, so only float rounding can stray
    return np.clip(out, 0.0, 1.0)
