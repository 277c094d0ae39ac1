"""Vectorized (pure numpy) kernel implementations."""

import numpy as np


def _dense_weights(starts, weights, in_size):
    # Expand the compact (start, row-of-weights) form into a dense matrix.
    # Rows are zero-padded, so truncating at the input edge loses nothing.
    out_size, kmax = weights.shape
    w = np.zeros((out_size, in_size))
    for i in range(out_size):
        s = starts[i]
        n = min(kmax, in_size - s)
        w[i, s : s + n] = weights[i, :n]
    return w


def resample_2d(img, starts_v, weights_v, starts_h, weights_h):
    img = np.asarray(img, dtype=np.float64)
    in_h, in_w = img.shape[:2]
    wv = _dense_weights(starts_v, weights_v, in_h)
    wh = _dense_weights(starts_h, weights_h, in_w)
    # vertical pass then horizontal pass, per channel via tensordot
    tmp = np.tensordot(wv, img, axes=(1, 0))  # (out_h, in_w, C)
    out = np.tensordot(tmp, wh, axes=(1, 1))  # (out_h, C, out_w) -> fix axes
    return np.moveaxis(out, -1, 1)


def rgb_to_gray_contrast(img, wr, wg, wb, factor, pivot):
    gray = wr * img[:, :, 0] + wg * img[:, :, 1] + wb * img[:, :, 2]
    return pivot + factor * (gray - pivot)


def clip_adjust(image, field):
    lo = np.maximum(0.0, -field)
    hi = np.minimum(1.0, 1.0 - field)
    return np.clip(image, lo, hi)


def radial_annulus(size, lo, hi):
    f = np.fft.fftfreq(size, d=1.0 / size)
    r = np.hypot(f[:, None], f[None, :])
    return (r > lo) & (r <= hi)
