"""JIT-compiled kernel implementations (numba @njit loops)."""

import numpy as np
from numba import njit


@njit(cache=True)
def _resample_axis0(img, starts, weights):
    out_h = weights.shape[0]
    kmax = weights.shape[1]
    in_w = img.shape[1]
    nch = img.shape[2]
    out = np.zeros((out_h, in_w, nch))
    for i in range(out_h):
        s = starts[i]
        for k in range(kmax):
            w = weights[i, k]
            if w == 0.0:
                continue
            row = s + k
            for j in range(in_w):
                for c in range(nch):
                    out[i, j, c] += w * img[row, j, c]
    return out


@njit(cache=True)
def _resample_axis1(img, starts, weights):
    in_h = img.shape[0]
    nch = img.shape[2]
    out_w = weights.shape[0]
    kmax = weights.shape[1]
    out = np.zeros((in_h, out_w, nch))
    for j in range(out_w):
        s = starts[j]
        for k in range(kmax):
            w = weights[j, k]
            if w == 0.0:
                continue
            col = s + k
            for i in range(in_h):
                for c in range(nch):
                    out[i, j, c] += w * img[i, col, c]
    return out


def resample_2d(img, starts_v, weights_v, starts_h, weights_h):
    img = np.ascontiguousarray(img, dtype=np.float64)
    tmp = _resample_axis0(img, starts_v, weights_v)
    return _resample_axis1(tmp, starts_h, weights_h)


@njit(cache=True)
def _gray_contrast(img, wr, wg, wb, factor, pivot):
    h, w = img.shape[0], img.shape[1]
    out = np.empty((h, w))
    for i in range(h):
        for j in range(w):
            g = wr * img[i, j, 0] + wg * img[i, j, 1] + wb * img[i, j, 2]
            out[i, j] = pivot + factor * (g - pivot)
    return out


def rgb_to_gray_contrast(img, wr, wg, wb, factor, pivot):
    return _gray_contrast(np.ascontiguousarray(img, dtype=np.float64), wr, wg, wb, factor, pivot)


@njit(cache=True)
def _clip_adjust(image, field):
    h, w = image.shape
    out = np.empty((h, w))
    for i in range(h):
        for j in range(w):
            p = image[i, j]
            f = field[i, j]
            lo = -f if -f > 0.0 else 0.0
            hi = 1.0 - f if 1.0 - f < 1.0 else 1.0
            if p < lo:
                p = lo
            elif p > hi:
                p = hi
            out[i, j] = p
    return out


def clip_adjust(image, field):
    return _clip_adjust(
        np.ascontiguousarray(image, dtype=np.float64),
        np.ascontiguousarray(field, dtype=np.float64),
    )


@njit(cache=True)
def _radial_annulus(size, lo, hi):
    mask = np.zeros((size, size), dtype=np.bool_)
    half = size // 2
    for i in range(size):
        fi = i if i < half else i - size
        for j in range(size):
            fj = j if j < half else j - size
            r = np.sqrt(float(fi * fi + fj * fj))
            mask[i, j] = (r > lo) and (r <= hi)
    return mask


def radial_annulus(size, lo, hi):
    return _radial_annulus(size, float(lo), float(hi))
