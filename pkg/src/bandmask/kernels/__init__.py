"""Hot numeric kernels with selectable backend.

Two interchangeable implementations live here: ``numba_impl`` (JIT-compiled
loops) and ``numpy_impl`` (vectorized fallback). The active backend is chosen
at import time from the ``BANDMASK_BACKEND`` environment variable:

  auto   (default) use numba when importable, else numpy
  numba  require numba, fail loudly if unavailable
  numpy  force the pure-numpy path

``use(name)`` switches backends at runtime (tests and benchmarks do this).
All kernels take/return float64 arrays and are pure functions.
"""

import os

from bandmask.kernels import numpy_impl

_IMPLS = {"numpy": numpy_impl}
_active = "numpy"


def _load_numba():
    if "numba" not in _IMPLS:
        from bandmask.kernels import numba_impl

        _IMPLS["numba"] = numba_impl
    return _IMPLS["numba"]


def use(name):
    """Select the kernel backend ('numpy' or 'numba'). Returns the name."""
    global _active
    if name == "numba":
        _load_numba()
    elif name != "numpy":
        raise ValueError(f"unknown backend {name!r}")
    _active = name
    return _active


def active_backend():
    return _active


def _impl():
    return _IMPLS[_active]


def resample_2d(img, starts_v, weights_v, starts_h, weights_h):
    """Separable triangle-filter resample of an (H, W, C) image."""
    return _impl().resample_2d(img, starts_v, weights_v, starts_h, weights_h)


def rgb_to_gray_contrast(img, wr, wg, wb, factor, pivot):
    """Fused luminance conversion + contrast reduction about a pivot."""
    return _impl().rgb_to_gray_contrast(img, wr, wg, wb, factor, pivot)


def clip_adjust(image, field):
    """Minimally move pixels of ``image`` so that image + field stays in [0,1]."""
    return _impl().clip_adjust(image, field)


def radial_annulus(size, lo, hi):
    """Boolean FFT-layout mask of radial frequencies r with lo < r <= hi."""
    return _impl().radial_annulus(size, lo, hi)


def _init_from_env():
    mode = os.environ.get("BANDMASK_BACKEND", "auto").lower()
    if mode == "numpy":
        use("numpy")
    elif mode == "numba":
        use("numba")
    elif mode == "auto":
        try:
            use("numba")
        except ImportError:
            use("numpy")
    else:
        raise ValueError(f"BANDMASK_BACKEND={mode!r} not in (auto, numba, numpy)")


_init_from_env()
