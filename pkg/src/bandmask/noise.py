"""Octave-band-filtered Gaussian noise: synthesis, clipping prevention, spectra.

Noise fields are white Gaussian images filtered by a hard radial annulus in
the 2-D Fourier domain (frequencies in cycles/image), mean-removed, then
rescaled so the sample SD matches the target exactly. Hard annuli make the
in-band-power property exactly testable and adjacent octave bands disjoint
(lo < r <= hi), so fields from disjoint bands are orthogonal.
"""

import math
from dataclasses import dataclass

import numpy as np

from bandmask import kernels
from bandmask.errors import BandmaskError, ValidationError

SD_LEVELS = (0.0, 0.02, 0.04, 0.08, 0.16)
NONZERO_SD_LEVELS = SD_LEVELS[1:]
N_BANDS = 7
BASE_CENTER_CPI = 1.75  # cycles/image of the lowest band center
STIMULUS_SIZE = 224

GEOMETRIC_OCTAVE = "geometric_octave"
LOWER_EDGE_OCTAVE = "lower_edge_octave"
BAND_CONVENTIONS = (GEOMETRIC_OCTAVE, LOWER_EDGE_OCTAVE)


def band_center(band_index):
    """Center frequency in cycles/image of band 0..6 (1.75 * 2**index)."""
    return BASE_CENTER_CPI * 2.0**band_index


@dataclass(frozen=True)
class FrequencyBand:
    center: float
    lo: float
    hi: float
    convention: str = GEOMETRIC_OCTAVE


@dataclass(frozen=True)
class NoiseCondition:
    """One experimental cell: noise SD level x frequency band.

    The zero-SD condition carries band_index -1 (the band is irrelevant).
    """

    sd: float
    band_index: int

    @property
    def is_zero(self):
        return self.sd == 0.0

    def key(self):
        return (self.sd, self.band_index)


ZERO_CONDITION = NoiseCondition(0.0, -1)


def all_conditions():
    """The 29 distinct conditions: 4 nonzero SDs x 7 bands + 1 zero-SD."""
    conds = [ZERO_CONDITION]
    for sd in NONZERO_SD_LEVELS:
        for b in range(N_BANDS):
            conds.append(NoiseCondition(sd, b))
    return conds


def band_edges(center, convention=GEOMETRIC_OCTAVE, nyquist=STIMULUS_SIZE // 2):
    """One-octave band edges (hi = 2*lo) around/above a center frequency.

    geometric_octave places the center at the geometric mean of the edges
    (lo = center/sqrt(2)); lower_edge_octave uses [center, 2*center]. The
    upper edge is truncated at the Nyquist frequency of the image.
    """
    if convention not in BAND_CONVENTIONS:
        raise ValidationError(f"unknown band convention {convention!r}")
    if center <= 0:
        raise ValidationError(f"band center {center} must be positive")
    if center > nyquist:
        raise ValidationError(f"band center {center} beyond Nyquist {nyquist}")
    if convention == GEOMETRIC_OCTAVE:
        lo, hi = center / math.sqrt(2.0), center * math.sqrt(2.0)
    else:
        lo, hi = float(center), 2.0 * center
    return lo, min(hi, float(nyquist))


def band_for_index(band_index, convention=GEOMETRIC_OCTAVE, size=STIMULUS_SIZE):
    center = band_center(band_index)
    lo, hi = band_edges(center, convention, nyquist=size // 2)
    return FrequencyBand(center, lo, hi, convention)


@dataclass
class NoiseField:
    pixels: np.ndarray
    band: FrequencyBand | None
    sd: float
    seed: int


@dataclass
class SpectrumReport:
    in_band_power_fraction: float
    total_power: float
    peak_radial_frequency: float

    def to_dict(self):
        return {
            "in_band_power_fraction": self.in_band_power_fraction,
            "total_power": self.total_power,
            "peak_radial_frequency": self.peak_radial_frequency,
        }


def annulus_mask(size, band):
    if band.lo >= band.hi:
        raise ValidationError(f"degenerate band [{band.lo}, {band.hi}] after truncation")
    return kernels.radial_annulus(size, band.lo, band.hi)


def bandpass_filter(field, band):
    """Keep only Fourier components with lo < radial frequency <= hi."""
    field = np.asarray(field, dtype=np.float64)
    mask = annulus_mask(field.shape[0], band)
    spectrum = np.fft.fft2(field)
    spectrum[~mask] = 0.0
    return np.fft.ifft2(spectrum).real


def bandpass_noise(seed, band, target_sd, size=STIMULUS_SIZE):
    """Seeded band-limited Gaussian noise with exact sample SD.

    target_sd of 0 yields an all-zero field. Otherwise the white field drawn
    from the seed is annulus-filtered, mean-removed, and rescaled so the
    (population) sample SD equals target_sd exactly.
    """
    if target_sd < 0:
        raise ValidationError(f"target_sd {target_sd} must be >= 0")
    if target_sd == 0.0:
        return NoiseField(np.zeros((size, size)), band, 0.0, seed)
    rng = np.random.default_rng(seed)
    white = rng.standard_normal((size, size))
    filtered = bandpass_filter(white, band)
    filtered -= filtered.mean()
    sd = filtered.std()
    if sd == 0.0:
        raise ValidationError(f"band [{band.lo}, {band.hi}] selects no frequencies")
    filtered *= target_sd / sd
    return NoiseField(filtered, band, target_sd, seed)


def noise_for_condition(condition, noise_seed, convention=GEOMETRIC_OCTAVE, size=STIMULUS_SIZE):
    if condition.is_zero:
        return NoiseField(np.zeros((size, size)), None, 0.0, noise_seed)
    band = band_for_index(condition.band_index, convention, size)
    return bandpass_noise(noise_seed, band, condition.sd, size)


def verify_spectrum(field, band):
    """Fourier check of a field against a band: power fraction inside it.

    total_power is the pixel-domain sum of squared deviations from the mean,
    which matches the (normalized) spectral power by Parseval's theorem.
    """
    pixels = np.asarray(field.pixels if isinstance(field, NoiseField) else field, dtype=np.float64)
    if not pixels.any():
        raise ValidationError("spectrum of an all-zero field is undefined")
    size = pixels.shape[0]
    centered = pixels - pixels.mean()
    spectrum = np.fft.fft2(centered)
    power = np.abs(spectrum) ** 2
    power.flat[0] = 0.0  # DC is numerically ~0 after mean removal
    total_spectral = power.sum()
    in_band = power[annulus_mask(size, band)].sum()
    freqs = np.fft.fftfreq(size, d=1.0 / size)
    radius = np.hypot(freqs[:, None], freqs[None, :])
    peak = float(radius.flat[int(np.argmax(power))])
    return SpectrumReport(
        in_band_power_fraction=float(in_band / total_spectral),
        total_power=float((centered**2).sum()),
        peak_radial_frequency=peak,
    )


def prevent_clipping(image, field):
    """Minimally adjust an image so that adding the field cannot clip.

    The field itself is never altered (its spectrum and distribution stay
    intact); only pixels whose sum would leave [0, 1] move, each by the
    smallest amount that brings the sum back to the boundary.
    """
    image = np.asarray(image, dtype=np.float64)
    pixels = np.asarray(field.pixels if isinstance(field, NoiseField) else field, dtype=np.float64)
    if image.min() < 0.0 or image.max() > 1.0:
        raise ValidationError("image pixels must lie in [0, 1]")
    # |f| <= 1 is the feasibility bound: beyond it no pixel value in [0, 1]
    # keeps the sum in range. (Strongest ladder noise, SD 0.16, peaks near
    # 0.7 over a 224^2 field and must pass.)
    if np.abs(pixels).max() > 1.0:
        raise ValidationError(
            "field magnitude exceeds 1; no adjustment can keep the sum in [0, 1]"
        )
    return kernels.clip_adjust(image, pixels)


def mask(image, field):
    """Pixelwise image + noise. Requires prevent_clipping to have run first.

    No clamping is performed; a sum outside [0, 1] (beyond float rounding)
    means clipping prevention was skipped and is an internal error.
    """
    pixels = np.asarray(field.pixels if isinstance(field, NoiseField) else field, dtype=np.float64)
    out = np.asarray(image, dtype=np.float64) + pixels
    if out.min() < -1e-9 or out.max() > 1.0 + 1e-9:
        raise BandmaskError(
            "masked image leaves [0, 1]; clipping prevention was not applied"
        )
    return out
