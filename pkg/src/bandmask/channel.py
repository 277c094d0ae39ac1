"""From response records to the spatial-frequency channel.

Pipeline: per-condition accuracy heatmap -> per-band 50%-accuracy noise
thresholds on the log2 index scale ({>0.16, 0.16, 0.08, 0.04, 0.02} maps to
{0, 1, 2, 3, 4}) -> bounded Gaussian fit over band index -> the three
channel properties (bandwidth in octaves, center frequency in cycles/image,
peak noise sensitivity).
"""

import math
from dataclasses import dataclass

import numpy as np

from bandmask import gaussfit
from bandmask.errors import ValidationError
from bandmask.noise import N_BANDS, SD_LEVELS, BASE_CENTER_CPI

FLAG_INTERPOLATED = "interpolated"
FLAG_CLAMPED_AT_0 = "clamped_at_0"  # still >= 50% correct at SD 0.16
FLAG_CLAMPED_AT_4 = "clamped_at_4"  # already < 50% correct at SD 0.02
FLAG_UNDEFINED = "undefined"

_ROW_OF_SD = {sd: i for i, sd in enumerate(SD_LEVELS)}


def sd_to_index(sd):
    """Threshold-index encoding: SD = 0.32 * 2**(-index)."""
    return math.log2(0.32 / sd)


@dataclass
class AccuracyHeatmap:
    """Proportion correct per (SD level, band) cell, plus trial counts.

    Row 0 is the zero-noise condition; its accuracy and count are
    replicated across all 7 band columns (the condition has no band), so
    total_trials counts row 0 once.
    """

    accuracy: np.ndarray  # (5, 7)
    counts: np.ndarray  # (5, 7)

    @property
    def baseline_accuracy(self):
        return float(self.accuracy[0, 0])

    @property
    def total_trials(self):
        return int(self.counts[1:].sum() + self.counts[0, 0])

    def merged_with(self, other):
        counts = self.counts + other.counts
        num = self.accuracy * self.counts + other.accuracy * other.counts
        with np.errstate(invalid="ignore"):
            acc = np.where(counts > 0, num / np.maximum(counts, 1), 0.0)
        return AccuracyHeatmap(accuracy=acc, counts=counts)

    def to_dict(self):
        return {
            "sd_levels": list(SD_LEVELS),
            "band_centers": [BASE_CENTER_CPI * 2.0**b for b in range(N_BANDS)],
            "accuracy": self.accuracy.tolist(),
            "counts": self.counts.tolist(),
        }


def heatmap(records):
    """Accuracy heatmap from (already filtered) response records."""
    correct = np.zeros((len(SD_LEVELS), N_BANDS))
    counts = np.zeros((len(SD_LEVELS), N_BANDS))
    for r in records:
        if r.sd not in _ROW_OF_SD:
            raise ValidationError(f"record has unknown SD level {r.sd}")
        row = _ROW_OF_SD[r.sd]
        if row == 0:
            counts[0, :] += 1
            correct[0, :] += r.correct
        else:
            if not (0 <= r.band_index < N_BANDS):
                raise ValidationError(f"record has bad band_index {r.band_index}")
            counts[row, r.band_index] += 1
            correct[row, r.band_index] += r.correct
    with np.errstate(invalid="ignore"):
        acc = np.where(counts > 0, correct / np.maximum(counts, 1), 0.0)
    return AccuracyHeatmap(accuracy=acc, counts=counts)


@dataclass
class ThresholdProfile:
    threshold_index: np.ndarray  # (7,) floats in [0, 4]
    flags: list  # (7,) flag strings

    def defined_bands(self):
        return [b for b in range(N_BANDS) if self.flags[b] != FLAG_UNDEFINED]

    def to_dict(self):
        return {
            "threshold_index": self.threshold_index.tolist(),
            "flags": list(self.flags),
        }


def _band_threshold(points):
    """50% crossing on the index axis from (index, accuracy) measurements.

    points are ordered weak-to-strong noise (descending index). The first
    adjacent pair straddling 50% is interpolated linearly; profiles that
    never drop below 50% clamp to index 0, and ones already below 50% at
    the weakest noise clamp to index 4.
    """
    if not points:
        return np.nan, FLAG_UNDEFINED
    if points[0][1] < 0.5:
        return 4.0, FLAG_CLAMPED_AT_4
    for (s_hi, a_hi), (s_lo, a_lo) in zip(points, points[1:]):
        if a_hi >= 0.5 > a_lo:
            t = s_hi - (a_hi - 0.5) / (a_hi - a_lo) * (s_hi - s_lo)
            return float(t), FLAG_INTERPOLATED
    return 0.0, FLAG_CLAMPED_AT_0


def thresholds(hm, normalize_baseline=False):
    """Per-band 50%-accuracy threshold indices from a heatmap.

    With normalize_baseline=True each cell is divided by the zero-noise
    accuracy before the crossing is computed (usable for observers whose
    baseline is below the exclusion cutoff).
    """
    scale = 1.0
    if normalize_baseline:
        if hm.counts[0, 0] == 0 or hm.baseline_accuracy <= 0:
            raise ValidationError("baseline accuracy unavailable or zero")
        scale = 1.0 / hm.baseline_accuracy
    values = np.full(N_BANDS, np.nan)
    flags = [FLAG_UNDEFINED] * N_BANDS
    for b in range(N_BANDS):
        points = []
        for row in range(1, len(SD_LEVELS)):
            if hm.counts[row, b] > 0:
                points.append((sd_to_index(SD_LEVELS[row]), hm.accuracy[row, b] * scale))
        points.sort(key=lambda p: -p[0])
        values[b], flags[b] = _band_threshold(points)
    return ThresholdProfile(threshold_index=values, flags=flags)


def normalized_thresholds(hm):
    return thresholds(hm, normalize_baseline=True)


@dataclass
class ChannelFit:
    a: float
    mu: float
    sigma: float
    se_a: float
    se_mu: float
    se_sigma: float
    rss: float
    n_bands: int
    converged: bool
    degenerate: bool
    fitted_bands: list = None

    def to_dict(self):
        return {
            "a": self.a,
            "mu": self.mu,
            "sigma": self.sigma,
            "se_a": self.se_a,
            "se_mu": self.se_mu,
            "se_sigma": self.se_sigma,
            "rss": self.rss,
            "n_bands": self.n_bands,
            "converged": self.converged,
            "degenerate": self.degenerate,
            "fitted_bands": self.fitted_bands,
        }


def fit_channel(profile, a_max=gaussfit.A_MAX_DEFAULT, censor_clamped_low=True):
    """Bounded Gaussian fit of threshold index over band index 0..6.

    Bands flagged undefined are excluded; at least 4 must remain. A
    clamped_at_0 band is a censored measurement (the true crossing lies
    below the measurable grid, recorded as 0, biased low by up to one index
    unit), so when at least 4 uncensored bands over-determine the curve the
    censored ones are left out; with fewer, they carry the only flank
    information and are kept as zeros. A profile with no inverted-U
    structure (all thresholds equal, or no band ever driven below 50%) is
    fitted anyway but flagged degenerate.
    """
    bands = profile.defined_bands()
    if len(bands) < 4:
        raise ValidationError(f"only {len(bands)} defined bands, need >= 4")
    fitted = bands
    if censor_clamped_low:
        uncensored = [b for b in bands if profile.flags[b] != FLAG_CLAMPED_AT_0]
        if len(uncensored) >= 4:
            fitted = uncensored
    x = np.array(fitted, dtype=float)
    y = profile.threshold_index[fitted]
    degenerate = float(np.max(y)) <= 0.0 or np.allclose(y, y[0])
    res = gaussfit.fit_gaussian(x, y, a_max=a_max)
    return ChannelFit(
        a=res.a,
        mu=res.mu,
        sigma=res.sigma,
        se_a=res.se_a,
        se_mu=res.se_mu,
        se_sigma=res.se_sigma,
        rss=res.rss,
        n_bands=res.n_points,
        converged=res.converged,
        degenerate=degenerate,
        fitted_bands=list(fitted),
    )


@dataclass
class ChannelProperties:
    bandwidth: float  # octaves, log2 full width at half max
    center_frequency: float  # cycles/image
    peak_noise_sensitivity: float  # 1.0 means 50% threshold at SD 0.02

    def to_dict(self):
        return {
            "bandwidth": self.bandwidth,
            "center_frequency": self.center_frequency,
            "peak_noise_sensitivity": self.peak_noise_sensitivity,
        }


def channel_properties(fit):
    """The three closed-form channel properties of a Gaussian fit."""
    return ChannelProperties(
        bandwidth=2.0 * fit.sigma * math.sqrt(math.log(4.0)),
        center_frequency=BASE_CENTER_CPI * 2.0**fit.mu,
        peak_noise_sensitivity=2.0 ** (fit.a - 4.0),
    )


FIT_TO_AVERAGE = "fit_to_average"
AVERAGE_OF_FITS = "average_of_fits"


@dataclass
class CohortSummary:
    mode: str
    n_observers: int
    properties_mean: dict
    properties_sd: dict
    per_observer: dict


def aggregate_humans(records_by_observer, mode=FIT_TO_AVERAGE, a_max=gaussfit.A_MAX_DEFAULT):
    """Pool observers before fitting, or summarize per-observer fits.

    fit_to_average pools every observer's records into one heatmap and
    returns a single ChannelFit. average_of_fits fits each observer
    separately and returns the mean and SD of each channel property.
    """
    if len(records_by_observer) < 2:
        raise ValidationError("need at least 2 observers to aggregate")
    if mode == FIT_TO_AVERAGE:
        pooled = [r for recs in records_by_observer.values() for r in recs]
        return fit_channel(thresholds(heatmap(pooled)), a_max=a_max)
    if mode != AVERAGE_OF_FITS:
        raise ValidationError(f"unknown aggregation mode {mode!r}")
    per_observer = {}
    for obs, recs in records_by_observer.items():
        fit = fit_channel(thresholds(heatmap(recs)), a_max=a_max)
        per_observer[obs] = channel_properties(fit).to_dict()
    keys = ("bandwidth", "center_frequency", "peak_noise_sensitivity")
    means = {k: float(np.mean([p[k] for p in per_observer.values()])) for k in keys}
    sds = {k: float(np.std([p[k] for p in per_observer.values()], ddof=1)) for k in keys}
    return CohortSummary(
        mode=mode,
        n_observers=len(per_observer),
        properties_mean=means,
        properties_sd=sds,
        per_observer=per_observer,
    )
