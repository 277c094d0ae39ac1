"""Toolkit-wide configuration and provenance stamping."""

import hashlib
import json
from dataclasses import dataclass, field

from bandmask import __version__
from bandmask.channel import FIT_TO_AVERAGE, AVERAGE_OF_FITS
from bandmask.errors import ValidationError
from bandmask.gaussfit import A_MAX_DEFAULT
from bandmask.imaging import PreprocessConfig
from bandmask.noise import BAND_CONVENTIONS, GEOMETRIC_OCTAVE, SD_LEVELS
from bandmask.session.runner import BlockPlan
from bandmask.stats import MODE_ALL_IMAGES, MODE_SHAPE_OR_TEXTURE


@dataclass
class AnalysisConfig:
    a_max: float = A_MAX_DEFAULT
    aggregation_mode: str = FIT_TO_AVERAGE
    shape_bias_mode: str = MODE_ALL_IMAGES
    include_training_trials: bool = False
    normalize_baseline: bool = False
    exclusion_threshold: float = 0.5
    alpha: float = 0.05
    bonferroni_m: int = 18

    def validate(self):
        if self.a_max <= 0:
            raise ValidationError("a_max must be positive")
        if self.aggregation_mode not in (FIT_TO_AVERAGE, AVERAGE_OF_FITS):
            raise ValidationError(f"unknown aggregation mode {self.aggregation_mode!r}")
        if self.shape_bias_mode not in (MODE_ALL_IMAGES, MODE_SHAPE_OR_TEXTURE):
            raise ValidationError(f"unknown shape-bias mode {self.shape_bias_mode!r}")
        if not (0 < self.exclusion_threshold <= 1):
            raise ValidationError("exclusion_threshold must be in (0, 1]")
        if not (0 < self.alpha < 1) or self.bonferroni_m < 1:
            raise ValidationError("bad significance parameters")
        return self

    def to_dict(self):
        return {
            "a_max": self.a_max,
            "aggregation_mode": self.aggregation_mode,
            "shape_bias_mode": self.shape_bias_mode,
            "include_training_trials": self.include_training_trials,
            "normalize_baseline": self.normalize_baseline,
            "exclusion_threshold": self.exclusion_threshold,
            "alpha": self.alpha,
            "bonferroni_m": self.bonferroni_m,
        }


@dataclass
class ToolkitConfig:
    preprocessing: PreprocessConfig = field(default_factory=PreprocessConfig)
    band_convention: str = GEOMETRIC_OCTAVE
    block_plan: BlockPlan = field(default_factory=BlockPlan)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    master_seed: int = 0
    trial_timeout_s: float = 60.0

    def validate(self):
        self.preprocessing.validate()
        self.analysis.validate()
        if self.band_convention not in BAND_CONVENTIONS:
            raise ValidationError(f"unknown band convention {self.band_convention!r}")
        if self.master_seed < 0:
            raise ValidationError("master_seed must be nonnegative")
        if self.trial_timeout_s <= 0:
            raise ValidationError("trial_timeout_s must be positive")
        return self

    def to_dict(self):
        return {
            "preprocessing": self.preprocessing.to_dict(),
            "band_convention": self.band_convention,
            "sd_levels": list(SD_LEVELS),
            "block_plan": self.block_plan.to_dict(),
            "analysis": self.analysis.to_dict(),
            "master_seed": self.master_seed,
            "trial_timeout_s": self.trial_timeout_s,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d.pop("sd_levels", None)  # fixed ladder, recorded for provenance only
        if "preprocessing" in d:
            d["preprocessing"] = PreprocessConfig.from_dict(d["preprocessing"])
        if "block_plan" in d:
            d["block_plan"] = BlockPlan(**d["block_plan"])
        if "analysis" in d:
            d["analysis"] = AnalysisConfig(**d["analysis"])
        return cls(**d).validate()

    @classmethod
    def load(cls, path):
        with open(path) as f:
            try:
                doc = json.load(f)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def build_provenance(config, inputs=None):
    """Provenance block embedded in every output artifact."""
    return {
        "tool_version": __version__,
        "config": config.to_dict() if hasattr(config, "to_dict") else config,
        "input_digests": {
            name: file_digest(path) for name, path in (inputs or {}).items()
        },
    }
