"""Shape bias, least-squares line fits, and channel-property regressions.

Implements the downstream comparisons: per-observer shape bias from
cue-conflict responses, OLS with exact Student-t significance (cohorts are
small), the 3-predictor multiple R-squared, and the Bonferroni-gated grid
of line fits (3 properties x 3 network groups x 2 targets = 18 tests).
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import stdtr

from bandmask.errors import ValidationError

GROUP_ADVERSARIAL = "adversarial"
GROUP_NON_ADVERSARIAL = "non_adversarial"
GROUP_HUMAN = "human"
GROUP_ALL_NETWORKS = "all_networks"

REGRESSION_GROUPS = (GROUP_ALL_NETWORKS, GROUP_ADVERSARIAL, GROUP_NON_ADVERSARIAL)
PROPERTY_NAMES = ("bandwidth", "center_frequency", "peak_noise_sensitivity")
TARGET_SHAPE_BIAS = "shape_bias"
TARGET_WHITEBOX = "whitebox_accuracy"

MODE_ALL_IMAGES = "all_images"
MODE_SHAPE_OR_TEXTURE = "shape_or_texture_only"


@dataclass(frozen=True)
class CueConflictRecord:
    image_id: str
    shape_category: str
    texture_category: str
    response_category: str

    def __post_init__(self):
        if self.shape_category == self.texture_category:
            raise ValidationError(
                f"cue-conflict image {self.image_id} has matching shape and texture"
            )


def shape_bias(records, mode=MODE_ALL_IMAGES):
    """Fraction of cue-conflict images categorized by shape.

    all_images divides by every record; shape_or_texture_only divides by
    only the records answered with either the shape or texture category.
    """
    records = list(records)
    if not records:
        raise ValidationError("no cue-conflict records")
    n_shape = sum(r.response_category == r.shape_category for r in records)
    if mode == MODE_ALL_IMAGES:
        return n_shape / len(records)
    if mode != MODE_SHAPE_OR_TEXTURE:
        raise ValidationError(f"unknown shape-bias mode {mode!r}")
    n_texture = sum(r.response_category == r.texture_category for r in records)
    if n_shape + n_texture == 0:
        raise ValidationError("no response matched shape or texture category")
    return n_shape / (n_shape + n_texture)


@dataclass
class LineFit:
    slope: float
    intercept: float
    slope_se: float
    p_value: float
    r_squared: float
    n: int

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "slope_se": self.slope_se,
            "p_value": self.p_value,
            "r_squared": self.r_squared,
            "n": self.n,
        }


def ols(x, y):
    """Simple least-squares line with a two-sided t-test on the slope."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n < 3:
        raise ValidationError(f"need n >= 3 for a line fit, got {n}")
    if y.size != n:
        raise ValidationError("x and y lengths differ")
    sxx = float(((x - x.mean()) ** 2).sum())
    if sxx == 0.0:
        raise ValidationError("x is constant; slope undefined")
    sxy = float(((x - x.mean()) * (y - y.mean())).sum())
    slope = sxy / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    rss = float(resid @ resid)
    tss = float(((y - y.mean()) ** 2).sum())
    r_squared = 0.0 if tss == 0.0 else 1.0 - rss / tss
    dof = n - 2
    sigma2 = rss / dof
    slope_se = float(np.sqrt(sigma2 / sxx))
    if slope_se == 0.0:
        p = 0.0 if slope != 0.0 else 1.0
    else:
        t = slope / slope_se
        p = float(2.0 * stdtr(dof, -abs(t)))
    return LineFit(
        slope=float(slope),
        intercept=intercept,
        slope_se=slope_se,
        p_value=p,
        r_squared=float(r_squared),
        n=int(n),
    )


def multiple_r2(predictors, y):
    """R-squared of the least-squares fit of y on predictors plus intercept."""
    X = np.asarray(predictors, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ValidationError("predictors must be a 2-D matrix")
    n, k = X.shape
    if n < 5:
        raise ValidationError(f"need n >= 5 observations, got {n}")
    design = np.column_stack([np.ones(n), X])
    rank = np.linalg.matrix_rank(design)
    if rank < k + 1:
        corr = np.corrcoef(X, rowvar=False)
        np.fill_diagonal(corr, 0.0)
        i, j = np.unravel_index(np.nanargmax(np.abs(corr)), corr.shape)
        raise ValidationError(
            f"predictor matrix is rank deficient (rank {rank} < {k + 1}); "
            f"columns {i} and {j} are most collinear"
        )
    beta, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ beta
    rss = float(resid @ resid)
    tss = float(((y - y.mean()) ** 2).sum())
    if tss == 0.0:
        return 0.0
    return float(1.0 - rss / tss)


@dataclass
class ObserverSummary:
    observer_id: str
    bandwidth: float
    center_frequency: float
    peak_noise_sensitivity: float
    group: str
    shape_bias: float | None = None
    whitebox_accuracy: float | None = None

    def property_value(self, name):
        return getattr(self, name)

    def target_value(self, target):
        return getattr(self, target)


def group_of(kind, tags):
    """Deterministic regression group from an observer's kind and tags."""
    if kind == "human":
        return GROUP_HUMAN
    eps = tags.get("adversarial_training_eps")
    if eps is not None and float(eps) > 0:
        return GROUP_ADVERSARIAL
    return GROUP_NON_ADVERSARIAL


def _members(summaries, group):
    if group == GROUP_ALL_NETWORKS:
        return [s for s in summaries if s.group != GROUP_HUMAN]
    return [s for s in summaries if s.group == group]


def bonferroni_significant(p_value, alpha=0.05, m=18):
    """Strict gate: significant iff p < alpha / m."""
    if m < 1 or not (0 < alpha < 1):
        raise ValidationError("need m >= 1 and alpha in (0, 1)")
    return bool(p_value < alpha / m)


@dataclass
class RegressionReport:
    alpha: float
    m: int
    fits: list = field(default_factory=list)
    multiple_r2: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "m": self.m,
            "significance_threshold": self.alpha / self.m,
            "fits": self.fits,
            "multiple_r2": self.multiple_r2,
            "warnings": self.warnings,
            "provenance": self.provenance,
        }


def correlate(summaries, targets=(TARGET_SHAPE_BIAS, TARGET_WHITEBOX), alpha=0.05, m=18):
    """Per-(property, group, target) line fits with Bonferroni gating.

    A fit is flagged significant iff p < alpha/m. Groups with fewer than 3
    usable observers (or a constant predictor) are skipped with a warning;
    each target/group additionally gets the 3-predictor multiple R-squared
    when at least 5 observers carry the target.
    """
    summaries = list(summaries)
    report = RegressionReport(alpha=alpha, m=m)
    for target in targets:
        for group in REGRESSION_GROUPS:
            members = [s for s in _members(summaries, group) if s.target_value(target) is not None]
            y = np.array([s.target_value(target) for s in members], dtype=float)
            for prop in PROPERTY_NAMES:
                x = np.array([s.property_value(prop) for s in members], dtype=float)
                if len(members) < 3:
                    report.warnings.append(
                        f"{target}/{group}/{prop}: skipped, only {len(members)} observers"
                    )
                    continue
                try:
                    fit = ols(x, y)
                except ValidationError as exc:
                    report.warnings.append(f"{target}/{group}/{prop}: skipped, {exc}")
                    continue
                entry = fit.to_dict()
                entry.update(
                    target=target,
                    group=group,
                    property=prop,
                    significant=bonferroni_significant(fit.p_value, alpha, m),
                )
                report.fits.append(entry)
            if len(members) >= 5:
                X = np.array(
                    [[s.property_value(p) for p in PROPERTY_NAMES] for s in members]
                )
                try:
                    r2 = multiple_r2(X, y)
                except ValidationError as exc:
                    report.warnings.append(f"{target}/{group}: multiple R2 skipped, {exc}")
                else:
                    report.multiple_r2.append(
                        {"target": target, "group": group, "r_squared": r2, "n": len(members)}
                    )
            else:
                report.warnings.append(
                    f"{target}/{group}: multiple R2 skipped, only {len(members)} observers"
                )
    return report


SUMMARY_COLUMNS = (
    "observer_id",
    "bandwidth",
    "center_frequency",
    "peak_noise_sensitivity",
    "shape_bias",
    "whitebox_accuracy",
    "group",
)


def read_summaries_csv(path):
    """Observer summaries CSV; empty shape_bias/whitebox cells become None."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(SUMMARY_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValidationError(f"summaries CSV missing columns: {sorted(missing)}")
        for i, row in enumerate(reader):
            if row["group"] not in (GROUP_ADVERSARIAL, GROUP_NON_ADVERSARIAL, GROUP_HUMAN):
                raise ValidationError(f"row {i + 2}: unknown group {row['group']!r}")
            try:
                out.append(
                    ObserverSummary(
                        observer_id=row["observer_id"],
                        bandwidth=float(row["bandwidth"]),
                        center_frequency=float(row["center_frequency"]),
                        peak_noise_sensitivity=float(row["peak_noise_sensitivity"]),
                        group=row["group"],
                        shape_bias=float(row["shape_bias"]) if row["shape_bias"] else None,
                        whitebox_accuracy=(
                            float(row["whitebox_accuracy"]) if row["whitebox_accuracy"] else None
                        ),
                    )
                )
            except ValueError as exc:
                raise ValidationError(f"row {i + 2}: {exc}") from exc
    return out


def write_summaries_csv(path, summaries):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for s in summaries:
            writer.writerow(
                [
                    s.observer_id,
                    repr(s.bandwidth),
                    repr(s.center_frequency),
                    repr(s.peak_noise_sensitivity),
                    "" if s.shape_bias is None else repr(s.shape_bias),
                    "" if s.whitebox_accuracy is None else repr(s.whitebox_accuracy),
                    s.group,
                ]
            )


CUE_CONFLICT_COLUMNS = (
    "observer_id",
    "image_id",
    "shape_category",
    "texture_category",
    "response_category",
)


def read_cue_conflict_csv(path):
    """Cue-conflict responses CSV -> {observer_id: [CueConflictRecord]}."""
    out = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CUE_CONFLICT_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValidationError(f"cue-conflict CSV missing columns: {sorted(missing)}")
        for row in reader:
            out.setdefault(row["observer_id"], []).append(
                CueConflictRecord(
                    image_id=row["image_id"],
                    shape_category=row["shape_category"],
                    texture_category=row["texture_category"],
                    response_category=row["response_category"],
                )
            )
    return out


def shape_bias_by_observer(records_by_observer, mode=MODE_ALL_IMAGES):
    return {obs: shape_bias(recs, mode) for obs, recs in records_by_observer.items()}
