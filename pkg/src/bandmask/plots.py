"""SVG renderings: accuracy heatmap, channel curve, property scatters."""

import numpy as np

from bandmask.channel import FLAG_UNDEFINED
from bandmask.gaussfit import gaussian
from bandmask.noise import N_BANDS, SD_LEVELS, BASE_CENTER_CPI
from bandmask.stats import PROPERTY_NAMES, REGRESSION_GROUPS


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


_BAND_LABELS = [f"{BASE_CENTER_CPI * 2.0**b:g}" for b in range(N_BANDS)]


def heatmap_svg(hm, path, title="accuracy per noise condition"):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    im = ax.imshow(hm.accuracy, vmin=0, vmax=1, cmap="viridis", aspect="auto")
    ax.set_xticks(range(N_BANDS), _BAND_LABELS)
    ax.set_yticks(range(len(SD_LEVELS)), [f"{sd:g}" for sd in SD_LEVELS])
    ax.set_xlabel("band center (cycles/image)")
    ax.set_ylabel("noise SD")
    ax.set_title(title)
    fig.colorbar(im, ax=ax, label="proportion correct")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def channel_svg(profile, fit, path, title="noise-sensitivity channel"):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    bands = profile.defined_bands()
    ax.plot(bands, profile.threshold_index[bands], "ko", label="threshold index")
    for b in range(N_BANDS):
        if profile.flags[b] == FLAG_UNDEFINED:
            ax.axvspan(b - 0.2, b + 0.2, color="0.9")
    if fit is not None:
        xs = np.linspace(-0.5, N_BANDS - 0.5, 200)
        ax.plot(xs, gaussian(xs, fit.a, fit.mu, fit.sigma), "k-", lw=1.2,
                label=f"fit A={fit.a:.2f} mu={fit.mu:.2f} sigma={fit.sigma:.2f}")
    ax.set_xticks(range(N_BANDS), _BAND_LABELS)
    ax.set_xlabel("band center (cycles/image)")
    ax.set_ylabel("threshold index (log2 noise SD scale)")
    ax.set_ylim(-0.2, 4.4)
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


_GROUP_STYLE = {
    "all_networks": ("0.4", "--"),
    "adversarial": ("tab:blue", "--"),
    "non_adversarial": ("crimson", "--"),
}


def scatter_svg(summaries, report, target, path):
    """One row of scatters: each channel property against the target."""
    plt = _pyplot()
    fig, axes = plt.subplots(1, len(PROPERTY_NAMES), figsize=(12, 3.6), sharey=True)
    nets = [s for s in summaries if s.group != "human" and s.target_value(target) is not None]
    fits = {(f["property"], f["group"]): f for f in report.fits if f["target"] == target}
    for ax, prop in zip(axes, PROPERTY_NAMES):
        xs = np.array([s.property_value(prop) for s in nets])
        ys = np.array([s.target_value(target) for s in nets])
        colors = ["tab:blue" if s.group == "adversarial" else "0.55" for s in nets]
        ax.scatter(xs, ys, c=colors, s=18)
        for group in REGRESSION_GROUPS:
            f = fits.get((prop, group))
            if f is None or not f["significant"]:
                continue  # Bonferroni-gated: only significant lines drawn
            color, ls = _GROUP_STYLE[group]
            gx = np.linspace(xs.min(), xs.max(), 2)
            ax.plot(gx, f["intercept"] + f["slope"] * gx, ls, color=color, lw=1.2)
        ax.set_xlabel(prop.replace("_", " "))
    axes[0].set_ylabel(target.replace("_", " "))
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
