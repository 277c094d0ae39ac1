import math
import sys

import numpy as np
import pytest
from PIL import Image

from bandmask import channel, stimuli
from bandmask.gaussfit import gaussian
from bandmask.noise import SD_LEVELS, N_BANDS, all_conditions
from bandmask.records import BLOCK_TEST, ResponseRecord
from bandmask.taxonomy import CATEGORIES

OBSERVER_CMD = [sys.executable, "-m", "bandmask.observers"]


def fake_image_list(n):
    """(path, category) pairs cycling through all 16 categories; paths need
    not exist for manifest-only workflows."""
    return [(f"/img/{CATEGORIES[i % 16]}/{i:04d}.png", CATEGORIES[i % 16]) for i in range(n)]


def synthetic_manifest(n, seed=0):
    return stimuli.assign_conditions(fake_image_list(n), seed)


@pytest.fixture(scope="session")
def image_corpus(tmp_path_factory):
    """Small on-disk corpus: 16 categories x 4 images of varying sizes."""
    root = tmp_path_factory.mktemp("corpus")
    rng = np.random.default_rng(7)
    sizes = [(64, 48), (48, 64), (80, 80), (56, 72)]
    for cat in CATEGORIES:
        d = root / cat
        d.mkdir()
        for k, (w, h) in enumerate(sizes):
            arr = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
            Image.fromarray(arr, mode="RGB").save(d / f"{cat}_{k}.png")
    return root


def phi(z):
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def planted_accuracy(condition, a, mu, sigma, base=0.9375, floor=0.0625, width=0.5):
    """Planted-channel psychometric accuracy for one condition."""
    if condition.is_zero:
        return base
    s = math.log2(0.32 / condition.sd)
    t = float(gaussian(np.array([float(condition.band_index)]), a, mu, sigma)[0])
    return floor + (base - floor) * phi((s - t) / width)


def simulate_records(a, mu, sigma, trials_per_condition, seed=0, observer_id="sim",
                     base=0.9375, floor=0.0625, width=0.5):
    """Direct (in-process) record synthesis for a planted channel."""
    rng = np.random.default_rng(seed)
    records = []
    k = 0
    for cond in all_conditions():
        p = planted_accuracy(cond, a, mu, sigma, base, floor, width)
        for _ in range(trials_per_condition):
            correct = rng.random() < p
            true_cat = CATEGORIES[k % 16]
            resp = true_cat if correct else CATEGORIES[(k + 1) % 16]
            records.append(
                ResponseRecord(
                    observer_id=observer_id,
                    stimulus_id=f"s{k:06d}",
                    block=BLOCK_TEST,
                    sd=cond.sd,
                    band_index=cond.band_index,
                    true_category=true_cat,
                    response_category=resp,
                    correct=correct,
                    timestamp="2000-01-01T00:00:00+00:00",
                )
            )
            k += 1
    return records


def heatmap_from_accuracy(acc, trials=1000):
    acc = np.asarray(acc, dtype=float)
    assert acc.shape == (len(SD_LEVELS), N_BANDS)
    return channel.AccuracyHeatmap(accuracy=acc.copy(), counts=np.full(acc.shape, float(trials)))
