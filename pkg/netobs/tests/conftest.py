import subprocess
import sys
from importlib import resources
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

CATEGORIES = (
    "airplane", "bear", "bicycle", "bird", "boat", "bottle", "car", "cat",
    "chair", "clock", "dog", "elephant", "keyboard", "knife", "oven", "truck",
)


@pytest.fixture(scope="session")
def mapping_file():
    # the toolkit ships the mapping as package data; consume it as a file
    return str(resources.files("bandmask.data").joinpath("imagenet16.json"))


@pytest.fixture(scope="session")
def stimulus_set(tmp_path_factory):
    """58-stimulus rendered set (2 per condition) built via the toolkit CLI."""
    root = tmp_path_factory.mktemp("netobs_corpus")
    rng = np.random.default_rng(5)
    for cat in CATEGORIES:
        d = root / cat
        d.mkdir()
        for k in range(4):
            arr = rng.integers(0, 256, size=(48, 64, 3), dtype=np.uint8)
            Image.fromarray(arr, mode="RGB").save(d / f"{k}.png")
    out = tmp_path_factory.mktemp("netobs_set") / "set"
    subprocess.run(
        [
            sys.executable, "-m", "bandmask.cli", "generate",
            "--images", str(root), "--n", "58", "--seed", "21", "--out", str(out),
        ],
        check=True,
        capture_output=True,
    )
    return Path(out)
