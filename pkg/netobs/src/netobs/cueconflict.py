"""Cue-conflict evaluation producing the analysis-side CSV schema."""

import csv

import numpy as np
import torch
from PIL import Image

from netobs.observer import classify

CSV_COLUMNS = (
    "observer_id",
    "image_id",
    "shape_category",
    "texture_category",
    "response_category",
)


def read_index(path):
    """Index CSV of the cue-conflict set: image_path,shape,texture rows."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["shape_category"] == row["texture_category"]:
                raise ValueError(f"{row['image_path']}: shape equals texture")
            rows.append(row)
    if not rows:
        raise ValueError(f"no cue-conflict entries in {path}")
    return rows


def _load_rgb(path):
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    return torch.from_numpy(arr).permute(2, 0, 1)


def cue_conflict_eval(model, mapping, index_rows, observer_id):
    """One response record per cue-conflict image."""
    records = []
    for row in index_rows:
        pixels = _load_rgb(row["image_path"])
        category, _ = classify(model, pixels, mapping)
        records.append(
            {
                "observer_id": observer_id,
                "image_id": row.get("image_id") or row["image_path"],
                "shape_category": row["shape_category"],
                "texture_category": row["texture_category"],
                "response_category": category,
            }
        )
    return records


def write_records(path, records):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(records)
