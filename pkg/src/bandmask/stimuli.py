"""Stimulus set assembly: seeded condition assignment, rendering, export.

A manifest is the experiment's ground truth: a deterministic, balanced
assignment of labeled source images to the 29 noise conditions, with one
derived noise seed per stimulus so rendering can run in parallel and still
be bit-reproducible.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from bandmask import __version__, imaging, noise
from bandmask.errors import ValidationError
from bandmask.taxonomy import CATEGORIES

PNG_MAX = 65535  # stimuli are stored as 16-bit grayscale PNG
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ManifestEntry:
    stimulus_id: str
    source_image_path: str
    category: str
    condition: noise.NoiseCondition
    noise_seed: int

    def to_dict(self):
        return {
            "stimulus_id": self.stimulus_id,
            "source_image_path": self.source_image_path,
            "category": self.category,
            "sd": self.condition.sd,
            "band_index": self.condition.band_index,
            "noise_seed": self.noise_seed,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            stimulus_id=d["stimulus_id"],
            source_image_path=d["source_image_path"],
            category=d["category"],
            condition=noise.NoiseCondition(float(d["sd"]), int(d["band_index"])),
            noise_seed=int(d["noise_seed"]),
        )


@dataclass
class StimulusManifest:
    master_seed: int
    entries: list  # presentation order
    config_snapshot: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    def by_id(self, stimulus_id):
        if not hasattr(self, "_index"):
            self._index = {e.stimulus_id: e for e in self.entries}
        return self._index[stimulus_id]

    def condition_counts(self):
        counts = {}
        for e in self.entries:
            counts[e.condition.key()] = counts.get(e.condition.key(), 0) + 1
        return counts

    def category_counts(self):
        counts = {c: 0 for c in CATEGORIES}
        for e in self.entries:
            counts[e.category] += 1
        return counts

    def validate(self):
        ids = [e.stimulus_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate stimulus_ids in manifest")
        seeds = [e.noise_seed for e in self.entries]
        if len(set(seeds)) != len(seeds):
            raise ValidationError("duplicate noise seeds in manifest")
        for e in self.entries:
            if e.category not in CATEGORIES:
                raise ValidationError(f"unknown category {e.category!r}")
        cond_counts = self.condition_counts()
        known = {c.key() for c in noise.all_conditions()}
        if not set(cond_counts) <= known:
            raise ValidationError("manifest references unknown noise conditions")
        per_cond = [cond_counts.get(k, 0) for k in known]
        if max(per_cond) - min(per_cond) > 1:
            raise ValidationError("per-condition counts differ by more than 1")
        return self

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "master_seed": self.master_seed,
            "config_snapshot": self.config_snapshot,
            "provenance": self.provenance,
            "categories": list(CATEGORIES),
            "entries": [e.to_dict() for e in self.entries],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValidationError(f"unsupported manifest schema {d.get('schema_version')}")
        return cls(
            master_seed=int(d["master_seed"]),
            entries=[ManifestEntry.from_dict(e) for e in d["entries"]],
            config_snapshot=d.get("config_snapshot", {}),
            provenance=d.get("provenance", {}),
        )

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f)).validate()


def derive_noise_seed(master_seed, stimulus_id):
    """Stable 64-bit per-stimulus seed from (master_seed, stimulus_id)."""
    h = hashlib.blake2b(f"{master_seed}:{stimulus_id}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big")


def assign_conditions(image_list, master_seed, config_snapshot=None):
    """Assign noise conditions to labeled images, balanced and seeded.

    image_list is a sequence of (path, category) pairs covering all 16
    categories. Presentation order is a seeded shuffle; conditions are dealt
    round-robin from a seeded shuffle of the 29 cells so per-condition
    counts never differ by more than 1.
    """
    image_list = list(image_list)
    if not image_list:
        raise ValidationError("image list is empty")
    if len(image_list) < len(noise.all_conditions()):
        raise ValidationError(
            f"need at least {len(noise.all_conditions())} images, got {len(image_list)}"
        )
    cats = {c for _, c in image_list}
    unknown = cats - set(CATEGORIES)
    if unknown:
        raise ValidationError(f"unknown categories: {sorted(unknown)}")
    missing = set(CATEGORIES) - cats
    if missing:
        raise ValidationError(f"categories missing from image list: {sorted(missing)}")

    rng = np.random.default_rng(master_seed)
    order = rng.permutation(len(image_list))
    conditions = noise.all_conditions()
    cond_order = rng.permutation(len(conditions))

    entries = []
    for k, img_idx in enumerate(order):
        path, category = image_list[int(img_idx)]
        sid = f"stim_{k:05d}"
        cond = conditions[int(cond_order[k % len(conditions)])]
        entries.append(
            ManifestEntry(
                stimulus_id=sid,
                source_image_path=str(path),
                category=category,
                condition=cond,
                noise_seed=derive_noise_seed(master_seed, sid),
            )
        )
    manifest = StimulusManifest(
        master_seed=master_seed,
        entries=entries,
        config_snapshot=config_snapshot or {},
        provenance={"tool_version": __version__},
    )
    return manifest.validate()


def select_balanced(image_list, n, master_seed):
    """Seeded subset of n images with per-category counts equal up to n % 16."""
    by_cat = {c: [] for c in CATEGORIES}
    for path, cat in image_list:
        if cat not in by_cat:
            raise ValidationError(f"unknown category {cat!r}")
        by_cat[cat].append((path, cat))
    rng = np.random.default_rng(master_seed)
    base, extra = divmod(n, len(CATEGORIES))
    extra_cats = set(np.array(CATEGORIES)[rng.permutation(len(CATEGORIES))[:extra]])
    chosen = []
    for cat in CATEGORIES:
        quota = base + (1 if cat in extra_cats else 0)
        pool = by_cat[cat]
        if len(pool) < quota:
            raise ValidationError(
                f"category {cat!r} has {len(pool)} images, needs {quota} for n={n}"
            )
        picks = rng.permutation(len(pool))[:quota]
        chosen.extend(pool[int(i)] for i in picks)
    return chosen


def render_stimulus(entry, preprocess_config=None, band_convention=noise.GEOMETRIC_OCTAVE):
    """Render one manifest entry: preprocess, add band noise, never clip.

    Returns (pixels, metadata); metadata records the condition, seed, and
    whether clipping prevention had to move any pixel.
    """
    rgb = imaging.load_rgb(entry.source_image_path)
    base = imaging.preprocess(rgb, preprocess_config)
    field = noise.noise_for_condition(entry.condition, entry.noise_seed, band_convention)
    adjusted = noise.prevent_clipping(base, field)
    out = noise.mask(adjusted, field)
    meta = {
        "stimulus_id": entry.stimulus_id,
        "category": entry.category,
        "sd": entry.condition.sd,
        "band_index": entry.condition.band_index,
        "noise_seed": entry.noise_seed,
        "clipping_adjusted": bool(not np.array_equal(adjusted, base)),
    }
    return out, meta


def save_png16(path, pixels):
    arr = np.round(np.asarray(pixels) * PNG_MAX).astype(np.uint16)
    Image.fromarray(arr).save(path, format="PNG")  # uint16 -> mode I;16


def load_png16(path):
    with Image.open(path) as im:
        arr = np.asarray(im, dtype=np.uint16)
    return arr.astype(np.float64) / PNG_MAX


def export_set(manifest, out_dir, render=True, preprocess_config=None,
               band_convention=noise.GEOMETRIC_OCTAVE, progress=None):
    """Write manifest.json and (optionally) one 16-bit PNG per entry.

    Returns the list of written stimulus paths. Rendering is a pure function
    of (entry, config), so exports are bit-reproducible.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_text(manifest.to_json())
    written = []
    if render:
        stim_dir = out_dir / "stimuli"
        stim_dir.mkdir(exist_ok=True)
        for i, entry in enumerate(manifest.entries):
            try:
                pixels, meta = render_stimulus(entry, preprocess_config, band_convention)
            except OSError as exc:
                raise OSError(f"failed to render {entry.source_image_path}: {exc}") from exc
            path = stim_dir / f"{entry.stimulus_id}.png"
            save_png16(path, pixels)
            written.append(path)
            if progress is not None:
                progress(i + 1, len(manifest.entries), meta)
    return written
