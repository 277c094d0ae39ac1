"""Fine-to-coarse category mapping and probability aggregation.

Maps the 1000 fine ImageNet classes onto 16 coarse object categories and
turns a fine-class probability vector into a coarse decision: each coarse
score is the mean probability of its member fine classes (no
renormalization), and the response is the argmax with ties broken by the
fixed category order.
"""

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from bandmask.errors import ValidationError

CATEGORIES = (
    "airplane", "bear", "bicycle", "bird", "boat", "bottle", "car", "cat",
    "chair", "clock", "dog", "elephant", "keyboard", "knife", "oven", "truck",
)

N_FINE = 1000


@dataclass
class ClassMapping:
    """Immutable fine-index -> coarse-category lookup."""

    members: dict  # category -> np.ndarray of fine indices
    version: str

    def __post_init__(self):
        seen = {}
        for cat, idx in self.members.items():
            if cat not in CATEGORIES:
                raise ValidationError(f"unknown coarse category {cat!r}")
            if len(idx) == 0:
                raise ValidationError(f"category {cat!r} has no member fine classes")
            for i in idx:
                i = int(i)
                if not (0 <= i < N_FINE):
                    raise ValidationError(f"fine index {i} out of range")
                if i in seen:
                    raise ValidationError(
                        f"fine index {i} mapped to both {seen[i]!r} and {cat!r}"
                    )
                seen[i] = cat
        missing = [c for c in CATEGORIES if c not in self.members]
        if missing:
            raise ValidationError(f"categories with no mapping: {missing}")

    @property
    def member_counts(self):
        return {c: len(self.members[c]) for c in CATEGORIES}

    def coarse_of(self, fine_index):
        for cat in CATEGORIES:
            if fine_index in self.members[cat]:
                return cat
        return None

    @classmethod
    def from_dict(cls, doc):
        members = {
            cat: np.asarray(sorted(int(i) for i in idx), dtype=np.int64)
            for cat, idx in doc["mapping"].items()
        }
        return cls(members=members, version=str(doc.get("version", "unknown")))

    @classmethod
    def from_file(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))

    @classmethod
    def default(cls):
        ref = resources.files("bandmask.data").joinpath("imagenet16.json")
        return cls.from_dict(json.loads(ref.read_text()))


def coarse_scores(fine_probs, mapping):
    """Average fine probabilities within each coarse category.

    Returns 16 scores in the fixed category order. Scores are plain means
    over member classes and need not sum to 1.
    """
    p = np.asarray(fine_probs, dtype=np.float64)
    if p.shape != (N_FINE,):
        raise ValidationError(f"expected {N_FINE} fine probabilities, got shape {p.shape}")
    if (p < 0).any():
        raise ValidationError("fine probabilities must be nonnegative")
    return np.array([p[mapping.members[c]].mean() for c in CATEGORIES])


def decide(scores, categories=CATEGORIES):
    """Argmax category; ties go to the earliest in the fixed order."""
    s = np.asarray(scores, dtype=np.float64)
    if s.shape != (len(categories),):
        raise ValidationError(f"expected {len(categories)} scores, got shape {s.shape}")
    if np.isnan(s).any():
        raise ValidationError("scores contain NaN")
    return categories[int(np.argmax(s))]
