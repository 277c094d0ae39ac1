"""Fine-to-coarse category mapping loaded from the toolkit's JSON file.

Accepts either published shape: {"mapping": {category: [fine indices]}} or
the flat {fine_index: category} dictionary.
"""

import json

CATEGORIES = (
    "airplane", "bear", "bicycle", "bird", "boat", "bottle", "car", "cat",
    "chair", "clock", "dog", "elephant", "keyboard", "knife", "oven", "truck",
)

N_FINE = 1000


class CoarseMapping:
    def __init__(self, members):
        self.members = {c: sorted(int(i) for i in members[c]) for c in CATEGORIES}
        for cat in CATEGORIES:
            if not self.members[cat]:
                raise ValueError(f"category {cat!r} has no fine classes")

    @classmethod
    def load(cls, path):
        with open(path) as f:
            doc = json.load(f)
        if "mapping" in doc:
            return cls(doc["mapping"])
        members = {c: [] for c in CATEGORIES}
        for fine, cat in doc.items():
            members[cat].append(int(fine))
        return cls(members)

    def coarse_scores(self, fine_probs):
        """Mean fine-class probability per coarse category (fixed order)."""
        if len(fine_probs) != N_FINE:
            raise ValueError(f"expected {N_FINE} probabilities, got {len(fine_probs)}")
        return [
            sum(fine_probs[i] for i in self.members[c]) / len(self.members[c])
            for c in CATEGORIES
        ]

    def decide(self, fine_probs):
        scores = self.coarse_scores(fine_probs)
        best = max(range(len(CATEGORIES)), key=lambda i: (scores[i], -i))
        return CATEGORIES[best]
