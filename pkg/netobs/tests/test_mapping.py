import json

import pytest

from netobs.mapping import CATEGORIES, CoarseMapping


def test_loads_toolkit_format(mapping_file):
    m = CoarseMapping.load(mapping_file)
    assert all(len(m.members[c]) >= 1 for c in CATEGORIES)


def test_loads_flat_format(tmp_path):
    flat = {str(i): CATEGORIES[i % 16] for i in range(32)}
    path = tmp_path / "flat.json"
    path.write_text(json.dumps(flat))
    m = CoarseMapping.load(path)
    assert m.members["airplane"] == [0, 16]


def test_coarse_scores_are_member_means(mapping_file):
    m = CoarseMapping.load(mapping_file)
    probs = [0.0] * 1000
    for i in m.members["cat"]:
        probs[i] = 0.5
    scores = m.coarse_scores(probs)
    assert scores[CATEGORIES.index("cat")] == pytest.approx(0.5)
    assert scores[CATEGORIES.index("dog")] == 0.0
    assert m.decide(probs) == "cat"


def test_tie_breaks_to_first_category(mapping_file):
    m = CoarseMapping.load(mapping_file)
    assert m.decide([0.0] * 1000) == "airplane"


def test_wrong_length_rejected(mapping_file):
    m = CoarseMapping.load(mapping_file)
    with pytest.raises(ValueError):
        m.coarse_scores([0.0] * 999)
