import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bandmask.errors import ProtocolError
from bandmask.records import BLOCK_TEST, BLOCK_TRAINING, read_records
from bandmask.session import (
    BlockPlan,
    SubprocessObserver,
    decode,
    encode,
    exclude_low_performers,
    run_session,
)
from bandmask.taxonomy import CATEGORIES
from conftest import OBSERVER_CMD, synthetic_manifest


@pytest.fixture()
def manifest_file(tmp_path):
    manifest = synthetic_manifest(58, seed=4)
    path = tmp_path / "manifest.json"
    path.write_text(manifest.to_json())
    return manifest, path


def observer_cmd(*args):
    return OBSERVER_CMD + list(args)


class TestProtocol:
    @given(
        observer_id=st.text(min_size=1, max_size=12),
        kind=st.sampled_from(["human", "network"]),
        stimulus_id=st.text(min_size=1, max_size=12),
        category=st.sampled_from(CATEGORIES),
    )
    @settings(max_examples=50, deadline=None)
    def test_roundtrip_every_message_type(self, observer_id, kind, stimulus_id, category):
        messages = [
            {"type": "hello", "observer_id": observer_id, "kind": kind},
            {"type": "stimulus", "stimulus_id": stimulus_id, "labels": list(CATEGORIES)},
            {"type": "response", "stimulus_id": stimulus_id, "category": category},
            {"type": "bye"},
            {"type": "error", "reason": "boom"},
        ]
        for msg in messages:
            assert decode(encode(msg)) == msg

    def test_bad_json_rejected(self):
        with pytest.raises(ProtocolError):
            decode("{not json")

    def test_missing_field_rejected(self):
        with pytest.raises(ProtocolError):
            decode(json.dumps({"type": "hello", "observer_id": "x"}))

    def test_wrong_label_count_rejected(self):
        with pytest.raises(ProtocolError):
            encode({"type": "stimulus", "stimulus_id": "s", "labels": ["cat"]})

    def test_unknown_kind_rejected(self):
        with pytest.raises(ProtocolError):
            encode({"type": "hello", "observer_id": "x", "kind": "robot"})


class TestBlockPlan:
    def test_defaults_match_protocol(self):
        plan = BlockPlan()
        assert plan.training_trials == 50
        assert plan.test_blocks == 5
        assert plan.trials_per_test_block == 210
        assert plan.total_trials == 1100

    def test_block_of(self):
        plan = BlockPlan(training_trials=2, test_blocks=2, trials_per_test_block=3)
        assert plan.block_of(0) == (BLOCK_TRAINING, 0)
        assert plan.block_of(1) == (BLOCK_TRAINING, 0)
        assert plan.block_of(2) == (BLOCK_TEST, 0)
        assert plan.block_of(5) == (BLOCK_TEST, 1)

    def test_too_large_for_manifest_rejected(self):
        from bandmask.errors import ValidationError

        with pytest.raises(ValidationError):
            BlockPlan().validate(100)


class TestRunSession:
    def test_oracle_full_accuracy(self, manifest_file, tmp_path):
        manifest, path = manifest_file
        out = tmp_path / "oracle.csv"
        with SubprocessObserver(observer_cmd("--kind", "oracle", "--manifest", str(path))) as obs:
            records = run_session(manifest, obs, BlockPlan.single_block(58), out)
        assert len(records) == 58
        assert all(r.correct for r in records)
        assert all(r.block == BLOCK_TEST for r in records)

    def test_fixed_answer_accuracy_matches_manifest(self, manifest_file, tmp_path):
        manifest, path = manifest_file
        out = tmp_path / "fixed.csv"
        cmd = observer_cmd("--kind", "fixed", "--category", "dog", "--manifest", str(path))
        with SubprocessObserver(cmd) as obs:
            records = run_session(manifest, obs, BlockPlan.single_block(58), out)
        by_cond = {}
        for r in records:
            key = (r.sd, r.band_index)
            by_cond.setdefault(key, []).append(r)
        for entry in manifest.entries:
            key = entry.condition.key()
            expected = sum(
                1 for e in manifest.entries
                if e.condition.key() == key and e.category == "dog"
            )
            got = sum(r.correct for r in by_cond[key])
            assert got == expected

    def test_training_and_test_blocks_recorded(self, manifest_file, tmp_path):
        manifest, path = manifest_file
        plan = BlockPlan(training_trials=8, test_blocks=2, trials_per_test_block=25)
        out = tmp_path / "blocks.csv"
        with SubprocessObserver(observer_cmd("--kind", "oracle", "--manifest", str(path))) as obs:
            records = run_session(manifest, obs, plan, out)
        assert sum(r.block == BLOCK_TRAINING for r in records) == 8
        assert sum(r.block == BLOCK_TEST for r in records) == 50

    def test_resume_after_crash_no_duplicates(self, manifest_file, tmp_path):
        manifest, path = manifest_file
        out = tmp_path / "crashy.csv"
        cmd = observer_cmd("--kind", "oracle", "--manifest", str(path), "--die-after", "20")
        with pytest.raises(ProtocolError):
            with SubprocessObserver(cmd) as obs:
                run_session(manifest, obs, BlockPlan.single_block(58), out)
        partial = read_records(out)
        assert len(partial) == 20
        with SubprocessObserver(observer_cmd("--kind", "oracle", "--manifest", str(path))) as obs:
            records = run_session(manifest, obs, BlockPlan.single_block(58), out)
        assert len(records) == 58
        ids = [r.stimulus_id for r in records]
        assert len(set(ids)) == 58
        # resumed portion appended after the crash survivors
        assert [r.stimulus_id for r in records[:20]] == [r.stimulus_id for r in partial]

    def test_channel_observer_deterministic_replay(self, manifest_file, tmp_path):
        manifest, path = manifest_file
        cmd = observer_cmd("--kind", "channel", "--manifest", str(path), "--seed", "5")
        outs = []
        for name in ("a.csv", "b.csv"):
            with SubprocessObserver(cmd) as obs:
                run_session(manifest, obs, BlockPlan.single_block(58), tmp_path / name)
            outs.append([
                (r.stimulus_id, r.response_category) for r in read_records(tmp_path / name)
            ])
        assert outs[0] == outs[1]


class TestExclusion:
    def _records(self, manifest, path, tmp_path, kind_args, name):
        out = tmp_path / f"{name}.csv"
        cmd = observer_cmd(*kind_args, "--manifest", str(path), "--observer-id", name)
        with SubprocessObserver(cmd) as obs:
            return run_session(manifest, obs, BlockPlan.single_block(58), out)

    def test_oracle_kept_fixed_excluded(self, manifest_file, tmp_path):
        manifest, path = manifest_file
        records = self._records(manifest, path, tmp_path, ["--kind", "oracle"], "keeper")
        records += self._records(
            manifest, path, tmp_path, ["--kind", "fixed", "--category", "dog"], "dogged"
        )
        verdict = exclude_low_performers(records)
        assert verdict.kept == ["keeper"]
        assert verdict.excluded == ["dogged"]

    def test_boundary_exactly_half_kept(self):
        from bandmask.records import ResponseRecord

        recs = []
        for i in range(10):
            correct = i < 5
            recs.append(
                ResponseRecord(
                    observer_id="edge",
                    stimulus_id=f"s{i}",
                    block=BLOCK_TEST,
                    sd=0.0,
                    band_index=-1,
                    true_category="cat",
                    response_category="cat" if correct else "dog",
                    correct=correct,
                    timestamp="t",
                )
            )
        verdict = exclude_low_performers(recs)
        assert verdict.kept == ["edge"]
        assert verdict.baseline_accuracy["edge"] == 0.5

    def test_no_baseline_flagged(self):
        from bandmask.records import ResponseRecord

        recs = [
            ResponseRecord("nobase", "s0", BLOCK_TEST, 0.08, 3, "cat", "cat", True, "t")
        ]
        verdict = exclude_low_performers(recs)
        assert verdict.flagged_no_baseline == ["nobase"]
        assert verdict.kept == [] and verdict.excluded == []

    def test_training_trials_ignored(self):
        from bandmask.records import ResponseRecord

        recs = [
            ResponseRecord("tr", f"s{i}", BLOCK_TRAINING, 0.0, -1, "cat", "cat", True, "t")
            for i in range(5)
        ] + [
            ResponseRecord("tr", f"t{i}", BLOCK_TEST, 0.0, -1, "cat", "dog", False, "t")
            for i in range(5)
        ]
        verdict = exclude_low_performers(recs)
        assert verdict.excluded == ["tr"]  # only the failed test trials count
