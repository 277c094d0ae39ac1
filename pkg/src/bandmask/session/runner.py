"""Drive an observer through a manifest, persisting crash-safe records."""

from dataclasses import dataclass

from bandmask.errors import ProtocolError, ValidationError
from bandmask.records import (
    BLOCK_TEST,
    BLOCK_TRAINING,
    RecordWriter,
    make_record,
    read_records,
)
from bandmask.session.protocol import MSG_BYE, MSG_HELLO, MSG_RESPONSE, MSG_STIMULUS
from bandmask.taxonomy import CATEGORIES


@dataclass(frozen=True)
class BlockPlan:
    training_trials: int = 50
    test_blocks: int = 5
    trials_per_test_block: int = 210
    feedback_in_training: bool = True

    @property
    def total_trials(self):
        return self.training_trials + self.test_blocks * self.trials_per_test_block

    def block_of(self, index):
        """(block name, block number) of the trial at a presentation index."""
        if index < self.training_trials:
            return BLOCK_TRAINING, 0
        test_index = index - self.training_trials
        return BLOCK_TEST, test_index // self.trials_per_test_block

    def validate(self, manifest_size):
        if self.training_trials < 0 or self.test_blocks < 0 or self.trials_per_test_block < 0:
            raise ValidationError("block plan counts must be nonnegative")
        if self.total_trials > manifest_size:
            raise ValidationError(
                f"block plan needs {self.total_trials} trials, manifest has {manifest_size}"
            )
        if self.total_trials == 0:
            raise ValidationError("block plan presents no trials")
        return self

    @classmethod
    def single_block(cls, n_trials):
        """All-test plan covering n trials (synthetic/network sessions)."""
        return cls(training_trials=0, test_blocks=1, trials_per_test_block=n_trials)

    def to_dict(self):
        return {
            "training_trials": self.training_trials,
            "test_blocks": self.test_blocks,
            "trials_per_test_block": self.trials_per_test_block,
            "feedback_in_training": self.feedback_in_training,
        }


def _answered_ids(out_path):
    if not out_path.exists() or out_path.stat().st_size == 0:
        return set()
    return {r.stimulus_id for r in read_records(out_path)}


def run_session(manifest, observer, block_plan, out_path, stimuli_dir=None,
                trial_timeout=60.0, resume=True):
    """Present manifest trials to a connected observer; append records as CSV.

    The observer endpoint must already be entered (context manager). Records
    are appended one flushed line at a time, so a killed session can resume:
    already-answered stimuli are skipped and never duplicated. Returns all
    records persisted for this observer (previous runs included).
    """
    block_plan.validate(len(manifest))
    answered = _answered_ids(out_path) if resume else set()

    hello = observer.recv(timeout=trial_timeout)
    if hello["type"] != MSG_HELLO:
        raise ProtocolError(f"expected hello, got {hello['type']!r}")
    observer_id = hello["observer_id"]

    labels = list(CATEGORIES)
    with RecordWriter(out_path) as writer:
        for index in range(block_plan.total_trials):
            entry = manifest.entries[index]
            if entry.stimulus_id in answered:
                continue
            msg = {
                "type": MSG_STIMULUS,
                "stimulus_id": entry.stimulus_id,
                "labels": labels,
            }
            if stimuli_dir is not None:
                png = stimuli_dir / f"{entry.stimulus_id}.png"
                if png.exists():
                    msg["png_path"] = str(png)
            observer.send(msg)
            reply = observer.recv(timeout=trial_timeout)
            if reply["type"] != MSG_RESPONSE:
                raise ProtocolError(f"expected response, got {reply['type']!r}")
            if reply["stimulus_id"] != entry.stimulus_id:
                raise ProtocolError(
                    f"response for {reply['stimulus_id']!r}, expected {entry.stimulus_id!r}"
                )
            if reply["category"] not in CATEGORIES:
                raise ProtocolError(f"response category {reply['category']!r} unknown")
            block, _ = block_plan.block_of(index)
            writer.write(make_record(observer_id, entry, reply["category"], block))
            answered.add(entry.stimulus_id)
    try:
        observer.send({"type": MSG_BYE})
    except ProtocolError:
        pass  # observer may have exited already; records are safe
    return read_records(out_path)
