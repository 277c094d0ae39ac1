"""Response records: the unit of all analysis, persisted as append-only CSV."""

import csv
from dataclasses import dataclass
from datetime import datetime, timezone

from bandmask.errors import ValidationError

BLOCK_TRAINING = "training"
BLOCK_TEST = "test"

CSV_COLUMNS = (
    "observer_id",
    "stimulus_id",
    "block",
    "sd",
    "band_index",
    "true_category",
    "response_category",
    "correct",
    "timestamp",
)


@dataclass(frozen=True)
class ResponseRecord:
    observer_id: str
    stimulus_id: str
    block: str
    sd: float
    band_index: int
    true_category: str
    response_category: str
    correct: bool
    timestamp: str

    def __post_init__(self):
        if self.correct != (self.true_category == self.response_category):
            raise ValidationError(
                f"correct flag inconsistent for stimulus {self.stimulus_id}"
            )
        if self.block not in (BLOCK_TRAINING, BLOCK_TEST):
            raise ValidationError(f"unknown block {self.block!r}")

    def to_row(self):
        return [
            self.observer_id,
            self.stimulus_id,
            self.block,
            repr(self.sd),
            self.band_index,
            self.true_category,
            self.response_category,
            int(self.correct),
            self.timestamp,
        ]

    @classmethod
    def from_row(cls, row):
        return cls(
            observer_id=row["observer_id"],
            stimulus_id=row["stimulus_id"],
            block=row["block"],
            sd=float(row["sd"]),
            band_index=int(row["band_index"]),
            true_category=row["true_category"],
            response_category=row["response_category"],
            correct=bool(int(row["correct"])),
            timestamp=row["timestamp"],
        )


def now_iso():
    return datetime.now(timezone.utc).isoformat()


def make_record(observer_id, entry, response_category, block, timestamp=None):
    return ResponseRecord(
        observer_id=observer_id,
        stimulus_id=entry.stimulus_id,
        block=block,
        sd=entry.condition.sd,
        band_index=entry.condition.band_index,
        true_category=entry.category,
        response_category=response_category,
        correct=entry.category == response_category,
        timestamp=timestamp or now_iso(),
    )


class RecordWriter:
    """Append-only CSV sink; one line per record, flushed immediately."""

    def __init__(self, path):
        self.path = path
        exists = path.exists() and path.stat().st_size > 0
        self._fh = open(path, "a", newline="")
        self._csv = csv.writer(self._fh)
        if not exists:
            self._csv.writerow(CSV_COLUMNS)
            self._fh.flush()

    def write(self, record):
        self._csv.writerow(record.to_row())
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_records(path):
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(ResponseRecord.from_row(row))
    return records


def test_block(records):
    return [r for r in records if r.block == BLOCK_TEST]


def by_observer(records):
    out = {}
    for r in records:
        out.setdefault(r.observer_id, []).append(r)
    return out
