"""Observer exclusion on zero-noise performance."""

from dataclasses import dataclass, field

from bandmask.errors import ValidationError
from bandmask.records import BLOCK_TEST, by_observer


@dataclass
class ExclusionResult:
    kept: list
    excluded: list
    flagged_no_baseline: list  # observers with no zero-noise trials to judge
    baseline_accuracy: dict = field(default_factory=dict)


def exclude_low_performers(records, threshold=0.5, test_block_only=True):
    """Partition observers by zero-noise accuracy (kept iff >= threshold).

    Only test-block trials count by default. Observers with no zero-noise
    trials cannot be judged and are flagged rather than silently kept.
    """
    if not records:
        raise ValidationError("no records to judge")
    result = ExclusionResult(kept=[], excluded=[], flagged_no_baseline=[])
    for observer_id, recs in sorted(by_observer(records).items()):
        if test_block_only:
            recs = [r for r in recs if r.block == BLOCK_TEST]
        baseline = [r for r in recs if r.sd == 0.0]
        if not baseline:
            result.flagged_no_baseline.append(observer_id)
            continue
        acc = sum(r.correct for r in baseline) / len(baseline)
        result.baseline_accuracy[observer_id] = acc
        if acc >= threshold:
            result.kept.append(observer_id)
        else:
            result.excluded.append(observer_id)
    return result
