"""Observer sessions: wire protocol, trial runner, exclusion, HTTP service."""

from bandmask.session.exclusion import ExclusionResult, exclude_low_performers
from bandmask.session.protocol import (
    MSG_BYE,
    MSG_ERROR,
    MSG_HELLO,
    MSG_RESPONSE,
    MSG_STIMULUS,
    SubprocessObserver,
    TcpObserver,
    decode,
    encode,
)
from bandmask.session.runner import BlockPlan, run_session

__all__ = [
    "BlockPlan",
    "run_session",
    "exclude_low_performers",
    "ExclusionResult",
    "SubprocessObserver",
    "TcpObserver",
    "encode",
    "decode",
    "MSG_HELLO",
    "MSG_STIMULUS",
    "MSG_RESPONSE",
    "MSG_BYE",
    "MSG_ERROR",
]
