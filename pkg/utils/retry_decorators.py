"""Tenacity retry decorators for artifact I/O.

Key decorators:
- `retry_file_io`: for the temp-file rename behind every artifact write
  (dataset, checkpoints, reports, feature CSV, manifests). Only ``OSError``
  is retried; validation problems surface immediately.
"""

import structlog
from tenacity import (
    RetryCallState,
    retry,
    retry_if_exception_type,
    stop_after_attempt,
    wait_exponential,
)

logger = structlog.get_logger(__name__)

MAX_ATTEMPTS = 3


def _log_retry(retry_state: RetryCallState) -> None:
    """Logs one ``artifact_io_retry`` event per failed attempt."""
    outcome = retry_state.outcome
    if outcome is None or not outcome.failed:
        return
    error = outcome.exception()
    stop = retry_state.retry_object.stop
    logger.warning(
        "artifact_io_retry",
        function=getattr(retry_state.fn, "__name__", "function"),
        error_type=type(error).__name__,
        error=str(error),
        attempt=retry_state.attempt_number,
        max_attempts=stop.max_attempt_number if isinstance(stop, stop_after_attempt) else None,
    )


retry_file_io = retry(
    retry=retry_if_exception_type(OSError),
    wait=wait_exponential(multiplier=0.1, min=0.1, max=1),
    stop=stop_after_attempt(MAX_ATTEMPTS),
    before_sleep=_log_retry,
    reraise=True,
)
