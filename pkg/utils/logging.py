"""Logging setup for the application using structlog and standard logging."""

import logging
import sys

import structlog


def setup_logging(log_level: str | int = "INFO", log_format: str = "json") -> structlog.BoundLogger:
    """Sets up standard logging and structlog.

    Args:
        log_level: The logging level (str or int).
        log_format: ``json`` for one JSON object per line, ``console`` for
            key=value lines.

    Returns:
        BoundLogger: The root structlog logger to which context can be bound.
    """
    level = logging.getLevelName(log_level.upper()) if isinstance(log_level, str) else log_level
    if not isinstance(level, int):
        level = logging.INFO

    # stdlib logging carries third-party messages and structlog's rendered lines
    logging.basicConfig(level=level, format="%(message)s", stream=sys.stderr, force=True)

    renderer = (
        structlog.dev.ConsoleRenderer(colors=False)
        if log_format == "console"
        else structlog.processors.JSONRenderer(sort_keys=True)
    )
    shared_processors = [
        structlog.contextvars.merge_contextvars,  # subcommand, run_id
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
    ]

    structlog.configure(
        processors=shared_processors + [renderer],  # type: ignore[arg-type]
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.make_filtering_bound_logger(level),
        cache_logger_on_first_use=True,
    )

    return structlog.get_logger()


def bind_run_context(**values) -> None:
    """Binds values (``subcommand``, ``run_id``) to every later log event."""
    structlog.contextvars.bind_contextvars(**values)


def clear_run_context() -> None:
    structlog.contextvars.clear_contextvars()
