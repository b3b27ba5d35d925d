"""Sentry error reporting for training and evaluation runs."""

import logging
import os

import sentry_sdk
from sentry_sdk.integrations.logging import LoggingIntegration


def setup_sentry(release: str | None = None) -> bool:
    """Initializes Sentry if the SENTRY_DSN environment variable is set.

    Args:
        release: Package version; reported as ``ifmmin@<release>``.

    Returns:
        True when Sentry was initialised.
    """
    dsn = os.getenv("SENTRY_DSN")
    if not dsn:
        return False

    log_level = os.getenv("SENTRY_LOG_LEVEL", "ERROR").upper()

    # breadcrumbs from INFO up; events only from SENTRY_LOG_LEVEL up
    sentry_logging = LoggingIntegration(
        level=logging.INFO, event_level=getattr(logging, log_level, logging.ERROR)
    )

    sentry_sdk.init(
        dsn=dsn,
        integrations=[sentry_logging],
        release=f"ifmmin@{release}" if release else None,
        environment=os.getenv("IFMMIN_ENV", "local"),
        traces_sample_rate=float(os.getenv("SENTRY_TRACES_SAMPLE_RATE", "0.0")),
        send_default_pii=False,
    )
    return True


def tag_run(subcommand: str, run_id: str, seed: int | None = None) -> None:
    """Attaches the subcommand, run id and seed to every later Sentry event."""
    sentry_sdk.set_tag("subcommand", subcommand)
    sentry_sdk.set_tag("run_id", run_id)
    sentry_sdk.set_context("run", {"subcommand": subcommand, "run_id": run_id, "seed": seed})
