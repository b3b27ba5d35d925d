"""Prometheus metrics definitions for training and evaluation runs.

This module defines the counters and gauges updated by the training loops,
the condition-wise evaluation and the gradient-check suite. They are only
scraped when the exporter is started (``--metrics-port``).
"""

from prometheus_client import Counter, Gauge

# --- Training Metrics ---
TRAIN_STEPS = Counter(
    "ifmmin_train_steps_total",
    "Optimizer steps taken.",
    ["stage"],  # pretrain, ifmmin
)

EPOCH_LOSS = Gauge(
    "ifmmin_epoch_loss",
    "Mean loss component over the last finished epoch.",
    ["stage", "component"],  # e.g. ifmmin, L_inv
)

VALIDATION_WA = Gauge(
    "ifmmin_validation_wa",
    "Validation weighted accuracy after the last finished epoch.",
    ["stage"],
)

# --- Evaluation Metrics ---
CONDITION_ACCURACY = Gauge(
    "ifmmin_condition_accuracy",
    "Test accuracy under one missing-modality condition.",
    ["condition", "metric"],  # e.g. av, WA
)

GRADCHECK_TOTAL = Counter(
    "ifmmin_gradcheck_total",
    "Finite-difference checks run per block.",
    ["block", "status"],  # e.g. cmd_loss, pass/fail
)

# --- Application Info ---
APP_INFO = Gauge(
    "ifmmin_app_info",
    "Information about the running application (e.g., version).",
    ["version"],
)
