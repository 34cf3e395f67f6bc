"""Prediction-quality metrics: MAE, RMSE, R^2, and interval coverage."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .gp import Prediction, credible_interval


def _paired(truth, pred):
    truth = np.asarray(truth, dtype=float).ravel()
    pred = np.asarray(pred, dtype=float).ravel()
    if truth.size == 0:
        raise InputError("metric inputs must be non-empty")
    if truth.shape != pred.shape:
        raise InputError(f"length mismatch: {truth.size} truths vs {pred.size} predictions")
    return truth, pred


def mae(truth, pred) -> float:
    """Mean absolute error."""
    truth, pred = _paired(truth, pred)
    return float(np.mean(np.abs(truth - pred)))


def rmse(truth, pred) -> float:
    """Root mean squared error."""
    truth, pred = _paired(truth, pred)
    return float(math.sqrt(np.mean((truth - pred) ** 2)))


def r_squared(truth, pred) -> float:
    """Coefficient of determination, 1 - SS_res / SS_tot.

    At most 1; unbounded below (a bad predictor can score worse than -1).
    """
    truth, pred = _paired(truth, pred)
    if truth.size < 2:
        raise InputError("r_squared needs at least 2 samples")
    ss_tot = float(np.sum((truth - truth.mean()) ** 2))
    if ss_tot == 0.0:
        raise InputError("r_squared is undefined for constant truths")
    ss_res = float(np.sum((truth - pred) ** 2))
    return 1.0 - ss_res / ss_tot


def coverage(truths, predictions: list[Prediction], level: float) -> float:
    """Fraction of truths inside the credible interval at ``level``.

    Intervals are rebuilt from each prediction's predictive variance, so
    the level need not match the one used when predicting.
    """
    truths = np.asarray(truths, dtype=float).ravel()
    if truths.size != len(predictions):
        raise InputError(
            f"length mismatch: {truths.size} truths vs {len(predictions)} predictions"
        )
    if truths.size == 0:
        raise InputError("coverage needs at least one sample")
    hits = 0
    for t, p in zip(truths, predictions):
        low, high = credible_interval(p, level)
        if low <= t <= high:
            hits += 1
    return hits / truths.size


@dataclass(frozen=True)
class EvalReport:
    """Metric bundle for one experiment. ``coverage`` is None for models
    without predictive intervals (the linear baseline)."""

    mae: float
    rmse: float
    r2: float
    coverage: float | None
    n: int


def evaluate_predictions(truths, predictions: list[Prediction], level: float = 0.95) -> EvalReport:
    """EvalReport for GP predictions against ground truth."""
    truths = np.asarray(truths, dtype=float).ravel()
    means = [p.mean for p in predictions]
    return EvalReport(
        mae=mae(truths, means),
        rmse=rmse(truths, means),
        r2=r_squared(truths, means),
        coverage=coverage(truths, predictions, level),
        n=truths.size,
    )


def evaluate_point_predictions(truths, means) -> EvalReport:
    """EvalReport for interval-free point predictions."""
    truths = np.asarray(truths, dtype=float).ravel()
    return EvalReport(
        mae=mae(truths, means),
        rmse=rmse(truths, means),
        r2=r_squared(truths, means),
        coverage=None,
        n=truths.size,
    )
