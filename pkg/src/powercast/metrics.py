"""Forecast error metrics and improvement ratios."""

from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .errors import MetricError


def _pair(actual, predicted):
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape:
        raise MetricError(f"shape mismatch: {a.shape} vs {p.shape}")
    if a.size < 1:
        raise MetricError("empty input")
    return a, p


def mape(actual, predicted, y_max) -> float:
    """Mean absolute error as a percentage of the series maximum.

    This is the range-normalized variant, 100 * mean(|yhat - y|) / y_max,
    not the classic per-point percentage error.
    """
    a, p = _pair(actual, predicted)
    if not y_max > 0:
        raise MetricError(f"y_max must be positive, got {y_max}")
    return float(100.0 * np.mean(np.abs(p - a)) / y_max)


def rmse(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    return float(np.sqrt(np.mean((p - a) ** 2)))


def mae(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    return float(np.mean(np.abs(p - a)))


def improvement(baseline: float, proposed: float) -> float:
    """Fractional improvement (baseline - proposed) / baseline."""
    if not baseline > 0:
        raise MetricError(f"baseline must be positive, got {baseline}")
    return (baseline - proposed) / baseline


def monthly_average(values) -> float:
    values = list(values)
    if not values:
        raise MetricError("cannot average zero values")
    return float(np.mean(values))


def round_half_away(x: float, ndigits: int = 2) -> float:
    """Round half away from zero, the convention of the reference tables."""
    q = Decimal(1).scaleb(-ndigits)
    return float(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))
