"""RMSE and the historical-average baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientHistoryError, ShapeError


def rmse(pred, target) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"prediction shape {pred.shape} != target shape {target.shape}")
    diff = pred - target
    if diff.size == 0:
        return 0.0
    # scale first so tiny differences do not underflow to an exact zero
    peak = float(np.max(np.abs(diff)))
    if peak == 0.0:
        return 0.0
    return peak * float(np.sqrt(np.mean((diff / peak) ** 2)))


def ha_forecast(history, period: int, d_out: int) -> np.ndarray:
    """Same-phase historical mean per node for the ``d_out`` buckets after ``history``.

    Bucket ``t`` has phase ``t % period`` counted from column 0 of ``history``.
    """
    history = np.asarray(history, dtype=np.float64)
    n, T = history.shape
    if period < 1 or T < period:
        raise InsufficientHistoryError(f"need at least one full period ({period} buckets), have {T}")
    phase_means = np.empty((n, period))
    for ph in range(period):
        phase_means[:, ph] = history[:, ph::period].mean(axis=1)
    future = (T + np.arange(d_out)) % period
    return phase_means[:, future]


def ha_window_forecasts(values: np.ndarray, t0s, d_in: int, d_out: int, period: int) -> np.ndarray:
    """HA forecasts for windows starting at each ``t0``, using all buckets before the target."""
    values = np.asarray(values, dtype=np.float64)
    n, T = values.shape
    m = -(-T // period)
    padded = np.zeros((n, m * period))
    padded[:, :T] = values
    # cum[:, c, p] = sum of the first c+1 values with phase p
    cum = np.cumsum(padded.reshape(n, m, period), axis=1)
    out = np.empty((len(t0s), n, d_out))
    for k, t0 in enumerate(t0s):
        L = int(t0) + d_in
        if L < period:
            raise InsufficientHistoryError(f"window at t0={t0} has only {L} buckets of history, period is {period}")
        phases = (L + np.arange(d_out)) % period
        counts = (L - phases + period - 1) // period
        out[k] = cum[:, counts - 1, phases] / counts
    return out


@dataclass(frozen=True)
class Comparison:
    model_rmse: float
    ha_rmse: float
    windows: int

    @property
    def model_wins(self) -> bool:
        return self.model_rmse < self.ha_rmse
