"""Level and directional accuracy, and the Diebold-Mariano comparison test."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import norm


class DegenerateTestError(ValueError):
    """The loss differential has no variance, so the DM statistic is undefined."""


@dataclass
class ForecastReport:
    model: str
    variant: str  # "single" | "decomposed"
    horizon: int
    mape: float
    rmse: float
    dstat: float
    forecasts: list[float]
    actuals: list[float]
    dates: list[str] = field(default_factory=list)
    leakage_mode: str = "whole-series"
    component_forecasts: dict[str, list[float]] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.forecasts) != len(self.actuals):
            raise ValueError("forecast and actual vectors differ in length")

    @property
    def key(self) -> str:
        return f"{self.model}/{self.variant}/h{self.horizon}"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DmTestResult:
    statistic: float
    p_value: float
    mean_differential: float
    variance: float
    truncation_lag: int
    n_obs: int
    variance_fallback: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def _pair(actual, forecast):
    y = np.asarray(actual, dtype=float)
    f = np.asarray(forecast, dtype=float)
    if y.shape != f.shape or y.ndim != 1:
        raise ValueError(f"shape mismatch: actual {y.shape} vs forecast {f.shape}")
    if y.size == 0:
        raise ValueError("empty input")
    return y, f


def mape(actual, forecast) -> float:
    """Mean absolute percentage error, as a fraction (0.1 means 10%)."""
    y, f = _pair(actual, forecast)
    if np.any(y == 0):
        raise ValueError("MAPE is undefined when an actual value is zero")
    return float(np.mean(np.abs((y - f) / y)))


def rmse(actual, forecast) -> float:
    y, f = _pair(actual, forecast)
    return float(np.sqrt(np.mean((f - y) ** 2)))


def dstat(actual, forecast, anchor) -> float:
    """Share of points where the forecast move and the actual move agree in sign.

    ``anchor[t]`` is the last actual value before ``actual[t]``. A zero move on
    either side counts as a hit.
    """
    y, f = _pair(actual, forecast)
    a = np.asarray(anchor, dtype=float)
    if a.shape != y.shape or not np.all(np.isfinite(a)):
        raise ValueError("every forecast needs a finite previous actual as anchor")
    hits = (f - a) * (y - a) >= 0
    return float(np.mean(hits))


def autocovariance(x, lag: int) -> float:
    x = np.asarray(x, dtype=float)
    n = x.size
    d = x - x.mean()
    if lag == 0:
        return float(np.dot(d, d) / n)
    return float(np.dot(d[lag:], d[:-lag]) / n)


def dm_test(actual, forecast_a, forecast_b, horizon: int = 1) -> DmTestResult:
    """Diebold-Mariano test on squared-error loss.

    The differential is ``loss(A) - loss(B)``, so a negative statistic means A
    is more accurate. The long-run variance keeps autocovariances up to lag
    ``horizon - 1``; if that sum is not positive, only the lag-0 term is used
    and ``variance_fallback`` is set.
    """
    y, fa = _pair(actual, forecast_a)
    _, fb = _pair(actual, forecast_b)
    n = y.size
    if n < 8:
        raise ValueError(f"dm_test needs at least 8 observations, got {n}")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if np.array_equal(fa, fb):
        raise DegenerateTestError("identical forecasts: loss differential is zero")
    g = (y - fa) ** 2 - (y - fb) ** 2
    g_bar = float(np.mean(g))
    lag = min(horizon - 1, n - 1)
    gamma0 = autocovariance(g, 0)
    variance = gamma0 + 2.0 * sum(autocovariance(g, l) for l in range(1, lag + 1))
    fallback = False
    if variance <= 0:
        variance, fallback = gamma0, True
    if variance <= 0:
        raise DegenerateTestError("loss differential is constant; variance is zero")
    stat = g_bar / np.sqrt(variance / n)
    p_value = float(2.0 * norm.sf(abs(stat)))
    return DmTestResult(float(stat), p_value, g_bar, float(variance), lag, n, fallback)
