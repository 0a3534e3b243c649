"""Synthetic monthly arrivals: a destination and correlated source markets."""

from __future__ import annotations

import numpy as np
import pandas as pd

from namemd.series import MultichannelSeries

PERIODS = (3.0, 6.0, 12.0, 40.0)
AMPLITUDES = (0.6, 0.8, 2.0, 1.2)


def benchmark_series(seed: int, length: int = 240, n_sources: int = 3,
                     noise: float = 0.05, start: str = "2000-01",
                     periods=PERIODS, amplitudes=AMPLITUDES,
                     trend_slope: float = 0.02) -> MultichannelSeries:
    """Multi-tone plus trend target with source channels sharing its cycles.

    Each source carries the same cycles with its own amplitudes and small
    phase shifts, plus independent noise. All values stay well above zero.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(length, dtype=float)
    phases = rng.uniform(0, 2 * np.pi, len(periods))
    amps = np.asarray(amplitudes, dtype=float) * rng.uniform(0.8, 1.2, len(periods))
    cycles = np.array([np.sin(2 * np.pi * t / p + ph) for p, ph in zip(periods, phases)])
    trend = trend_slope * t + 0.5 * np.sin(2 * np.pi * t / (1.5 * length))

    def channel(weights, shift):
        tone = sum(w * a * np.sin(2 * np.pi * t / p + ph + shift)
                   for w, a, p, ph in zip(weights, amps, periods, phases))
        return 20.0 + trend * rng.uniform(0.7, 1.3) + tone + noise * amps.sum() * rng.standard_normal(length)

    cols = [20.0 + trend + amps @ cycles + noise * amps.sum() * rng.standard_normal(length)]
    names = ["destination"]
    for k in range(n_sources):
        cols.append(channel(rng.uniform(0.5, 1.5, len(periods)), rng.normal(0, 0.2)))
        names.append(f"source_{k + 1}")
    return MultichannelSeries(np.column_stack(cols), tuple(names), pd.Period(start, freq="M"))


def two_tone(length: int = 512) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``sin(2 pi t/8) + sin(2 pi t/64) + 0.01 t`` and its two tones."""
    t = np.arange(length, dtype=float)
    fast = np.sin(2 * np.pi * t / 8)
    slow = np.sin(2 * np.pi * t / 64)
    return fast + slow + 0.01 * t, fast, slow
