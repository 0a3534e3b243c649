"""Single-channel empirical mode decomposition.

Used directly as a decomposition and as the building block (extrema,
envelopes, stoppage counting) for the multivariate sifter in
:mod:`namemd.multivariate`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

# Guards against runaway extraction when a residual never becomes residue-like.
HARD_IMF_LIMIT = 64


class ResidueLike(ValueError):
    """The signal has too few extrema to build envelopes and cannot be sifted."""


@dataclass(frozen=True)
class SiftConfig:
    """Sifting controls.

    A candidate is accepted as an IMF once the numbers of extrema and zero
    crossings differ by at most one for ``s_number`` consecutive sifts, or
    after ``max_sifts`` sifts, whichever comes first.
    """

    s_number: int = 4
    max_sifts: int = 50
    max_imfs: int | None = None

    def __post_init__(self):
        if self.s_number < 1 or self.max_sifts < 1:
            raise ValueError("s_number and max_sifts must be >= 1")
        if self.max_imfs is not None and self.max_imfs < 0:
            raise ValueError("max_imfs must be >= 0")


@dataclass(frozen=True)
class ExtremaSet:
    maxima: np.ndarray
    minima: np.ndarray

    @property
    def count(self) -> int:
        return self.maxima.size + self.minima.size


@dataclass(frozen=True)
class ImfSet:
    """IMFs ordered from highest to lowest frequency, plus the residue."""

    imfs: np.ndarray  # shape (n_imfs, T)
    residue: np.ndarray

    @property
    def n_imfs(self) -> int:
        return self.imfs.shape[0]

    def reconstruct(self) -> np.ndarray:
        return self.imfs.sum(axis=0) + self.residue


def find_extrema(signal) -> ExtremaSet:
    """Interior local maxima and minima.

    Runs of equal values are collapsed first; a run that is higher (lower)
    than both neighbouring runs counts once, at its midpoint ``(a + b) // 2``.
    End points are never extrema.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or x.size < 3:
        raise ValueError("find_extrema needs a 1-D signal of length >= 3")
    change = np.flatnonzero(np.diff(x) != 0)
    if change.size == 0:
        empty = np.empty(0, dtype=int)
        return ExtremaSet(empty, empty)
    # run r spans [starts[r], ends[r]]
    starts = np.concatenate(([0], change + 1))
    ends = np.concatenate((change, [x.size - 1]))
    levels = x[starts]
    mids = (starts + ends) // 2
    inner = slice(1, -1)
    up = levels[inner] > levels[:-2]
    down = levels[inner] > levels[2:]
    maxima = mids[inner][up & down]
    minima = mids[inner][~up & ~down]
    return ExtremaSet(maxima.astype(int), minima.astype(int))


def count_zero_crossings(signal) -> int:
    """Sign changes, with a run of exact zeros between opposite signs counted once."""
    x = np.asarray(signal, dtype=float)
    s = np.sign(x)
    s = s[s != 0]
    if s.size < 2:
        return 0
    return int(np.count_nonzero(s[1:] != s[:-1]))


def envelope_through(indices, knot_values, n: int) -> np.ndarray:
    """Natural cubic spline through ``(indices, knot_values)`` evaluated on ``0..n-1``.

    The two knots nearest each end are mirrored across that end before
    fitting. ``knot_values`` may be 1-D or have one column per channel.
    """
    idx = np.asarray(indices, dtype=int)
    vals = np.asarray(knot_values, dtype=float)
    if idx.size < 2:
        raise ResidueLike(f"need >= 2 extrema for an envelope, got {idx.size}")
    last = n - 1
    left = idx[1::-1]
    right = idx[:-3:-1]
    t = np.concatenate((-left, idx, 2 * last - right)).astype(float)
    v = np.concatenate((vals[1::-1], vals, vals[:-3:-1]), axis=0)
    # extrema on the boundary itself would duplicate a knot
    keep = np.concatenate(([True], np.diff(t) > 0))
    return CubicSpline(t[keep], v[keep], bc_type="natural")(np.arange(n, dtype=float))


def spline_envelope(extrema: ExtremaSet, signal, kind: str = "upper") -> np.ndarray:
    x = np.asarray(signal, dtype=float)
    if kind == "upper":
        idx = extrema.maxima
    elif kind == "lower":
        idx = extrema.minima
    else:
        raise ValueError(f"kind must be 'upper' or 'lower', got {kind!r}")
    return envelope_through(idx, x[idx], x.size)


def is_residue_like(signal) -> bool:
    ext = find_extrema(signal)
    return ext.maxima.size < 2 or ext.minima.size < 2


def sift_once(signal) -> tuple[np.ndarray, np.ndarray]:
    """One sifting step: subtract the mean of the upper and lower envelopes."""
    x = np.asarray(signal, dtype=float)
    ext = find_extrema(x)
    if ext.maxima.size < 2 or ext.minima.size < 2:
        raise ResidueLike(
            f"{ext.maxima.size} maxima / {ext.minima.size} minima; cannot sift"
        )
    mean_env = 0.5 * (spline_envelope(ext, x, "upper") + spline_envelope(ext, x, "lower"))
    return x - mean_env, mean_env


def imf_condition(signal) -> bool:
    """Extrema and zero-crossing counts differ by at most one."""
    return abs(find_extrema(signal).count - count_zero_crossings(signal)) <= 1


def sift(signal, config: SiftConfig = SiftConfig()) -> np.ndarray:
    """Sift ``signal`` into a single IMF under the S-number stoppage rule."""
    h = np.asarray(signal, dtype=float)
    streak = 0
    for n_sifts in range(1, config.max_sifts + 1):
        try:
            h, _ = sift_once(h)
        except ResidueLike:
            if n_sifts == 1:
                raise
            break
        streak = streak + 1 if imf_condition(h) else 0
        if streak >= config.s_number:
            break
    return h


def emd(signal, config: SiftConfig = SiftConfig()) -> ImfSet:
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or x.size < 8:
        raise ValueError("emd needs a 1-D signal of length >= 8")
    limit = HARD_IMF_LIMIT if config.max_imfs is None else config.max_imfs
    residual = x.copy()
    imfs = []
    while len(imfs) < limit and not is_residue_like(residual):
        imf = sift(residual, config)
        imfs.append(imf)
        residual = residual - imf
    stacked = np.array(imfs).reshape(len(imfs), x.size)
    return ImfSet(stacked, residual)
