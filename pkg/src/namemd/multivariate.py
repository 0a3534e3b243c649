"""Multivariate EMD by directional projection, and its noise-assisted wrapper.

Every sift projects the multichannel signal onto a fixed set of unit
directions, builds envelopes of the *multichannel* samples at the extrema of
each projection, and subtracts the average envelope midline. Because all
channels are sifted together they end up with the same number of modes, and
mode ``j`` covers a comparable timescale in every channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.special import betaincinv

from namemd.univariate import (
    HARD_IMF_LIMIT,
    ImfSet,
    ResidueLike,
    SiftConfig,
    count_zero_crossings,
    envelope_through,
    find_extrema,
)
from namemd.series import MultichannelSeries

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71)


@dataclass(frozen=True)
class DirectionSet:
    vectors: np.ndarray  # (K, d)
    generator: str = "hammersley"
    seed: int = 0

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class NaMemdConfig:
    noise_channels: int = 2
    noise_amplitude: float = 0.1
    directions: int = 64
    rng_seed: int = 0
    sift: SiftConfig = field(default_factory=SiftConfig)

    def __post_init__(self):
        if not 0.0 < self.noise_amplitude <= 1.0:
            raise ValueError("noise_amplitude must lie in (0, 1]")
        if self.noise_channels < 1:
            raise ValueError(
                "noise-assisted decomposition needs at least one noise channel; "
                "use memd() for the plain multivariate decomposition"
            )


@dataclass(frozen=True)
class ImfDecomposition:
    """Scale-aligned modes of several channels.

    ``imfs[c, j]`` is IMF ``j + 1`` of channel ``c``; ``residues[c]`` its trend.
    """

    channel_names: tuple[str, ...]
    imfs: np.ndarray  # (m, n_imfs, T)
    residues: np.ndarray  # (m, T)
    start_period: pd.Period = field(default_factory=lambda: pd.Period("2000-01", freq="M"))

    @property
    def imf_count(self) -> int:
        return self.imfs.shape[1]

    @property
    def length(self) -> int:
        return self.residues.shape[1]

    @property
    def dates(self) -> pd.PeriodIndex:
        return pd.period_range(self.start_period, periods=self.length, freq="M")

    def channel(self, name: str) -> ImfSet:
        c = self.channel_names.index(name)
        return ImfSet(self.imfs[c], self.residues[c])

    def reconstruct(self) -> np.ndarray:
        """(T, m) matrix of summed modes."""
        return (self.imfs.sum(axis=1) + self.residues).T

    def to_csv(self, directory) -> list[Path]:
        """Write ``imfs_<channel>.csv`` per channel: date, imf_1..imf_n, residue."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for c, name in enumerate(self.channel_names):
            frame = pd.DataFrame(
                {f"imf_{j + 1}": self.imfs[c, j] for j in range(self.imf_count)}
            )
            frame["residue"] = self.residues[c]
            frame.insert(0, "date", self.dates.strftime("%Y-%m"))
            path = directory / f"imfs_{name}.csv"
            frame.to_csv(path, index=False, float_format="%.17g")
            paths.append(path)
        return paths

    @classmethod
    def from_csv(cls, paths) -> "ImfDecomposition":
        names, imfs, residues, start = [], [], [], None
        for path in paths:
            path = Path(path)
            frame = pd.read_csv(path, dtype={"date": str}, float_precision="round_trip")
            names.append(path.stem.removeprefix("imfs_"))
            cols = [c for c in frame.columns if c.startswith("imf_")]
            imfs.append(frame[cols].to_numpy(dtype=float).T)
            residues.append(frame["residue"].to_numpy(dtype=float))
            start = pd.Period(frame["date"].iloc[0], freq="M")
        counts = {a.shape[0] for a in imfs}
        if len(counts) != 1:
            raise ValueError(f"channels disagree on IMF count: {sorted(counts)}")
        return cls(tuple(names), np.stack(imfs), np.stack(residues), start)


def _radical_inverse(i: np.ndarray, base: int) -> np.ndarray:
    i = i.astype(np.int64).copy()
    out = np.zeros(i.shape, dtype=float)
    scale = 1.0 / base
    while np.any(i > 0):
        out += (i % base) * scale
        i //= base
        scale /= base
    return out


def hammersley(n_points: int, dim: int) -> np.ndarray:
    """``n_points`` Hammersley points in ``[0, 1)^dim``; first coordinate is ``(i + 1/2)/n``."""
    if dim > len(_PRIMES) + 1:
        raise ValueError(f"dimension {dim} exceeds the available prime bases")
    i = np.arange(n_points)
    cols = [(i + 0.5) / n_points]
    cols += [_radical_inverse(i + 1, _PRIMES[j]) for j in range(dim - 1)]
    return np.column_stack(cols)


def generate_directions(d: int, K: int, seed: int = 0) -> DirectionSet:
    """Unit vectors from a randomly rotated Hammersley set on the (d-1)-sphere.

    Each unit-cube coordinate is pushed through the inverse CDF of the
    corresponding hyperspherical angle, so uniform cube points become
    uniform sphere points: the azimuth is ``2*pi*u`` and a polar angle with
    density ``sin(phi)**k`` has ``(1 - cos(phi))/2 ~ Beta((k+1)/2, (k+1)/2)``.
    The seed drives a Cranley-Patterson shift of the cube points.
    """
    if d < 2:
        raise ValueError("direction dimension must be >= 2")
    if K < 2 * d:
        raise ValueError(f"need K >= 2*d directions, got K={K} for d={d}")
    shift = np.random.default_rng(seed).random(d - 1)
    u = (hammersley(K, d - 1) + shift) % 1.0
    azimuth = 2.0 * np.pi * u[:, 0]
    vec = np.ones((K, d))
    sin_prod = np.ones(K)
    for j in range(d - 2):
        a = 0.5 * (d - 2 - j + 1)
        cos_phi = 1.0 - 2.0 * betaincinv(a, a, u[:, j + 1])
        sin_phi = np.sqrt(np.clip(1.0 - cos_phi**2, 0.0, None))
        vec[:, j] = sin_prod * cos_phi
        sin_prod = sin_prod * sin_phi
    vec[:, d - 2] = sin_prod * np.cos(azimuth)
    vec[:, d - 1] = sin_prod * np.sin(azimuth)
    vec /= np.linalg.norm(vec, axis=1, keepdims=True)
    return DirectionSet(vec, "hammersley", seed)


def project(z, u) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    u = np.asarray(u, dtype=float)
    if z.ndim != 2 or u.shape != (z.shape[1],):
        raise ValueError(f"cannot project {z.shape} signal on direction of shape {u.shape}")
    return z @ u


def _usable_extrema(p):
    ext = find_extrema(p)
    if ext.maxima.size < 2 or ext.minima.size < 2:
        return None
    return ext


def multivariate_mean_envelope(z, directions: DirectionSet) -> np.ndarray:
    """Average over directions of the midline between the two multichannel envelopes.

    Directions whose projection has fewer than two maxima or two minima are
    skipped; if that leaves fewer than half of them, ``z`` is residue-like.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 2 or z.shape[1] != directions.dimension:
        raise ValueError("direction dimension must match the channel count")
    n = z.shape[0]
    projections = z @ directions.vectors.T
    total = np.zeros_like(z)
    used = 0
    for k in range(len(directions)):
        ext = _usable_extrema(projections[:, k])
        if ext is None:
            continue
        upper = envelope_through(ext.maxima, z[ext.maxima], n)
        lower = envelope_through(ext.minima, z[ext.minima], n)
        total += 0.5 * (upper + lower)
        used += 1
    if 2 * used < len(directions):
        raise ResidueLike(f"only {used} of {len(directions)} projections can be enveloped")
    return total / used


def _is_residue_like(z, directions: DirectionSet) -> bool:
    projections = np.asarray(z) @ directions.vectors.T
    usable = sum(_usable_extrema(projections[:, k]) is not None for k in range(len(directions)))
    return 2 * usable < len(directions)


def _projections_are_imfs(z, directions: DirectionSet) -> bool:
    """At least one enveloped projection has extrema and zero-crossing counts within one.

    Requiring *every* projection to pass never settles once noise channels
    are present: noise adds extrema without zero crossings in most
    directions, and the repeated sifts drain the signal channels.
    """
    projections = np.asarray(z) @ directions.vectors.T
    for k in range(len(directions)):
        p = projections[:, k]
        ext = _usable_extrema(p)
        if ext is not None and abs(ext.count - count_zero_crossings(p)) <= 1:
            return True
    return False


def _sift_multivariate(z, directions: DirectionSet, config: SiftConfig) -> np.ndarray:
    h = z
    streak = 0
    for n_sifts in range(1, config.max_sifts + 1):
        try:
            h = h - multivariate_mean_envelope(h, directions)
        except ResidueLike:
            if n_sifts == 1:
                raise
            break
        streak = streak + 1 if _projections_are_imfs(h, directions) else 0
        if streak >= config.s_number:
            break
    return h


def _decompose(z: np.ndarray, directions: DirectionSet, config: SiftConfig):
    limit = HARD_IMF_LIMIT if config.max_imfs is None else config.max_imfs
    residual = z.copy()
    imfs = []
    while len(imfs) < limit and not _is_residue_like(residual, directions):
        imf = _sift_multivariate(residual, directions, config)
        imfs.append(imf)
        residual = residual - imf
    stacked = np.array(imfs).reshape(len(imfs), *z.shape)  # (n, T, d)
    return stacked.transpose(2, 0, 1), residual.T


def memd(
    series: MultichannelSeries,
    config: SiftConfig = SiftConfig(),
    directions: int = 64,
    seed: int = 0,
) -> ImfDecomposition:
    """Multivariate EMD of all channels of ``series`` (no added noise)."""
    if series.length < 32:
        raise ValueError(f"memd needs T >= 32, got {series.length}")
    z = series.values
    if series.n_channels == 1:
        z = np.column_stack([z, np.zeros_like(z)])
    dirs = generate_directions(z.shape[1], max(directions, 2 * z.shape[1]), seed)
    imfs, residues = _decompose(z, dirs, config)
    m = series.n_channels
    return ImfDecomposition(series.channel_names, imfs[:m], residues[:m], series.start_period)


def noise_channels(series: MultichannelSeries, config: NaMemdConfig) -> np.ndarray:
    """White Gaussian noise scaled to a fraction of the mean channel std."""
    scale = config.noise_amplitude * float(np.mean(series.values.std(axis=0)))
    rng = np.random.default_rng(config.rng_seed)
    return scale * rng.standard_normal((series.length, config.noise_channels))


def na_memd(series: MultichannelSeries, config: NaMemdConfig = NaMemdConfig()) -> ImfDecomposition:
    """Noise-assisted MEMD: sift the channels together with extra noise channels.

    The noise channels' own modes are dropped; the signal channels are never
    modified by them, so each returned channel reconstructs exactly.
    """
    if series.length < 32:
        raise ValueError(f"na_memd needs T >= 32, got {series.length}")
    z = np.column_stack([series.values, noise_channels(series, config)])
    dirs = generate_directions(z.shape[1], max(config.directions, 2 * z.shape[1]), config.rng_seed)
    imfs, residues = _decompose(z, dirs, config.sift)
    m = series.n_channels
    return ImfDecomposition(series.channel_names, imfs[:m], residues[:m], series.start_period)


def mean_period(imf, estimator: str = "maxima") -> float:
    """Sample length divided by the number of cycles seen in ``imf``.

    ``estimator="maxima"`` counts local maxima; ``"zero-crossing"`` counts
    half the zero crossings. No detected cycle gives the full length.
    """
    x = np.asarray(imf, dtype=float)
    if x.size < 3:
        raise ValueError("mean_period needs at least 3 samples")
    if estimator == "maxima":
        cycles = find_extrema(x).maxima.size
    elif estimator == "zero-crossing":
        cycles = count_zero_crossings(x) / 2.0
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    return x.size / cycles if cycles > 0 else float(x.size)


def pearson_correlation(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("pearson_correlation needs equal-length inputs")
    da = a - a.mean()
    db = b - b.mean()
    na = np.sqrt(np.dot(da, da))
    nb = np.sqrt(np.dot(db, db))
    if na == 0 or nb == 0:
        raise ValueError("pearson_correlation is undefined for a constant input")
    return float(np.clip(np.dot(da, db) / (na * nb), -1.0, 1.0))


def diagnostics_table(decomposition: ImfDecomposition, original: MultichannelSeries,
                      estimator: str = "maxima") -> pd.DataFrame:
    """Mean period and correlation with the source channel for every mode.

    One row per IMF plus one for the residual (which has no period).
    """
    rows = []
    for c, name in enumerate(decomposition.channel_names):
        source = original.channel(name)
        for j in range(decomposition.imf_count):
            imf = decomposition.imfs[c, j]
            rows.append({
                "channel": name,
                "component": f"IMF {j + 1}",
                "mean_period": mean_period(imf, estimator),
                "pearson": _safe_corr(imf, source),
            })
        rows.append({
            "channel": name,
            "component": "Residual",
            "mean_period": np.nan,
            "pearson": _safe_corr(decomposition.residues[c], source),
        })
    return pd.DataFrame(rows, columns=["channel", "component", "mean_period", "pearson"])


def _safe_corr(a, b) -> float:
    try:
        return pearson_correlation(a, b)
    except ValueError:
        return float("nan")
