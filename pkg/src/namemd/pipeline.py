"""Process -> decompose -> forecast -> analyse.

The single variant forecasts the (scaled) target directly. The decomposed
variant runs NA-MEMD on the target together with its source channels, fits
one model per target component, and sums the component forecasts.

Multi-step forecasts use the direct strategy: a separate model is trained
for every horizon.
"""

from __future__ import annotations

import json
import logging
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from namemd.config import ExperimentConfig
from namemd.evaluation import DmTestResult, ForecastReport, dm_test, dstat, mape, rmse
from namemd.forecasters import ModelSpec, predict, train
from namemd.multivariate import (
    ImfDecomposition,
    diagnostics_table,
    mean_period,
    na_memd,
)
from namemd.series import (
    MultichannelSeries,
    NormalizationParams,
    SeriesError,
    MIN_PIPELINE_LENGTH,
    ingest_csv,
    make_lag_matrix,
)
from namemd.univariate import SiftConfig

log = logging.getLogger(__name__)

HIGHFREQ_PERIOD = 12.0


class CellError(RuntimeError):
    """A grid cell (model, variant, horizon) failed."""


def cell_seed(global_seed: int, *key) -> int:
    """Seed for one grid cell; depends only on the global seed and the key."""
    tag = zlib.crc32("/".join(str(k) for k in key).encode())
    return int(np.random.SeedSequence([int(global_seed), tag]).generate_state(1)[0])


@dataclass
class PreparedData:
    """Channels scaled to [0, 1] on the training span, plus the scaling."""

    raw: MultichannelSeries
    scaled: MultichannelSeries
    scaling: NormalizationParams
    n_train: int

    @property
    def target_raw(self) -> np.ndarray:
        return self.raw.values[:, 0]

    @property
    def target_scaled(self) -> np.ndarray:
        return self.scaled.values[:, 0]


@dataclass
class RunArtifacts:
    reports: list[ForecastReport]
    dm_tests: dict[str, DmTestResult]
    diagnostics: pd.DataFrame
    decomposition: ImfDecomposition
    paths: dict[str, Path] = field(default_factory=dict)


def prepare(config: ExperimentConfig, series: MultichannelSeries | None = None) -> PreparedData:
    if series is None:
        series = ingest_csv(config.input_path)
    series = series.select(config.channels)
    if series.length < MIN_PIPELINE_LENGTH:
        raise SeriesError(f"pipeline needs at least {MIN_PIPELINE_LENGTH} months, got {series.length}")
    n_train = int(np.floor(series.length * config.train_fraction))
    if n_train < config.lag_count + max(config.horizons) + 1:
        raise SeriesError(f"training span of {n_train} months too short for the lag structure")
    if n_train >= series.length:
        raise SeriesError("empty test span")
    train_vals = series.values[:n_train]
    lo, hi = train_vals.min(axis=0), train_vals.max(axis=0)
    flat = [n for n, a, b in zip(series.channel_names, lo, hi) if not b > a]
    if flat:
        raise SeriesError(f"constant channel(s) in training span: {', '.join(flat)}")
    scaling = NormalizationParams(lo, hi)
    scaled = MultichannelSeries(scaling.apply(series.values), series.channel_names, series.start_period)
    return PreparedData(series, scaled, scaling, n_train)


def _test_rows(n_total: int, n_train: int, lag: int, horizon: int):
    """Target positions and window start positions of every test point."""
    targets = np.arange(n_train, n_total)
    return targets, targets - horizon - lag + 1


def _fit_and_predict(values, n_train: int, lag: int, horizon: int, spec: ModelSpec,
                     test_windows: np.ndarray) -> np.ndarray:
    """Train on rows whose target lies in the training span; predict the given windows.

    The component gets its own min-max scaling from the training span; a
    component flat over that span is forecast as that constant.
    """
    values = np.asarray(values, dtype=float)
    train_part = values[:n_train]
    lo, hi = float(train_part.min()), float(train_part.max())
    if not hi > lo:
        return np.full(test_windows.shape[0], lo)
    scale = NormalizationParams(lo, hi)
    data = make_lag_matrix(scale.apply(train_part), lag, horizon)
    model = train(data, spec)
    pred = predict(model, scale.apply(test_windows))
    return scale.invert(pred)


def _score(config, spec, variant, horizon, prepared, forecast, components=None) -> ForecastReport:
    y = prepared.target_raw
    n_train = prepared.n_train
    actual = y[n_train:]
    anchor = y[n_train - 1:-1]
    fc = np.asarray(forecast, dtype=float)
    if not np.all(np.isfinite(fc)):
        raise CellError(f"{spec.kind}/{variant}/h{horizon}: non-finite forecast")
    report = ForecastReport(
        model=spec.kind,
        variant=variant,
        horizon=horizon,
        mape=mape(actual, fc),
        rmse=rmse(actual, fc),
        dstat=dstat(actual, fc, anchor),
        forecasts=fc.tolist(),
        actuals=actual.tolist(),
        dates=list(prepared.raw.dates[n_train:].strftime("%Y-%m")),
        leakage_mode=config.leakage_mode,
        component_forecasts={k: v.tolist() for k, v in (components or {}).items()},
    )
    return report


def run_single_forecast(config: ExperimentConfig, model: ModelSpec, horizon: int,
                        prepared: PreparedData | None = None) -> ForecastReport:
    prepared = prepared or prepare(config)
    T, n_train, lag = prepared.raw.length, prepared.n_train, config.lag_count
    y = prepared.target_scaled
    _, starts = _test_rows(T, n_train, lag, horizon)
    windows = np.stack([y[s:s + lag] for s in starts])
    spec = model.with_seed(cell_seed(config.seed, model.kind, "single", horizon))
    scaled_fc = _fit_and_predict(y, n_train, lag, horizon, spec, windows)
    span = prepared.scaling.maximum[0] - prepared.scaling.minimum[0]
    forecast = scaled_fc * span + prepared.scaling.minimum[0]
    return _score(config, model, "single", horizon, prepared, forecast)


# --- decomposition ------------------------------------------------------------

def _na_config(config: ExperimentConfig, max_imfs: int | None = None):
    nm = config.na_memd
    if max_imfs is not None:
        nm = replace(nm, sift=SiftConfig(nm.sift.s_number, nm.sift.max_sifts, max_imfs))
    return nm


def decompose(config: ExperimentConfig, prepared: PreparedData) -> ImfDecomposition:
    """Decomposition used for training: whole series, or the training span only."""
    series = prepared.scaled
    if config.leakage_mode == "train-only":
        series = series.head(prepared.n_train)
    return na_memd(series, _na_config(config))


def component_groups(target_imfs: np.ndarray, grouping: str) -> list[tuple[str, list[int]]]:
    """Names and IMF indices of the forecast components (the residue is separate)."""
    n = target_imfs.shape[0]
    if grouping == "none":
        return [(f"imf_{j + 1}", [j]) for j in range(n)]
    high = [j for j in range(n) if mean_period(target_imfs[j]) < HIGHFREQ_PERIOD]
    groups = [("highfreq", high)] if high else []
    groups += [(f"imf_{j + 1}", [j]) for j in range(n) if j not in high]
    return groups


def _component_matrix(target_imfs, residue, groups) -> np.ndarray:
    cols = [target_imfs[idx].sum(axis=0) for _, idx in groups]
    cols.append(residue)
    return np.column_stack(cols)


class _OriginDecompositions:
    """Target components seen from each forecast origin, using only data up to it.

    Origins inside the training span reuse the training decomposition (it
    contains no test data); later origins decompose the observed prefix,
    capped at the training IMF count and zero-padded below it.
    """

    def __init__(self, config, prepared, train_dec, groups):
        self.config = config
        self.prepared = prepared
        self.groups = groups
        self.n_imfs = train_dec.imf_count
        self.train_components = _component_matrix(train_dec.imfs[0], train_dec.residues[0], groups)
        self._cache: dict[int, np.ndarray] = {}

    def window(self, origin: int, lag: int) -> np.ndarray:
        """(lag, n_components) values ending at ``origin`` (inclusive)."""
        if origin < self.prepared.n_train:
            comps = self.train_components
        else:
            comps = self._cache.get(origin)
            if comps is None:
                comps = self._decompose_prefix(origin + 1)
                self._cache[origin] = comps
        return comps[origin - lag + 1:origin + 1]

    def _decompose_prefix(self, length: int) -> np.ndarray:
        prefix = self.prepared.scaled.head(length)
        dec = na_memd(prefix, _na_config(self.config, max_imfs=self.n_imfs))
        imfs = np.zeros((self.n_imfs, length))
        imfs[:dec.imf_count] = dec.imfs[0]
        return _component_matrix(imfs, dec.residues[0], self.groups)


def run_decomposed_forecast(config: ExperimentConfig, model: ModelSpec, horizon: int,
                            prepared: PreparedData | None = None,
                            decomposition: ImfDecomposition | None = None,
                            origins: _OriginDecompositions | None = None) -> ForecastReport:
    prepared = prepared or prepare(config)
    if not config.source_channels:
        raise CellError("the decomposed variant needs at least one source channel")
    dec = decomposition or decompose(config, prepared)
    T, n_train, lag = prepared.raw.length, prepared.n_train, config.lag_count
    groups = component_groups(dec.imfs[0], config.grouping)
    names = [g for g, _ in groups] + ["residue"]
    comps = _component_matrix(dec.imfs[0], dec.residues[0], groups)
    _, starts = _test_rows(T, n_train, lag, horizon)

    if config.leakage_mode == "whole-series":
        windows = np.stack([comps[s:s + lag] for s in starts])
    else:
        origins = origins or _OriginDecompositions(config, prepared, dec, groups)
        windows = np.stack([origins.window(s + lag - 1, lag) for s in starts])

    # components live in the target's [0, 1] scale; map them back to data units
    span = float(prepared.scaling.maximum[0] - prepared.scaling.minimum[0])
    offset = float(prepared.scaling.minimum[0])
    component_fc = {}
    for c, name in enumerate(names):
        spec = model.with_seed(cell_seed(config.seed, model.kind, "decomposed", horizon, name))
        pred = _fit_and_predict(comps[:, c], n_train, lag, horizon, spec, windows[:, :, c])
        component_fc[name] = pred * span + (offset if name == "residue" else 0.0)
    forecast = np.sum(list(component_fc.values()), axis=0)
    return _score(config, model, "decomposed", horizon, prepared, forecast, component_fc)


# --- full grid ----------------------------------------------------------------

def pooled_dm(reports: list[ForecastReport], model: str, max_horizon: int) -> DmTestResult:
    """DM test of decomposed against single, pooling every horizon of ``model``."""
    dec = sorted((r for r in reports if r.model == model and r.variant == "decomposed"),
                 key=lambda r: r.horizon)
    sgl = {r.horizon: r for r in reports if r.model == model and r.variant == "single"}
    actual = np.concatenate([r.actuals for r in dec])
    fa = np.concatenate([r.forecasts for r in dec])
    fb = np.concatenate([sgl[r.horizon].forecasts for r in dec])
    return dm_test(actual, fa, fb, horizon=max_horizon)


def to_original_units(dec: ImfDecomposition, scaling: NormalizationParams,
                      channel_names) -> ImfDecomposition:
    idx = [channel_names.index(n) for n in dec.channel_names]
    span = (scaling.maximum - scaling.minimum)[idx]
    imfs = dec.imfs * span[:, None, None]
    residues = dec.residues * span[:, None] + scaling.minimum[idx][:, None]
    return ImfDecomposition(dec.channel_names, imfs, residues, dec.start_period)


def _decomposition_outputs(config, prepared, dec):
    dec_units = to_original_units(dec, prepared.scaling, list(prepared.raw.channel_names))
    observed = prepared.raw if config.leakage_mode == "whole-series" else prepared.raw.head(prepared.n_train)
    return dec_units, diagnostics_table(dec_units, observed)


def run_decomposition(config: ExperimentConfig, series: MultichannelSeries | None = None,
                      write: bool = True) -> tuple[ImfDecomposition, pd.DataFrame, list[Path]]:
    """Decomposition stage alone: IMFs in data units plus the diagnostics table."""
    prepared = prepare(config, series)
    dec_units, diagnostics = _decomposition_outputs(config, prepared, decompose(config, prepared))
    paths = []
    if write:
        out = Path(config.output_dir)
        paths = dec_units.to_csv(out)
        paths.append(out / "diagnostics.csv")
        diagnostics.to_csv(paths[-1], index=False, float_format="%.10g")
    return dec_units, diagnostics, paths


def run_experiment(config: ExperimentConfig, series: MultichannelSeries | None = None,
                   write: bool = True) -> RunArtifacts:
    prepared = prepare(config, series)
    dec = decompose(config, prepared)
    groups = component_groups(dec.imfs[0], config.grouping)
    origins = (_OriginDecompositions(config, prepared, dec, groups)
               if config.leakage_mode == "train-only" else None)

    reports = []
    for spec in config.models:
        for h in config.horizons:
            for variant in ("single", "decomposed"):
                log.info("cell %s/%s/h%d", spec.kind, variant, h)
                try:
                    if variant == "single":
                        r = run_single_forecast(config, spec, h, prepared)
                    else:
                        r = run_decomposed_forecast(config, spec, h, prepared, dec, origins)
                except Exception as exc:
                    raise CellError(f"cell {spec.kind}/{variant}/h{h} failed: {exc}") from exc
                reports.append(r)

    dm = {}
    for spec in config.models:
        try:
            dm[spec.kind] = pooled_dm(reports, spec.kind, max(config.horizons))
        except Exception as exc:
            raise CellError(f"DM test for {spec.kind} failed: {exc}") from exc

    dec_units, diagnostics = _decomposition_outputs(config, prepared, dec)
    artifacts = RunArtifacts(reports, dm, diagnostics, dec_units)
    if write:
        artifacts.paths = write_artifacts(artifacts, config)
    return artifacts


# --- output -------------------------------------------------------------------

def report_payload(artifacts: RunArtifacts, config: ExperimentConfig) -> dict:
    return {
        "config": config.to_dict(),
        "leakage_mode": config.leakage_mode,
        "dm_pooled_across_horizons": True,
        "reports": [r.to_dict() for r in artifacts.reports],
    }


def report_table(reports: list[ForecastReport]) -> pd.DataFrame:
    """Rows: horizon x variant; columns: model x criterion."""
    models = list(dict.fromkeys(r.model for r in reports))
    rows = {}
    for r in reports:
        row = rows.setdefault((r.horizon, r.variant), {"horizon": r.horizon, "variant": r.variant})
        row[f"{r.model}_MAPE"] = r.mape
        row[f"{r.model}_RMSE"] = r.rmse
        row[f"{r.model}_Dstat"] = r.dstat
    cols = ["horizon", "variant"] + [f"{m}_{c}" for m in models for c in ("MAPE", "RMSE", "Dstat")]
    order = sorted(rows, key=lambda k: (k[0], 0 if k[1] == "single" else 1))
    return pd.DataFrame([rows[k] for k in order], columns=cols)


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_artifacts(artifacts: RunArtifacts, config: ExperimentConfig) -> dict[str, Path]:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    for p in artifacts.decomposition.to_csv(out):
        paths[p.stem] = p
    paths["report"] = out / "report.json"
    _dump_json(report_payload(artifacts, config), paths["report"])
    paths["report_table"] = out / "report_table.csv"
    report_table(artifacts.reports).to_csv(paths["report_table"], index=False, float_format="%.10g")
    paths["dm_tests"] = out / "dm_tests.json"
    _dump_json({k: v.to_dict() for k, v in artifacts.dm_tests.items()}, paths["dm_tests"])
    paths["diagnostics"] = out / "diagnostics.csv"
    artifacts.diagnostics.to_csv(paths["diagnostics"], index=False, float_format="%.10g")
    return paths


def load_reports(path) -> list[ForecastReport]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return [ForecastReport(**d) for d in payload["reports"]]
