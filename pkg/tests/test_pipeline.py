import json

import numpy as np
import pandas as pd
import pytest

from namemd.config import ConfigError, ExperimentConfig, config_from_dict, dump_config, load_config
from namemd.forecasters import ModelSpec
from namemd.multivariate import NaMemdConfig
from namemd.pipeline import (
    CellError,
    cell_seed,
    component_groups,
    decompose,
    load_reports,
    prepare,
    report_table,
    run_decomposed_forecast,
    run_decomposition,
    run_experiment,
    run_single_forecast,
)
from namemd.series import MultichannelSeries, SeriesError, write_csv
from namemd.synthetic import benchmark_series


def make_config(series, tmp_path=None, **kw):
    kw.setdefault("models", (ModelSpec("LR"),))
    return ExperimentConfig(
        input_path="",
        target_channel=series.channel_names[0],
        source_channels=series.channel_names[1:],
        output_dir=str(tmp_path or "unused"),
        **kw,
    )


@pytest.fixture(scope="module")
def small():
    return benchmark_series(1, length=96, n_sources=2)


def _series(cols, names):
    return MultichannelSeries(np.column_stack(cols), names, pd.Period("2000-01", freq="M"))


# --- single variant ---------------------------------------------------------------------

def test_seasonal_naive_on_periodic_series():
    base = np.random.default_rng(0).uniform(5, 10, 12)
    y = np.tile(base, 6)
    s = _series([y, y + 1], ("y", "x"))
    cfg = make_config(s, models=(ModelSpec("SeasonalNaive"),))
    for h in (1, 2, 3):
        assert run_single_forecast(cfg, ModelSpec("SeasonalNaive"), h, prepare(cfg, s)).mape < 1e-12


def test_lr_on_trend():
    t = np.arange(120.0)
    y = 100 + 0.5 * t + 0.01 * np.random.default_rng(0).normal(size=120)
    s = _series([y, y[::-1]], ("y", "x"))
    cfg = make_config(s)
    r = run_single_forecast(cfg, ModelSpec("LR"), 1, prepare(cfg, s))
    assert r.mape < 0.01
    assert len(r.forecasts) == len(r.actuals) == 120 - 96
    assert r.dates[0] == str(s.start_period + 96)


def test_single_forecast_in_data_units(small):
    cfg = make_config(small)
    r = run_single_forecast(cfg, ModelSpec("LR"), 2, prepare(cfg, small))
    actual = small.channel("destination")[76:]
    np.testing.assert_array_equal(r.actuals, actual)
    assert r.mape < 0.1 and r.leakage_mode == "whole-series"


# --- decomposed variant --------------------------------------------------------------------

def test_decomposed_is_sum_of_components(small):
    cfg = make_config(small)
    r = run_decomposed_forecast(cfg, ModelSpec("LR"), 1, prepare(cfg, small))
    total = np.sum([np.asarray(v) for v in r.component_forecasts.values()], axis=0)
    assert np.max(np.abs(total - np.asarray(r.forecasts))) < 1e-9
    assert list(r.component_forecasts)[-1] == "residue"


def test_decomposed_needs_sources(small):
    s = small.select(("destination",))
    cfg = make_config(s)
    with pytest.raises(CellError, match="source"):
        run_decomposed_forecast(cfg, ModelSpec("LR"), 1, prepare(cfg, s))


def test_decomposed_beats_single_on_tones():
    # Every channel is a noisy observation of the same tones. A noiseless
    # target would follow an exact order-6 linear recurrence that 12-lag LR
    # reproduces to rounding error, leaving nothing for decomposition to add.
    wins = []
    t = np.arange(120.0)
    for seed in range(10):
        rng = np.random.default_rng(seed)
        fast = np.sin(2 * np.pi * t / 6 + rng.uniform(0, 6))
        slow = np.sin(2 * np.pi * t / 30 + rng.uniform(0, 6))
        clean = 10 + fast + slow + 0.02 * t
        y = clean + rng.normal(0, 0.3, 120)
        cols = [y] + [clean + rng.normal(0, 0.3, 120) for _ in range(2)]
        s = _series(cols, ("y", "a", "b"))
        cfg = make_config(s, na_memd=NaMemdConfig(rng_seed=seed), seed=seed)
        p = prepare(cfg, s)
        single = run_single_forecast(cfg, ModelSpec("LR"), 1, p).rmse
        dec = run_decomposed_forecast(cfg, ModelSpec("LR"), 1, p).rmse
        wins.append(single - dec)
    assert np.median(wins) > 0


def test_train_only_decomposition_sees_only_training_span(small, tmp_path):
    cfg = make_config(small, tmp_path, leakage_mode="train-only")
    dec, _, paths = run_decomposition(cfg, small)
    assert dec.length == 76
    frame = pd.read_csv(paths[0])
    assert frame["date"].iloc[-1] == str(small.start_period + 75)


def test_train_only_forecasts_ignore_future(small):
    """Changing the final observation cannot move any horizon-1 forecast."""
    cfg = make_config(small, leakage_mode="train-only", models=(ModelSpec("LR"),))
    vals = small.values.copy()
    vals[-1] += 5.0
    bumped = MultichannelSeries(vals, small.channel_names, small.start_period)
    a = run_decomposed_forecast(cfg, ModelSpec("LR"), 1, prepare(cfg, small))
    b = run_decomposed_forecast(cfg, ModelSpec("LR"), 1, prepare(cfg, bumped))
    assert a.forecasts == b.forecasts
    assert a.leakage_mode == "train-only"


def test_whole_series_mode_does_leak(small):
    # contrast with the train-only test: the decomposition here uses every value
    cfg = make_config(small)
    vals = small.values.copy()
    vals[-1] += 5.0
    bumped = MultichannelSeries(vals, small.channel_names, small.start_period)
    a = decompose(cfg, prepare(cfg, small))
    b = decompose(cfg, prepare(cfg, bumped))
    assert not np.array_equal(a.imfs[0, :, :76], b.imfs[0, :, :76]) or a.imf_count != b.imf_count


def test_component_grouping():
    t = np.arange(240)
    imfs = np.array([np.sin(2 * np.pi * t / p) for p in (3, 6, 24, 60)])
    assert [g for g, _ in component_groups(imfs, "none")] == ["imf_1", "imf_2", "imf_3", "imf_4"]
    groups = component_groups(imfs, "highfreq-under-12m")
    assert groups == [("highfreq", [0, 1]), ("imf_3", [2]), ("imf_4", [3])]


def test_grouped_forecast_still_additive(small):
    cfg = make_config(small, grouping="highfreq-under-12m")
    r = run_decomposed_forecast(cfg, ModelSpec("LR"), 1, prepare(cfg, small))
    total = np.sum([np.asarray(v) for v in r.component_forecasts.values()], axis=0)
    assert np.max(np.abs(total - np.asarray(r.forecasts))) < 1e-9


# --- preparation errors ---------------------------------------------------------------------

def test_prepare_rejects_short_and_flat():
    s = _series([np.arange(20.0), np.arange(20.0) ** 2], ("y", "x"))
    with pytest.raises(SeriesError, match="24"):
        prepare(make_config(s), s)
    s = _series([np.r_[np.ones(35), np.arange(5.0)], np.arange(40.0)], ("y", "x"))
    with pytest.raises(SeriesError, match="constant"):
        prepare(make_config(s, lag_count=6), s)


def test_scaling_fit_on_training_span(small):
    cfg = make_config(small)
    p = prepare(cfg, small)
    train = p.scaled.values[: p.n_train]
    np.testing.assert_allclose(train.min(axis=0), 0.0, atol=1e-15)
    np.testing.assert_allclose(train.max(axis=0), 1.0, atol=1e-15)


# --- full grid --------------------------------------------------------------------------------

def test_grid_counts_and_outputs(small, tmp_path):
    cfg = make_config(small, tmp_path, models=(ModelSpec("LR"), ModelSpec("SeasonalNaive")), horizons=(1, 3))
    art = run_experiment(cfg, small)
    assert len(art.reports) == 8 and set(art.dm_tests) == {"LR", "SeasonalNaive"}
    keys = {r.key for r in art.reports}
    assert len(keys) == 8
    for name in ("report.json", "report_table.csv", "dm_tests.json", "diagnostics.csv",
                 "imfs_destination.csv", "imfs_source_1.csv", "imfs_source_2.csv"):
        assert (tmp_path / name).exists(), name
    n = art.decomposition.imf_count
    diag = pd.read_csv(tmp_path / "diagnostics.csv")
    assert (diag.groupby("channel").size() == n + 1).all()
    assert art.dm_tests["LR"].truncation_lag == 2
    payload = json.loads((tmp_path / "report.json").read_text())
    assert payload["dm_pooled_across_horizons"] and payload["leakage_mode"] == "whole-series"
    table = pd.read_csv(tmp_path / "report_table.csv")
    assert list(table.columns[:5]) == ["horizon", "variant", "LR_MAPE", "LR_RMSE", "LR_Dstat"]
    assert list(zip(table.horizon, table.variant)) == [(1, "single"), (1, "decomposed"), (3, "single"), (3, "decomposed")]
    assert [r.key for r in load_reports(tmp_path / "report.json")] == [r.key for r in art.reports]


def test_imf_dump_reconstructs_data(small, tmp_path):
    cfg = make_config(small, tmp_path)
    dec, _, _ = run_decomposition(cfg, small)
    frame = pd.read_csv(tmp_path / "imfs_destination.csv", float_precision="round_trip")
    total = frame.drop(columns="date").sum(axis=1).to_numpy()
    assert np.max(np.abs(total - small.channel("destination"))) < 1e-6
    assert dec.channel_names == small.channel_names


def test_rerun_byte_identical(small, tmp_path):
    cfg_a = make_config(small, tmp_path / "a", models=(ModelSpec("ELM", iterations=3),))
    cfg_b = make_config(small, tmp_path / "b", models=(ModelSpec("ELM", iterations=3),))
    run_experiment(cfg_a, small)
    run_experiment(cfg_b, small)
    a = json.loads((tmp_path / "a" / "report.json").read_bytes())
    b = json.loads((tmp_path / "b" / "report.json").read_bytes())
    a["config"].pop("output_dir"), b["config"].pop("output_dir")
    assert a == b
    for name in ("report_table.csv", "dm_tests.json", "diagnostics.csv", "imfs_destination.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_cells_independent_of_grid_order(small):
    one = run_experiment(make_config(small, models=(ModelSpec("ELM", iterations=2), ModelSpec("LR"))), small, write=False)
    two = run_experiment(make_config(small, models=(ModelSpec("LR"), ModelSpec("ELM", iterations=2))), small, write=False)
    a = {r.key: r.forecasts for r in one.reports}
    b = {r.key: r.forecasts for r in two.reports}
    assert a == b


def test_cell_seed_depends_on_key():
    assert cell_seed(0, "ELM", "single", 1) == cell_seed(0, "ELM", "single", 1)
    assert cell_seed(0, "ELM", "single", 1) != cell_seed(0, "ELM", "single", 2)
    assert cell_seed(0, "ELM", "single", 1) != cell_seed(1, "ELM", "single", 1)


def test_failing_cell_is_named(small):
    cfg = make_config(small, models=(ModelSpec("BPNN", learning_rate=1e300),))
    with pytest.raises(CellError, match="BPNN/single/h1"):
        run_experiment(cfg, small, write=False)


def test_report_table_layout():
    from namemd.evaluation import ForecastReport
    reps = [ForecastReport(m, v, h, 0.1, 1.0, 0.5, [1.0], [1.0]) for m in ("A", "B") for h in (2, 1) for v in ("decomposed", "single")]
    t = report_table(reps)
    assert list(t.columns) == ["horizon", "variant"] + [f"{m}_{c}" for m in "AB" for c in ("MAPE", "RMSE", "Dstat")]
    assert list(t.variant) == ["single", "decomposed"] * 2


# --- configuration ----------------------------------------------------------------------------

def test_config_yaml_round_trip(tmp_path, small):
    write_csv(small, tmp_path / "data.csv")
    (tmp_path / "c.yaml").write_text(
        "input_path: data.csv\n"
        "target_channel: destination\n"
        "source_channels: [source_1, source_2]\n"
        "models: [LR, {kind: ELM, iterations: 5}]\n"
        "na_memd: {noise_amplitude: 0.2, sift: {s_number: 3}}\n"
        "output_dir: out\n"
        "seed: 7\n"
    )
    cfg = load_config(tmp_path / "c.yaml")
    assert cfg.input_path == str(tmp_path / "data.csv")
    assert cfg.models[1] == ModelSpec("ELM", iterations=5)
    assert cfg.na_memd.rng_seed == 7 and cfg.na_memd.sift.s_number == 3
    dump_config(cfg, tmp_path / "d.yaml")
    assert load_config(tmp_path / "d.yaml") == cfg


@pytest.mark.parametrize("raw, msg", [
    ({"target_channel": "a", "source_channels": ["a"]}, "must not also be"),
    ({"target_channel": "a", "source_channels": [], "horizons": [0]}, "horizons"),
    ({"target_channel": "a", "source_channels": [], "train_fraction": 1.0}, "train_fraction"),
    ({"target_channel": "a", "source_channels": [], "leakage_mode": "peek"}, "leakage_mode"),
    ({"target_channel": "a", "source_channels": [], "grouping": "weekly"}, "grouping"),
    ({"target_channel": "a", "source_channels": [], "colour": "red"}, "unknown config keys"),
    ({"target_channel": "a", "source_channels": [], "models": ["LR", "LR"]}, "duplicate"),
    ({"source_channels": []}, "target_channel"),
])
def test_config_validation(raw, msg):
    with pytest.raises(ConfigError, match=msg):
        config_from_dict({"input_path": "x.csv", **raw})
