import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from namemd.multivariate import (
    ImfDecomposition,
    NaMemdConfig,
    diagnostics_table,
    generate_directions,
    hammersley,
    mean_period,
    memd,
    multivariate_mean_envelope,
    na_memd,
    noise_channels,
    pearson_correlation,
    project,
)
from namemd.series import MultichannelSeries
from namemd.synthetic import two_tone
from namemd.univariate import ResidueLike


def corr(a, b):
    return np.corrcoef(a, b)[0, 1]


# --- directions ------------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(2, 8), st.integers(0, 200), st.integers(0, 2**31 - 1))
def test_directions_are_unit_vectors(d, extra, seed):
    dirs = generate_directions(d, 2 * d + extra, seed)
    assert dirs.vectors.shape == (2 * d + extra, d)
    assert np.max(np.abs(np.linalg.norm(dirs.vectors, axis=1) - 1.0)) < 1e-12


def test_planar_directions_spread_out():
    v = generate_directions(2, 8, seed=3).vectors
    cos = np.clip(v @ v.T, -1, 1)
    angles = np.degrees(np.arccos(cos[np.triu_indices(8, 1)]))
    assert angles.min() > 20.0


@pytest.mark.parametrize("seed", range(5))
def test_directions_centroid_near_zero(seed):
    v = generate_directions(4, 64, seed).vectors
    assert np.linalg.norm(v.mean(axis=0)) < 0.2


def test_directions_cover_sphere_uniformly():
    # fraction of points in a spherical cap of height h is h/2 in 3-D
    v = generate_directions(3, 2000, seed=0).vectors
    for axis in range(3):
        assert np.mean(v[:, axis] > 0.5) == pytest.approx(0.25, abs=0.03)


def test_directions_deterministic_and_seeded():
    a = generate_directions(5, 64, 7).vectors
    assert np.array_equal(a, generate_directions(5, 64, 7).vectors)
    assert not np.array_equal(a, generate_directions(5, 64, 8).vectors)


def test_direction_count_checked():
    with pytest.raises(ValueError):
        generate_directions(4, 7)
    with pytest.raises(ValueError):
        generate_directions(1, 8)


def test_hammersley_first_points():
    h = hammersley(4, 3)
    np.testing.assert_allclose(h[:, 0], [0.125, 0.375, 0.625, 0.875])
    np.testing.assert_allclose(h[:, 1], [0.5, 0.25, 0.75, 0.125])
    np.testing.assert_allclose(h[:, 2], [1 / 3, 2 / 3, 1 / 9, 4 / 9])


# --- projection ------------------------------------------------------------------

def test_projection_cases():
    rng = np.random.default_rng(0)
    z = rng.normal(size=(50, 3))
    np.testing.assert_array_equal(project(z, [1.0, 0, 0]), z[:, 0])
    assert np.ptp(project(np.full((10, 3), 2.0), [0.6, 0.8, 0.0])) == 0.0
    zo = np.column_stack([rng.normal(size=20), np.zeros(20), np.zeros(20)])
    np.testing.assert_array_equal(project(zo, [0.0, 1.0, 0.0]), 0.0)
    with pytest.raises(ValueError):
        project(z, [1.0, 0.0])


@settings(max_examples=50, deadline=None)
@given(st.floats(-100, 100), st.integers(0, 1000))
def test_projection_linear(alpha, seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(30, 4))
    u = generate_directions(4, 8, seed).vectors[0]
    np.testing.assert_allclose(project(alpha * z, u), alpha * project(z, u), atol=1e-12 * max(1, abs(alpha)) * 10)


# --- mean envelope ----------------------------------------------------------------

def test_mean_envelope_of_shared_sine_is_zero():
    t = np.arange(512)
    s = np.sin(2 * np.pi * t / 32)
    z = np.column_stack([s, s, s])
    m = multivariate_mean_envelope(z, generate_directions(3, 64, 0))
    assert np.max(np.abs(m[51:-51])) < 0.1


def test_mean_envelope_constant_is_residue():
    with pytest.raises(ResidueLike):
        multivariate_mean_envelope(np.ones((100, 2)), generate_directions(2, 8, 0))


def test_mean_envelope_homogeneous():
    rng = np.random.default_rng(4)
    z = rng.normal(size=(120, 3))
    dirs = generate_directions(3, 16, 1)
    np.testing.assert_allclose(multivariate_mean_envelope(2 * z, dirs),
                               2 * multivariate_mean_envelope(z, dirs), atol=1e-9)


# --- decomposition -----------------------------------------------------------------

def _series(values, names=None):
    values = np.asarray(values, dtype=float)
    names = names or tuple(f"c{j}" for j in range(values.shape[1]))
    return MultichannelSeries(values, names, pd.Period("2000-01", freq="M"))


def test_memd_two_tone():
    x, fast, slow = two_tone(512)
    dec = memd(_series(np.column_stack([x, x])))
    for c in range(2):
        assert corr(dec.imfs[c, 0], fast) > 0.9
    assert dec.imfs.shape[:2] == (2, dec.imf_count)
    assert np.max(np.abs(dec.reconstruct() - np.column_stack([x, x]))) < 1e-6


def test_memd_ramps_have_no_imfs():
    ramp = np.linspace(0, 1, 64)
    dec = memd(_series(np.column_stack([ramp, 2 * ramp])))
    assert dec.imf_count == 0
    np.testing.assert_array_equal(dec.residues[1], 2 * ramp)


def test_memd_single_channel():
    x, fast, _ = two_tone(256)
    dec = memd(_series(x[:, None]))
    assert dec.imfs.shape[0] == 1 and corr(dec.imfs[0, 0], fast) > 0.9


def test_memd_too_short():
    with pytest.raises(ValueError):
        memd(_series(np.ones((20, 2))))


def test_na_memd_two_tone():
    x, fast, slow = two_tone(512)
    dec = na_memd(_series(np.column_stack([x, x])), NaMemdConfig(rng_seed=1, noise_amplitude=0.05))
    assert corr(dec.imfs[0, 0], fast) > 0.9
    assert max(corr(dec.imfs[0, j], slow) for j in range(1, dec.imf_count)) > 0.9


def test_na_memd_needs_noise_channel():
    with pytest.raises(ValueError, match="noise channel"):
        NaMemdConfig(noise_channels=0)
    for amp in (0.0, 1.5):
        with pytest.raises(ValueError):
            NaMemdConfig(noise_amplitude=amp)


def test_noise_scale_and_seed():
    rng = np.random.default_rng(0)
    s = _series(rng.normal(size=(5000, 2)) * [1.0, 3.0])
    n = noise_channels(s, NaMemdConfig(noise_amplitude=0.1, noise_channels=3, rng_seed=5))
    assert n.shape == (5000, 3)
    assert n.std(axis=0) == pytest.approx(np.full(3, 0.1 * np.mean(s.values.std(axis=0))), rel=0.05)
    assert np.array_equal(n, noise_channels(s, NaMemdConfig(noise_channels=3, rng_seed=5)))


def test_na_memd_deterministic_and_complete():
    rng = np.random.default_rng(2)
    z = np.cumsum(rng.normal(size=(96, 3)), axis=0)
    cfg = NaMemdConfig(rng_seed=3)
    a, b = na_memd(_series(z), cfg), na_memd(_series(z), cfg)
    assert np.array_equal(a.imfs, b.imfs) and np.array_equal(a.residues, b.residues)
    assert np.max(np.abs(a.reconstruct() - z)) < 1e-6


@pytest.mark.parametrize("seed", range(10))
def test_na_memd_reconstructs_for_every_seed(seed):
    rng = np.random.default_rng(100 + seed)
    t = np.arange(128)
    z = np.column_stack([np.sin(2 * np.pi * t / 12) + rng.normal(0, 0.3, 128) + 0.02 * t for _ in range(2)])
    dec = na_memd(_series(z), NaMemdConfig(rng_seed=seed))
    assert np.max(np.abs(dec.reconstruct() - z)) < 1e-6


def test_decomposition_csv_round_trip(tmp_path):
    x, _, _ = two_tone(128)
    dec = memd(_series(np.column_stack([x, -x]), ("alpha", "beta")))
    paths = dec.to_csv(tmp_path)
    assert [p.name for p in paths] == ["imfs_alpha.csv", "imfs_beta.csv"]
    header = paths[0].read_text().splitlines()[0].split(",")
    assert header == ["date"] + [f"imf_{j + 1}" for j in range(dec.imf_count)] + ["residue"]
    back = ImfDecomposition.from_csv(paths)
    assert np.array_equal(back.imfs, dec.imfs) and back.channel_names == dec.channel_names
    assert back.start_period == dec.start_period


# --- diagnostics -------------------------------------------------------------------

def test_mean_period_counts_maxima():
    x = np.zeros(122)
    x[np.arange(1, 83, 2)] = 1.0  # 41 interior spikes
    assert mean_period(x) == pytest.approx(122 / 41)
    y = -np.abs(np.arange(122) - 60.0)
    assert mean_period(y) == 122.0
    assert mean_period(np.arange(122.0)) == 122.0


@pytest.mark.parametrize("p", [4, 8, 12, 24])
def test_mean_period_of_sine(p):
    t = np.arange(p * 10)
    assert mean_period(np.sin(2 * np.pi * (t + 0.3) / p)) == pytest.approx(p, rel=0.1)
    assert mean_period(np.sin(2 * np.pi * (t + 0.3) / p), "zero-crossing") == pytest.approx(p, rel=0.1)


def test_pearson():
    x = np.array([1.0, 5, 2, 8])
    assert pearson_correlation(x, x) == pytest.approx(1.0)
    assert pearson_correlation(x, -x) == pytest.approx(-1.0)
    assert pearson_correlation([1, 2, 3], [1, 2, 4]) == pytest.approx(np.sqrt(27 / 28), abs=1e-12)
    with pytest.raises(ValueError):
        pearson_correlation([1, 1, 1], [1, 2, 3])


def test_diagnostics_rows():
    x, _, _ = two_tone(128)
    s = _series(np.column_stack([x, x + 1]))
    dec = memd(s)
    table = diagnostics_table(dec, s)
    assert len(table) == 2 * (dec.imf_count + 1)
    res = table[table.component == "Residual"]
    assert res.mean_period.isna().all()
    assert list(table.component[: dec.imf_count + 1]) == [f"IMF {j + 1}" for j in range(dec.imf_count)] + ["Residual"]
