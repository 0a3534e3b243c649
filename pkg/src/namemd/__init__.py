"""Noise-assisted multivariate EMD and decomposition-ensemble forecasting."""

from namemd.series import (
    MultichannelSeries,
    NormalizationParams,
    SupervisedSet,
    chronological_split,
    denormalize,
    ingest_csv,
    make_lag_matrix,
    min_max_normalize,
)
from namemd.univariate import ImfSet, ResidueLike, SiftConfig, emd
from namemd.multivariate import ImfDecomposition, NaMemdConfig, memd, na_memd
from namemd.evaluation import dm_test, dstat, mape, rmse

__all__ = [
    "MultichannelSeries",
    "NormalizationParams",
    "SupervisedSet",
    "chronological_split",
    "denormalize",
    "ingest_csv",
    "make_lag_matrix",
    "min_max_normalize",
    "ImfSet",
    "ResidueLike",
    "SiftConfig",
    "emd",
    "ImfDecomposition",
    "NaMemdConfig",
    "memd",
    "na_memd",
    "dm_test",
    "dstat",
    "mape",
    "rmse",
]

__version__ = "0.1.0"
