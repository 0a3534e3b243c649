"""Experiment configuration and its YAML representation."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
import os
from pathlib import Path

import yaml

from namemd.forecasters import ModelSpec
from namemd.multivariate import NaMemdConfig
from namemd.univariate import SiftConfig

LEAKAGE_MODES = ("whole-series", "train-only")
GROUPINGS = ("none", "highfreq-under-12m")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    input_path: str
    target_channel: str
    source_channels: tuple[str, ...]
    train_fraction: float = 0.8
    horizons: tuple[int, ...] = (1, 2, 3)
    models: tuple[ModelSpec, ...] = (ModelSpec("LR"),)
    na_memd: NaMemdConfig = field(default_factory=NaMemdConfig)
    lag_count: int = 12
    leakage_mode: str = "whole-series"
    grouping: str = "none"
    output_dir: str = "output"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "source_channels", tuple(self.source_channels))
        object.__setattr__(self, "horizons", tuple(int(h) for h in self.horizons))
        object.__setattr__(self, "models", tuple(self.models))
        if self.target_channel in self.source_channels:
            raise ConfigError("target_channel must not also be a source channel")
        if not self.horizons or min(self.horizons) < 1:
            raise ConfigError("horizons must be a non-empty list of integers >= 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if self.lag_count < 1:
            raise ConfigError("lag_count must be >= 1")
        if self.leakage_mode not in LEAKAGE_MODES:
            raise ConfigError(f"leakage_mode must be one of {LEAKAGE_MODES}")
        if self.grouping not in GROUPINGS:
            raise ConfigError(f"grouping must be one of {GROUPINGS}")
        kinds = [m.kind for m in self.models]
        if len(set(kinds)) != len(kinds):
            raise ConfigError(f"duplicate model kinds: {kinds}")

    @property
    def channels(self) -> tuple[str, ...]:
        return (self.target_channel, *self.source_channels)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["source_channels"] = list(self.source_channels)
        d["horizons"] = list(self.horizons)
        d["models"] = [asdict(m) for m in self.models]
        return d


def _model(entry) -> ModelSpec:
    if isinstance(entry, str):
        return ModelSpec(entry)
    return ModelSpec(**entry)


def config_from_dict(raw: dict, base_dir=None) -> ExperimentConfig:
    raw = dict(raw)
    unknown = set(raw) - set(ExperimentConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("input_path", "target_channel", "source_channels"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
    seed = int(raw.get("seed", 0))
    nm = dict(raw.get("na_memd") or {})
    nm.setdefault("rng_seed", seed)
    if "sift" in nm:
        nm["sift"] = SiftConfig(**nm["sift"])
    raw["na_memd"] = NaMemdConfig(**nm)
    if "models" in raw:
        raw["models"] = tuple(_model(m) for m in raw["models"])
    if base_dir is not None:
        for key in ("input_path", "output_dir"):
            if key in raw and not Path(raw[key]).is_absolute():
                raw[key] = os.path.normpath(Path(base_dir) / raw[key])
    return ExperimentConfig(**raw)


def load_config(path) -> ExperimentConfig:
    """Read a YAML file whose keys mirror :class:`ExperimentConfig`.

    Relative ``input_path`` and ``output_dir`` are resolved against the
    config file's directory.
    """
    path = Path(path)
    raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return config_from_dict(raw, base_dir=path.parent)


def dump_config(config: ExperimentConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(config.to_dict(), sort_keys=False), encoding="utf-8")
