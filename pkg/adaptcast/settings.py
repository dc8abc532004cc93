"""
Run settings: flat dotted keys merged from defaults, a YAML file, the
environment and command-line flags
"""

import logging
import os
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml
from dotenv import load_dotenv

from .adaptive.engine import OodPolicy
from .clustering.dtw import DtwParams
from .clustering.kmeans import ClusterModel
from .config import DEFAULT_K_VALUES, DEFAULT_VARIANTS, AssignMode, FeatureVariant, PredictorKind
from .errors import ConfigError
from .pipeline import FrameworkConfig
from .predictors.base import TrainingProtocol
from .synth.generator import DEFAULT_PROFILES, MIDDAY_SPIKE, SyntheticSpec
from .timeseries.core import SeasonalityConfig, SegmentSet

logger = logging.getLogger(__name__)

ENV_PREFIX = "ADAPTCAST_"

DEFAULTS: dict[str, Any] = {
    "run.id": "default",
    "run.seed": 0,
    "run.workers": 1,
    "paths.data": "data/cells.csv",
    "paths.store": "store",
    "paths.reports": "reports",
    "paths.logs": "logs",
    "seasonality.n": 24,
    "seasonality.m": 1,
    "seasonality.align_midnight": False,
    "dtw.q": 2.0,
    "dtw.band": None,
    "kmeans.k_values": list(DEFAULT_K_VALUES),
    "kmeans.max_iter": 100,
    "dba.max_iter": 30,
    "dba.tol": 1e-5,
    "features.variants": [v.value for v in DEFAULT_VARIANTS],
    "features.pearson_threshold": 0.9,
    "features.ran_size": 5,
    "predictor.kind": PredictorKind.LSTM.value,
    "predictor.hidden_size": 48,
    "training.epochs": 90,
    "training.loss": "mae",
    "training.momentum": 0.9,
    "training.lr0": 0.1,
    "training.plateau_patience": 10,
    "training.plateau_factor": 0.1,
    "training.early_stop_patience": 40,
    "training.batch_size": 32,
    "training.validation_fraction": 0.15,
    "training.min_lr": 1e-5,
    "adaptive.cadence": 1,
    "adaptive.assign_mode": AssignMode.TRAILING.value,
    "ood.enabled": False,
    "ood.quantile": 0.99,
    "ood.buffer_min_segments": 1,
    "eval.holdout_cell": "",
    "eval.baseline_cell": "",
    "eval.tail_weeks": 4,
    "synth.cells": 20,
    "synth.weeks": 12,
    "synth.profiles": 4,
    "synth.noise_sigma": 0.05,
}


def flatten(mapping: Mapping[str, Any], prefix: str = "") -> dict[str, Any]:
    """Nested mappings become dotted keys; already-dotted keys pass through"""
    flat: dict[str, Any] = {}
    for key, value in mapping.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(flatten(value, f"{dotted}."))
        else:
            flat[dotted] = value
    return flat


def _coerce(key: str, value: Any) -> Any:
    """Bring a value to the type of its default"""
    default = DEFAULTS[key]
    if isinstance(value, str) and isinstance(default, list) and not value.startswith("["):
        value = [v.strip() for v in value.split(",") if v.strip()]
    elif isinstance(value, str) and not isinstance(default, str):
        value = yaml.safe_load(value)
    if value is None:
        return value
    try:
        if default is None:
            # dtw.band: None or a non-negative int
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError
            return value
        if isinstance(default, int):
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if isinstance(default, float):
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if isinstance(default, list):
            if not isinstance(value, list):
                value = [value]
            return list(value)
        return str(value)
    except (TypeError, ValueError) as e:
        expected = "int" if default is None else type(default).__name__
        raise ConfigError(f"Setting {key} expects {expected}, got {value!r}") from e


class SettingsLoader:
    """Manages run settings with priority: flags > ENV > YAML > defaults"""

    def __init__(self, config_file: str | Path | None = None, env_file: str | Path | None = ".env"):
        """
        Initialize settings loader

        Args:
            config_file: Path to YAML settings file (None for none)
            env_file: dotenv file loaded into the environment if present
        """
        self.config_file = Path(config_file) if config_file else None
        if env_file is not None and Path(env_file).exists():
            load_dotenv(env_file, override=False)
        self.settings = self._load_settings()

    def _load_settings(self) -> dict[str, Any]:
        settings = dict(DEFAULTS)
        settings = self._merge(settings, self._load_yaml_settings(), "config file")
        settings = self._merge(settings, self._load_env_settings(), "environment")
        logger.debug(f"Loaded settings: {settings}")
        return settings

    def _load_yaml_settings(self) -> dict[str, Any]:
        if self.config_file is None:
            return {}
        if not self.config_file.exists():
            raise ConfigError(f"Config file not found: {self.config_file}")
        logger.info(f"Loading configuration from: {self.config_file}")
        try:
            with open(self.config_file, encoding="utf-8") as f:
                loaded = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Unreadable config file {self.config_file}: {e}") from e
        if not isinstance(loaded, Mapping):
            raise ConfigError(f"Config file {self.config_file} must hold a mapping")
        return flatten(loaded)

    def _load_env_settings(self) -> dict[str, Any]:
        env = {}
        for name, value in os.environ.items():
            if name.startswith(ENV_PREFIX):
                key = name[len(ENV_PREFIX) :].lower().replace("__", ".")
                env[key] = value
        return env

    def _merge(self, base: dict[str, Any], override: Mapping[str, Any], source: str) -> dict[str, Any]:
        result = dict(base)
        for key, value in override.items():
            if key not in DEFAULTS:
                raise ConfigError(f"Unknown setting '{key}' in {source}")
            result[key] = _coerce(key, value)
        return result

    def with_flags(self, flags: Mapping[str, Any]) -> dict[str, Any]:
        """Apply command-line overrides; None means the flag was not given"""
        given = {k: v for k, v in flags.items() if v is not None}
        return self._merge(self.settings, given, "command line")

    def run_config(self, flags: Mapping[str, Any] | None = None) -> "RunConfig":
        return RunConfig.from_flat(self.with_flags(flags or {}))


@dataclass(frozen=True)
class RunPaths:
    data: Path
    store: Path
    reports: Path
    logs: Path | None


@dataclass(frozen=True)
class SynthSettings:
    cells: int = 20
    weeks: int = 12
    profiles: int = 4
    noise_sigma: float = 0.05

    def __post_init__(self):
        if self.cells < 1 or self.weeks < 1:
            raise ConfigError(f"synth needs at least one cell and week, got {self.cells}/{self.weeks}")
        available = len(DEFAULT_PROFILES) + 1
        if not 1 <= self.profiles <= available:
            raise ConfigError(f"synth.profiles must be in [1, {available}], got {self.profiles}")

    def to_spec(self, seed: int) -> SyntheticSpec:
        """The first ``profiles`` built-ins; a fifth is the unseen midday profile"""
        profiles = (*DEFAULT_PROFILES, MIDDAY_SPIKE)[: self.profiles]
        return SyntheticSpec(
            profiles=profiles,
            cells=self.cells,
            weeks=self.weeks,
            noise_sigma=self.noise_sigma,
            seed=seed,
        )


@dataclass(frozen=True)
class RunConfig:
    """Typed view of the merged settings"""

    run_id: str
    seed: int
    workers: int
    paths: RunPaths
    seasonality: SeasonalityConfig
    dtw: DtwParams
    k_values: tuple[int, ...]
    variants: tuple[FeatureVariant, ...]
    kind: PredictorKind
    hidden_size: int
    protocol: TrainingProtocol
    kmeans_max_iter: int
    dba_max_iter: int
    dba_tol: float
    pearson_threshold: float
    ran_size: int
    cadence: int
    assign_mode: AssignMode
    ood_enabled: bool
    ood_quantile: float
    ood_buffer_min_segments: int
    holdout_cell: str | None
    baseline_cell: str | None
    tail_weeks: int = 4
    synth: SynthSettings = field(default_factory=SynthSettings)

    def __post_init__(self):
        if not self.k_values or any(k < 1 for k in self.k_values):
            raise ConfigError(f"k list must be nonempty positive integers, got {list(self.k_values)}")
        if not self.variants:
            raise ConfigError("At least one feature variant is required")
        if self.cadence < 1:
            raise ConfigError(f"Cadence must be >= 1, got {self.cadence}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.tail_weeks < 1:
            raise ConfigError(f"eval.tail_weeks must be >= 1, got {self.tail_weeks}")
        if not 0 < self.ood_quantile <= 1:
            raise ConfigError(f"ood.quantile must be in (0, 1], got {self.ood_quantile}")

    @classmethod
    def from_flat(cls, flat: Mapping[str, Any]) -> "RunConfig":
        """
        Build a RunConfig from dotted keys, filling gaps from defaults

        Raises:
            ConfigError: Unknown keys or values that fail validation
        """
        unknown = set(flat) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"Unknown settings: {sorted(unknown)}")
        s = {key: _coerce(key, value) for key, value in {**DEFAULTS, **flat}.items()}
        try:
            logs = s["paths.logs"]
            return cls(
                run_id=s["run.id"],
                seed=s["run.seed"],
                workers=s["run.workers"],
                paths=RunPaths(
                    data=Path(s["paths.data"]),
                    store=Path(s["paths.store"]),
                    reports=Path(s["paths.reports"]),
                    logs=Path(logs) if logs else None,
                ),
                seasonality=SeasonalityConfig(
                    n=s["seasonality.n"],
                    m=s["seasonality.m"],
                    align_midnight=s["seasonality.align_midnight"],
                ),
                dtw=DtwParams(q=s["dtw.q"], band=s["dtw.band"]),
                k_values=tuple(int(k) for k in s["kmeans.k_values"]),
                variants=tuple(FeatureVariant.from_string(str(v)) for v in s["features.variants"]),
                kind=PredictorKind.from_string(s["predictor.kind"]),
                hidden_size=s["predictor.hidden_size"],
                protocol=TrainingProtocol(
                    **{
                        key.split(".", 1)[1]: value
                        for key, value in s.items()
                        if key.startswith("training.")
                    }
                ),
                kmeans_max_iter=s["kmeans.max_iter"],
                dba_max_iter=s["dba.max_iter"],
                dba_tol=s["dba.tol"],
                pearson_threshold=s["features.pearson_threshold"],
                ran_size=s["features.ran_size"],
                cadence=s["adaptive.cadence"],
                assign_mode=AssignMode.from_string(s["adaptive.assign_mode"]),
                ood_enabled=s["ood.enabled"],
                ood_quantile=s["ood.quantile"],
                ood_buffer_min_segments=s["ood.buffer_min_segments"],
                holdout_cell=s["eval.holdout_cell"] or None,
                baseline_cell=s["eval.baseline_cell"] or None,
                tail_weeks=s["eval.tail_weeks"],
                synth=SynthSettings(
                    cells=s["synth.cells"],
                    weeks=s["synth.weeks"],
                    profiles=s["synth.profiles"],
                    noise_sigma=s["synth.noise_sigma"],
                ),
            )
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def framework(self, k: int, variant: FeatureVariant) -> FrameworkConfig:
        return FrameworkConfig(
            seasonality=self.seasonality,
            dtw=self.dtw,
            k=k,
            variant=variant,
            kind=self.kind,
            hidden_size=self.hidden_size,
            protocol=self.protocol,
            kmeans_max_iter=self.kmeans_max_iter,
            dba_max_iter=self.dba_max_iter,
            dba_tol=self.dba_tol,
            pearson_threshold=self.pearson_threshold,
            ran_size=self.ran_size,
            seed=self.seed,
            workers=self.workers,
        )

    def ood_policy(self, cluster_model: ClusterModel, segments: SegmentSet) -> OodPolicy | None:
        if not self.ood_enabled:
            return None
        return OodPolicy.from_training(
            cluster_model, segments, self.ood_quantile, self.ood_buffer_min_segments
        )
