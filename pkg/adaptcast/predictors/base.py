"""
Base interface for one-step-ahead forecasters
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from ..config import PredictorKind
from ..errors import PredictorError
from ..timeseries.features import FeatureConfig


@dataclass(frozen=True)
class TrainingProtocol:
    """Mini-batch SGD with momentum on MAE, plateau LR decay and early stopping"""

    epochs: int = 90
    loss: str = "mae"
    momentum: float = 0.9
    lr0: float = 0.1
    plateau_patience: int = 10
    plateau_factor: float = 0.1
    early_stop_patience: int = 40
    batch_size: int = 32
    validation_fraction: float = 0.15
    min_lr: float = 1e-5

    def __post_init__(self):
        for name in ("epochs", "plateau_patience", "early_stop_patience", "batch_size"):
            if getattr(self, name) < 1:
                raise PredictorError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.loss != "mae":
            raise PredictorError(f"Unsupported loss '{self.loss}' (only 'mae')")
        if not 0 < self.plateau_factor < 1:
            raise PredictorError(f"plateau_factor must be in (0, 1), got {self.plateau_factor}")
        if not 0 <= self.momentum < 1:
            raise PredictorError(f"momentum must be in [0, 1), got {self.momentum}")
        if not 0 < self.validation_fraction < 1:
            raise PredictorError(
                f"validation_fraction must be in (0, 1), got {self.validation_fraction}"
            )
        if not self.lr0 > 0 or self.min_lr < 0:
            raise PredictorError("lr0 must be positive and min_lr non-negative")

    def to_dict(self) -> dict[str, Any]:
        return {
            "epochs": self.epochs,
            "loss": self.loss,
            "momentum": self.momentum,
            "lr0": self.lr0,
            "plateau_patience": self.plateau_patience,
            "plateau_factor": self.plateau_factor,
            "early_stop_patience": self.early_stop_patience,
            "batch_size": self.batch_size,
            "validation_fraction": self.validation_fraction,
            "min_lr": self.min_lr,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TrainingProtocol":
        return cls(**data)


@dataclass(frozen=True)
class PredictorSpec:
    """What to build: family, window/horizon, capacity and input channels"""

    kind: PredictorKind
    feature_config: FeatureConfig
    window: int = 24
    horizon: int = 1
    hidden_size: int = 48
    seed: int = 0

    def __post_init__(self):
        if self.window < 1 or self.horizon < 1 or self.hidden_size < 1:
            raise PredictorError(
                f"window, horizon and hidden_size must be >= 1 "
                f"(got {self.window}, {self.horizon}, {self.hidden_size})"
            )

    @property
    def feature_count(self) -> int:
        return self.feature_config.feature_count

    def with_features(self, feature_config: FeatureConfig) -> "PredictorSpec":
        return replace(self, feature_config=feature_config)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "feature_config": self.feature_config.to_dict(),
            "window": self.window,
            "horizon": self.horizon,
            "hidden_size": self.hidden_size,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PredictorSpec":
        return cls(
            kind=PredictorKind(data["kind"]),
            feature_config=FeatureConfig.from_dict(data["feature_config"]),
            window=data["window"],
            horizon=data["horizon"],
            hidden_size=data["hidden_size"],
            seed=data["seed"],
        )


@dataclass(frozen=True, eq=False)
class PredictorModel:
    """A trained forecaster bound to one cluster and one feature configuration"""

    spec: PredictorSpec
    parameters: np.ndarray
    train_history: tuple[tuple[float, float, float], ...] = ()
    cluster_id: int | None = None
    protocol: TrainingProtocol = field(default_factory=TrainingProtocol)
    best_epoch: int = 0

    def __post_init__(self):
        parameters = np.array(self.parameters, dtype=float).ravel()
        if not np.all(np.isfinite(parameters)):
            raise PredictorError("Predictor parameters must be finite")
        from .registry import PredictorRegistry

        expected = PredictorRegistry.get(self.spec).parameter_count()
        if len(parameters) != expected:
            raise PredictorError(
                f"{self.spec.kind.value} model needs {expected} parameters, "
                f"got {len(parameters)}"
            )
        parameters.setflags(write=False)
        object.__setattr__(self, "parameters", parameters)
        object.__setattr__(
            self, "train_history", tuple(tuple(row) for row in self.train_history)
        )

    @property
    def best_val_loss(self) -> float | None:
        if not self.train_history:
            return None
        return min(row[1] for row in self.train_history)

    def to_dict(self) -> dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "protocol": self.protocol.to_dict(),
            "parameters": self.parameters.tolist(),
            "train_history": [
                {"train_loss": t, "val_loss": v, "lr": lr} for t, v, lr in self.train_history
            ],
            "cluster_id": self.cluster_id,
            "best_epoch": self.best_epoch,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PredictorModel":
        return cls(
            spec=PredictorSpec.from_dict(data["spec"]),
            parameters=np.array(data["parameters"], dtype=float),
            train_history=tuple(
                (row["train_loss"], row["val_loss"], row["lr"])
                for row in data.get("train_history", [])
            ),
            cluster_id=data.get("cluster_id"),
            protocol=TrainingProtocol.from_dict(data["protocol"]),
            best_epoch=data.get("best_epoch", 0),
        )


class BasePredictor(ABC):
    """Base interface for all forecaster families"""

    kind: PredictorKind
    trainable: bool = True

    def __init__(self, spec: PredictorSpec):
        """
        Initialize the predictor for a specification

        Args:
            spec: Window, horizon, capacity and feature configuration
        """
        self.spec = spec
        self.window = spec.window
        self.features = spec.feature_count

    @abstractmethod
    def parameter_count(self) -> int:
        """Length of the flat parameter vector"""

    @abstractmethod
    def init_parameters(self, rng: np.random.Generator) -> np.ndarray:
        """Fresh parameter vector drawn from ``rng``"""

    @abstractmethod
    def predict(self, parameters: np.ndarray, inputs: np.ndarray) -> np.ndarray:
        """
        Forecast a batch of windows

        Args:
            parameters: Flat parameter vector
            inputs: Array of shape (batch, window, features)

        Returns:
            Array of shape (batch,)
        """

    def loss_and_gradient(
        self, parameters: np.ndarray, inputs: np.ndarray, targets: np.ndarray
    ) -> tuple[float, np.ndarray]:
        """Mean absolute error of a batch and its gradient"""
        raise PredictorError(f"{self.kind.value} predictors have no trainable parameters")

    def loss(self, parameters: np.ndarray, inputs: np.ndarray, targets: np.ndarray) -> float:
        predictions = self.predict(parameters, self.check_inputs(inputs))
        return float(np.mean(np.abs(predictions - np.asarray(targets, dtype=float))))

    def check_inputs(self, inputs: Any) -> np.ndarray:
        inputs = np.asarray(inputs, dtype=float)
        if inputs.ndim == 2:
            inputs = inputs[None]
        expected = (self.window, self.features)
        if inputs.ndim != 3 or inputs.shape[1:] != expected:
            raise PredictorError(
                f"Input shape {inputs.shape} does not match (batch, {expected[0]}, {expected[1]})"
            )
        return inputs

    def __repr__(self) -> str:
        return (
            f"{self.__class__.__name__}(window={self.window}, features={self.features})"
        )


def forward(model: PredictorModel, window: Any) -> float:
    """Forecast a single (window, features) input with a trained model"""
    from .registry import PredictorRegistry

    predictor = PredictorRegistry.get(model.spec)
    inputs = predictor.check_inputs(window)
    if len(inputs) != 1:
        raise PredictorError("forward expects a single window; use predict_batch")
    return float(predictor.predict(model.parameters, inputs)[0])


def predict_batch(model: PredictorModel, inputs: Any) -> np.ndarray:
    """Forecast a (batch, window, features) stack with a trained model"""
    from .registry import PredictorRegistry

    predictor = PredictorRegistry.get(model.spec)
    return predictor.predict(model.parameters, predictor.check_inputs(inputs))
