"""
Seasonal-naive baseline: tomorrow at this hour looks like today at this hour
"""

import numpy as np

from ..config import PredictorKind
from ..errors import PredictorError
from .base import BasePredictor
from .registry import PredictorRegistry


class SeasonalNaivePredictor(BasePredictor):
    """
    Repeats the output-channel value one season (``window`` steps) before
    the target. For a target ``horizon`` steps past the window that value
    sits at window position ``horizon - 1``.
    """

    kind = PredictorKind.SEASONAL_NAIVE
    trainable = False

    def __init__(self, spec):
        super().__init__(spec)
        if spec.horizon > spec.window:
            raise PredictorError(
                f"Seasonal-naive needs horizon <= window, got {spec.horizon} > {spec.window}"
            )
        self.position = spec.horizon - 1

    def parameter_count(self) -> int:
        return 0

    def init_parameters(self, rng: np.random.Generator) -> np.ndarray:
        return np.zeros(0)

    def predict(self, parameters: np.ndarray, inputs: np.ndarray) -> np.ndarray:
        return np.array(inputs[:, self.position, 0], dtype=float)


PredictorRegistry.register(PredictorKind.SEASONAL_NAIVE, SeasonalNaivePredictor)
