"""
Predictor registry and factory
"""

import logging

from ..config import PredictorKind
from ..errors import PredictorError
from .base import BasePredictor, PredictorSpec

logger = logging.getLogger(__name__)


class PredictorRegistry:
    """Registry for forecaster families"""

    _predictors: dict[PredictorKind, type[BasePredictor]] = {}

    @classmethod
    def register(cls, kind: PredictorKind, predictor_class: type[BasePredictor]) -> None:
        """
        Register a forecaster family

        Args:
            kind: Family identifier
            predictor_class: Class implementing BasePredictor
        """
        logger.debug(f"Registering predictor: {kind.value}")
        cls._predictors[kind] = predictor_class

    @classmethod
    def get(cls, spec: PredictorSpec) -> BasePredictor:
        """
        Get a predictor instance for a specification

        Raises:
            PredictorError: If the family is not registered
        """
        if spec.kind not in cls._predictors:
            available = ", ".join(k.value for k in cls._predictors)
            raise PredictorError(
                f"Unknown predictor: '{spec.kind.value}'. Available predictors: {available}"
            )
        return cls._predictors[spec.kind](spec)

    @classmethod
    def list_kinds(cls) -> list[str]:
        """Get list of registered family names"""
        return [k.value for k in cls._predictors]
