"""
Configuration enums and constants for adaptcast
"""

from enum import Enum


class FeatureVariant(Enum):
    """Input feature configurations for the per-cluster predictors"""

    UNI = "uni"
    RAN = "ran"
    PEAK = "peak"
    HANDOVER = "handover"
    ALL = "all"

    @classmethod
    def get_display_name(cls, variant: "FeatureVariant") -> str:
        """Get human-readable display name for a feature variant"""
        display_names = {
            cls.UNI: "LSTM-uni",
            cls.RAN: "LSTM-RAN",
            cls.PEAK: "LSTM-peak",
            cls.HANDOVER: "LSTM-handover",
            cls.ALL: "LSTM-all",
        }
        return display_names.get(variant, variant.value)

    @classmethod
    def from_string(cls, variant_str: str) -> "FeatureVariant":
        """Create FeatureVariant from string (case insensitive)"""
        variant_str = variant_str.strip().lower().replace("lstm-", "")

        aliases = {
            "univariate": cls.UNI,
            "multivariate": cls.RAN,
            "ho": cls.HANDOVER,
        }
        if variant_str in aliases:
            return aliases[variant_str]

        for variant in cls:
            if variant.value == variant_str:
                return variant

        raise ValueError(f"Unknown feature variant: {variant_str}")


class PredictorKind(Enum):
    """Forecaster families"""

    LSTM = "lstm"
    SEASONAL_NAIVE = "seasonal_naive"

    @classmethod
    def from_string(cls, kind_str: str) -> "PredictorKind":
        """Create PredictorKind from string (case insensitive)"""
        kind_str = kind_str.strip().lower().replace("-", "_")
        if kind_str in ("naive", "snaive"):
            return cls.SEASONAL_NAIVE
        for kind in cls:
            if kind.value == kind_str:
                return kind
        raise ValueError(f"Unknown predictor kind: {kind_str}")


class AssignMode(Enum):
    """Which n-window drives adaptive cluster assignment"""

    TRAILING = "trailing"
    TARGET_DAY = "target_day"

    @classmethod
    def from_string(cls, mode_str: str) -> "AssignMode":
        """Create AssignMode from string (case insensitive)"""
        mode_str = mode_str.strip().lower().replace("-", "_")
        for mode in cls:
            if mode.value == mode_str:
                return mode
        raise ValueError(f"Unknown assign mode: {mode_str}")


# Channel names shared by the generator, feature engineering and the CLI
OUTPUT_CHANNEL = "dl_volume"
HANDOVER_INCOMING = "ho_incoming"
HANDOVER_OUTGOING = "ho_outgoing"
PEAK_FLAG = "peak_flag"
WEEKEND_FLAG = "weekend_flag"
HANDOVER_IN_FEATURE = "handover_in"
HANDOVER_OUT_FEATURE = "handover_out"

# Engineered binary channels are never min-max rescaled
BINARY_CHANNELS = frozenset({PEAK_FLAG, WEEKEND_FLAG})

HOURS_PER_WEEK = 168

PEARSON_THRESHOLD = 0.9
RAN_CHANNEL_COUNT = 5

DEFAULT_K_VALUES = [1, 2, 4, 8, 16]
DEFAULT_VARIANTS = list(FeatureVariant)
