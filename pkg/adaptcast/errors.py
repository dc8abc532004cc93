"""
Exception hierarchy for adaptcast

Errors caused by bad input, data or configuration also subclass ValueError so
the CLI can report them as user errors (exit code 2).
"""


class AdaptcastError(Exception):
    """Base class for all adaptcast errors"""


class ConfigError(AdaptcastError, ValueError):
    """Invalid or inconsistent configuration"""


class IngestError(AdaptcastError, ValueError):
    """Malformed input file"""


class SeriesError(AdaptcastError, ValueError):
    """A time series or segment violates its invariants"""


class DtwError(AdaptcastError, ValueError):
    """Invalid input to a DTW computation"""


class ClusteringError(AdaptcastError, ValueError):
    """Clustering cannot be performed on the given input"""


class PredictorError(AdaptcastError, ValueError):
    """Invalid predictor specification, parameters or input shape"""


class GradientCheckError(PredictorError):
    """The gradient-check fixture is unusable"""


class TrainingDivergenceError(AdaptcastError):
    """Training produced a non-finite loss"""

    def __init__(self, epoch: int, learning_rate: float, loss: float):
        self.epoch = epoch
        self.learning_rate = learning_rate
        self.loss = loss
        super().__init__(
            f"Training diverged at epoch {epoch} (lr={learning_rate:g}, loss={loss})"
        )


class AssignmentError(AdaptcastError, ValueError):
    """The adaptive engine cannot serve a stream"""


class OodError(AdaptcastError, ValueError):
    """Out-of-distribution reclustering cannot proceed"""


class EvaluationError(AdaptcastError, ValueError):
    """A trace cannot be evaluated"""


class MissingGroundTruthError(EvaluationError):
    """A trace carries no ground truth values"""


class StoreError(AdaptcastError, ValueError):
    """A model store artifact is missing or unreadable"""


class LeakageError(AdaptcastError):
    """Held-out data reached a training structure"""
