from typing import Optional


class LutCompilerError(Exception):
    """Base class for every error the toolchain reports to the user."""

    exit_code = 2

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class InvalidSpecError(LutCompilerError):
    """Topology or layer description violates an invariant."""


class ModelFormatError(LutCompilerError):
    """Model file cannot be parsed, has an unknown version, or breaks an invariant."""


class TableGenLimitError(LutCompilerError):
    """A neuron has more fan-in bits than the tabulation limit allows."""


class MissingTableError(LutCompilerError):
    """A table-driven pass needs a truth table that was not generated."""


class UnsupportedLayerError(LutCompilerError):
    """The requested stage does not support this layer kind."""


class DimensionMismatchError(LutCompilerError):
    """Input width or spatial dimensions do not match the layer."""


class OffGridValueError(LutCompilerError):
    """A value is not on its quantizer grid."""


class PruneScheduleError(LutCompilerError):
    """A pruning step cannot keep the per-neuron fan-in."""


class TrainingDivergedError(LutCompilerError):
    """Loss became NaN or infinite."""

    def __init__(self, epoch: int, step: int, last_finite_loss: Optional[float]):
        super().__init__(
            f"Loss diverged at epoch {epoch}, step {step} "
            f"(last finite loss: {last_finite_loss})"
        )
        self.epoch = epoch
        self.step = step
        self.last_finite_loss = last_finite_loss


class VerificationMismatch(LutCompilerError):
    """Two evaluation paths disagree on some input."""

    exit_code = 3

    def __init__(self, stages: str, sample: int, input_bits: str, expected: str, actual: str):
        super().__init__(
            f"{stages} mismatch on sample {sample}: input bits {input_bits} "
            f"expected {expected}, got {actual}"
        )
        self.stages = stages
        self.sample = sample
        self.input_bits = input_bits
        self.expected = expected
        self.actual = actual


class NonFiniteValueError(LutCompilerError):
    """Quantizer input contains NaN or infinity."""


class DatasetError(LutCompilerError):
    """Dataset file is missing, malformed or inconsistent with the model."""
