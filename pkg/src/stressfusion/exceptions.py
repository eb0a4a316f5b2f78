"""Exception hierarchy shared across the package."""


class StressFusionError(Exception):
    """Base class for all package errors."""


class NumericInputError(StressFusionError, ValueError):
    """Input contains NaN or infinite values."""


class DimensionError(StressFusionError, ValueError):
    """Array shapes do not chain or match."""


class StaleTraceError(DimensionError):
    """A forward trace does not belong to the network it is used with."""


class DivergenceError(StressFusionError, ArithmeticError):
    def __init__(self, epoch, loss):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"training diverged at epoch {epoch} (loss={loss!r})")


class WeightFileError(StressFusionError):
    """Base class for weight-file problems."""


class FormatVersionError(WeightFileError):
    pass


class CorruptFileError(WeightFileError):
    pass


class WeightDimensionError(WeightFileError, DimensionError):
    pass


class SchemaError(StressFusionError, ValueError):
    pass


class DuplicateKeyError(SchemaError):
    pass


class EmptyResultError(StressFusionError, ValueError):
    pass


class AlignmentError(StressFusionError, ValueError):
    pass


class SplitError(StressFusionError, ValueError):
    pass


class MissingModalityError(StressFusionError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "missing modality"


class UndefinedROCError(StressFusionError, ValueError):
    pass


class TimelineOrderError(StressFusionError, ValueError):
    pass


class ConfigError(StressFusionError, ValueError):
    pass
