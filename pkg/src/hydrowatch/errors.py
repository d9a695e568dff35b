"""Shared exception types."""


class HydrowatchError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(HydrowatchError):
    """Invalid configuration value (rates, durations, policies)."""


class InputError(HydrowatchError):
    """Malformed or out-of-contract input data."""


class NoSignalError(HydrowatchError):
    """Channel energy below the detection floor; no event to analyze."""


class AmbiguousDelayError(HydrowatchError):
    """Cross-correlation peak below the confidence floor."""


class InfeasibleGeometryError(HydrowatchError):
    """No feasible grid point for the given measurement and search range."""


class BufferOverrunError(HydrowatchError):
    """Bounded acquisition queue overflowed; carries the dropped-buffer count."""

    def __init__(self, dropped: int):
        super().__init__(f"acquisition queue overrun: {dropped} buffer(s) dropped")
        self.dropped = dropped


class TrainingDivergedError(HydrowatchError):
    """Loss became NaN/Inf; carries the epoch and batch where it happened."""

    def __init__(self, epoch: int, batch: int):
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


class NotFoundError(HydrowatchError):
    """Unknown sample / observation id."""
