"""Exception types raised across the package."""


class VPCError(Exception):
    """Base class for all package errors."""


class InvalidInputError(VPCError, ValueError):
    pass


class DimensionError(VPCError, ValueError):
    pass


class DegenerateAmplitudeError(VPCError, ArithmeticError):
    """A thread modulus fell below the pull-back threshold."""

    def __init__(self, thread, modulus, sample=None):
        self.thread = thread
        self.modulus = modulus
        self.sample = sample
        where = f"thread {thread}" if sample is None else f"sample {sample}, thread {thread}"
        super().__init__(f"degenerate amplitude at {where}: |z| = {modulus:.3e}")


class ConstantSnapshotError(InvalidInputError):
    pass


class InvalidSplitError(InvalidInputError):
    pass


class ConfigError(VPCError, ValueError):
    pass


class DivergenceError(VPCError, ArithmeticError):
    def __init__(self, epoch, loss):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}")
