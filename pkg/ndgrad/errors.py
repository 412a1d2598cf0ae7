class NdgradError(Exception):
    """Base class for every error raised by the ndgrad package."""


class ShapeMismatchError(NdgradError, ValueError):
    """Raised when the shapes fed to an operation do not compose."""

    def __init__(self, op: str, left: tuple, right: tuple, detail: str = ""):
        self.op = op
        self.left = tuple(left)
        self.right = tuple(right)
        message = f"{op}: incompatible shapes {self.left} and {self.right}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class NonFiniteError(NdgradError, FloatingPointError):
    """Raised when an input, an intermediate value or a gradient is NaN or infinite."""


class TapeError(NdgradError, RuntimeError):
    """Raised on misuse of a tape, e.g. backward before any forward op was recorded."""


class CheckpointError(NdgradError, ValueError):
    """Raised when a checkpoint container is malformed or has an unknown version."""
