"""Domain exceptions raised across the raw pipeline."""

from typing import Any, Optional


class RawPipelineError(Exception):
    """Base class for every error raised by the pipeline apps."""


class MetaInvalid(RawPipelineError, ValueError):
    """Sensor metadata is inconsistent (levels, matrix, sidecar keys)."""


class NotRggb(RawPipelineError, ValueError):
    """Operation requires an RGGB-standardized mosaic."""


class OddDims(RawPipelineError, ValueError):
    """Operation requires even spatial dimensions."""


class BadChannels(RawPipelineError, ValueError):
    """Channel count is not compatible with the requested rearrangement."""


class SingularMatrix(RawPipelineError, ValueError):
    """A colour matrix that must be inverted is singular."""


class DegenerateImage(RawPipelineError, ValueError):
    """Image statistics make the requested quantity undefined."""


class TooSmall(RawPipelineError, ValueError):
    """Input is too small for the requested window or overlap."""


class ParseError(RawPipelineError, ValueError):
    """Malformed file content."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        """Store the offending line number when known."""
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class BadProbability(RawPipelineError, ValueError):
    """A likelihood lies outside (0, 1]."""


class ShapeMismatch(RawPipelineError, ValueError):
    """Tensor shapes do not match the operation's contract."""


class DivisibilityError(RawPipelineError, ValueError):
    """Spatial size is not divisible by the network's downsampling factor."""


class NonFiniteLoss(RawPipelineError, ArithmeticError):
    """Training produced a NaN or infinite loss."""

    def __init__(self, message: str, diagnostics: Optional[dict[str, Any]] = None):
        """Keep the loss terms and step for post-mortem logging."""
        self.diagnostics = diagnostics or {}
        super().__init__(f"{message} ({self.diagnostics})")


class SymbolOutOfRange(RawPipelineError, ValueError):
    """A symbol cannot be represented by the entropy model."""


class MissingCheckpoint(RawPipelineError, FileNotFoundError):
    """No checkpoint exists where one is required."""


class CheckpointFormatError(RawPipelineError, ValueError):
    """Checkpoint file is not a valid versioned checkpoint."""
