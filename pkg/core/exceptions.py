class IfmminError(Exception):
    """Base class for pipeline errors with a message suitable for the CLI."""

    exit_code: int = 2

    def __init__(self, message: str, user_friendly: str | None = None):
        """
        Initialize the IfmminError.

        Args:
            message: The internal error message.
            user_friendly: A short message to print on the command line.
        """
        super().__init__(message)
        self.user_friendly = user_friendly or message


class ValidationError(IfmminError):
    """Bad user input: configuration keys, files, arguments."""

    exit_code = 1


class ConfigError(ValidationError):
    """Errors in run configuration files, overrides or environment variables."""


class DatasetError(ValidationError):
    """Missing, empty or malformed dataset files."""


class CheckpointError(ValidationError):
    """Missing, truncated or incompatible checkpoint files."""


class ShapeError(IfmminError, ValueError):
    """A primitive received inputs whose shapes do not conform to its rules."""

    def __init__(self, kind: str, *shapes: tuple[int, ...], detail: str = ""):
        shown = " vs ".join(str(tuple(s)) for s in shapes)
        message = f"{kind}: shape mismatch {shown}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)
        self.kind = kind
        self.shapes = shapes


class UnknownPrimitiveError(IfmminError, KeyError):
    """The requested primitive kind is not registered."""

    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return self.args[0]


class GraphError(IfmminError):
    """Misuse of the computation graph (non-scalar loss, foreign tensor)."""


class InvalidArgumentError(IfmminError, ValueError):
    """A numeric argument lies outside its domain (k < 2, N < 2, M = 0, ...)."""


class NumericalError(IfmminError, ArithmeticError):
    """Non-finite or out-of-domain values met during computation."""


class GradientCheckError(IfmminError):
    """Finite-difference check could not be evaluated."""


class FrozenParameterError(IfmminError):
    """A parameter set that must be frozen is trainable, or vice versa."""
