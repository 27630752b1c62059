"""Exception hierarchy for the Bernstein diffusion lab.

Every error the numerical modules raise derives from :class:`BernsteinLabError`.
Errors caused by bad inputs also derive from ``ValueError``; numerical failures
during a computation derive from ``RuntimeError``.
"""


class BernsteinLabError(Exception):
    """Base class of all errors raised by the package."""


class DomainError(BernsteinLabError, ValueError):
    """A state or time lies outside the supported domain."""


class OrderingError(BernsteinLabError, ValueError):
    """Time arguments violate the required ordering (e.g. s < t)."""


class TruncationPolicyError(BernsteinLabError, ValueError):
    """A spectral evaluation was requested outside the truncation policy."""


class InvalidDatumError(BernsteinLabError, ValueError):
    """An initial or final datum is non-finite or not strictly positive."""


class UnsupportedGeometryError(BernsteinLabError, ValueError):
    """The operation is not available for the requested geometry."""


class PreconditionError(BernsteinLabError, ValueError):
    """A documented precondition of an operation does not hold."""


class InsufficientPathDataError(BernsteinLabError, ValueError):
    """A path lacks data (e.g. the noise record) required by the operation."""


class RootIsolationError(BernsteinLabError, RuntimeError):
    """A sign-change bracket for a Bessel root could not be found."""


class UnderflowError(BernsteinLabError, RuntimeError):
    """A kernel denominator fell below the representable threshold."""


class KernelIntegrationError(BernsteinLabError, RuntimeError):
    """A discretized transition kernel lost too much mass to sample from."""


class NumericalBlowupError(BernsteinLabError, RuntimeError):
    """A simulated state became non-finite.

    Attributes:
        step: Index of the time step at which the blow-up was detected
    """

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"Non-finite state at step {step}")


class ConfigParseError(BernsteinLabError, ValueError):
    """A model configuration could not be parsed or validated.

    Attributes:
        line: 1-based line number of the offending entry (0 when not line-specific)
        key: Configuration key the error refers to
    """

    def __init__(self, line: int, key: str, message: str):
        self.line = line
        self.key = key
        where = f"line {line}" if line > 0 else "end of input"
        super().__init__(f"{where}, key '{key}': {message}")
