"""InertLab error hierarchy."""

from typing import Iterable, Optional


class InertLabError(Exception):
    """Base class for every error raised by the library."""


class GroupSpecError(InertLabError, ValueError):
    """A group, element or expression document could not be parsed."""

    def __init__(self, message: str, token: Optional[str] = None, position: Optional[str] = None):
        self.reason = message
        self.token = token
        self.position = position
        where = f" at {position}" if position else ""
        what = f" (token {token!r})" if token is not None else ""
        super().__init__(f"{message}{what}{where}")


class AmbientMismatchError(InertLabError):
    """Operands live in different groups."""


class NotContainedError(InertLabError):
    """index(H, K) was asked for a subgroup H not contained in K."""


class InvalidAutomorphismError(InertLabError):
    """An expression is not an automorphism of its ambient group."""

    def __init__(self, message: str, failures: Iterable[str] = ()):
        self.failures = list(failures)
        super().__init__(message if not self.failures else f"{message}: {'; '.join(self.failures)}")


class StabilityError(InertLabError):
    """An automorphism does not stabilize the requested series 0 <= X <= A."""


class HypothesisError(InertLabError):
    """The hypotheses of a decomposition operation are not met."""


class NotDivisibleError(InertLabError, ArithmeticError):
    """A coordinate cannot be multiplied by the requested rational inside its atom."""


class UsageError(InertLabError):
    """The command line does not match the CLI grammar."""
