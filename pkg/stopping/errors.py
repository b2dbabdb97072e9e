from typing import Iterable, Set


class StoppingError(Exception):
    """Base robust stopping exception.

    Parameters
    ----------
    error : str
        The error message.
    """

    def __init__(self, error: str = ""):
        self.error = error

    def __str__(self) -> str:
        return f"{self.__class__.__name__}({self.error})"

    __repr__ = __str__


class ValidationError(StoppingError):
    """Input parameters do not describe a usable problem."""

    pass


class InvalidParameter(ValidationError):
    """A parameter is out of its admissible range (non-positive mean, ...)."""

    pass


class EmptyAmbiguitySet(ValidationError):
    """The non-emptiness inequality of an ambiguity set is violated."""

    def __init__(self, inequality: str, detail: str = ""):
        message = f"Ambiguity set is empty: {inequality} does not hold"
        if detail:
            message += f" ({detail})"
        super().__init__(error=message + ".")
        self.inequality = inequality


class NegativeSupport(ValidationError):
    """A constructed distribution would put mass on a negative point."""

    pass


class XiOutOfRange(ValidationError):
    """The argument of a moment bound lies outside ``[0, L]``."""

    pass


class PreconditionViolated(ValidationError):
    """A closed form was requested outside the parameter range it holds for."""

    pass


class UnattainedBound(ValidationError):
    """The worst case is an infimum that no member distribution attains."""

    pass


class KindError(ValidationError):
    """Unknown or unsupported ambiguity set kind."""

    def __init__(self, kind: str, supported: Iterable):
        supported = set(supported)
        super().__init__(
            error=f"Unsupported ambiguity kind '{kind}' requested. "
            f"Valid options are: {', '.join(sorted(str(s) for s in supported))}."
        )
        self.kind = kind
        self.supported: Set = supported


class ComputationError(StoppingError):
    """An internal construction produced an inconsistent result."""

    pass


class InfeasibleSupportTriple(ComputationError):
    """The moment system on a support triple has no probability solution.

    For the closed-form constructions this signals a regime misclassification.
    """

    pass


class NoFeasibleCandidate(ComputationError):
    """The enumeration oracle found no member distribution on its grid."""

    pass


class VerificationFailed(StoppingError):
    """A closed form disagreed with its oracle beyond tolerance."""

    pass


class OutputFormatError(ValidationError):
    """Invalid output format."""

    def __init__(self, fmt: str, supported: Iterable):
        supported = set(supported)
        super().__init__(
            error=f"Unsupported output format '{fmt}' requested. "
            f"Valid options are: {', '.join(sorted(str(s) for s in supported))}."
        )
        self.fmt = fmt
        self.supported: Set = supported


class InvalidDistribution(ValidationError):
    """Atoms do not form a probability distribution."""

    pass
