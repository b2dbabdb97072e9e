from enum import Enum
from typing import Dict, Set

from stopping.errors import InvalidParameter, KindError, OutputFormatError


PROB_SUM_TOL = 1e-12
PROB_CLAMP_TOL = 1e-15
SUPPORT_TOL = 1e-12
MOMENT_TOL = 1e-9
DUAL_TOL = 1e-9
ATOM_MERGE_TOL = 1e-12
TRIPLE_PROB_TOL = 1e-12
ORACLE_PROB_TOL = 1e-10
MONOTONE_TOL = 1e-12

DEFAULT_SEED = 20240101
DEFAULT_GRID_POINTS = 60
DEFAULT_MAJORANT_GRID = 10_000
DEFAULT_BLOCK_SIZE = 4096
DEFAULT_EPISODES = 100_000
DEFAULT_THREADS = 1
DEFAULT_OFFERS = 20
DEFAULT_XI_SWEEP = 50

SIGNIFICANT_DIGITS = 12
INFINITY = float("inf")


class AmbiguityKind(str, Enum):
    MEAN_ONLY = "mean-only"
    MEAN_VARIANCE = "mean-variance"
    TWO_POINT = "two-point"
    MEAN_VAR_SUPPORT = "mean-var-support"
    MEAN_MAD = "mean-mad"
    MEAN_MAD_SUPPORT = "mean-mad-support"

    def __str__(self) -> str:
        return f"{self.value}"

    @property
    def has_variance(self) -> bool:
        """Return True if the set fixes the variance."""
        return self in (self.MEAN_VARIANCE, self.TWO_POINT, self.MEAN_VAR_SUPPORT)

    @property
    def has_mad(self) -> bool:
        """Return True if the set fixes the mean absolute deviation."""
        return self in (self.MEAN_MAD, self.MEAN_MAD_SUPPORT)

    @property
    def has_support(self) -> bool:
        """Return True if the set carries a support upper bound."""
        return self in (self.TWO_POINT, self.MEAN_VAR_SUPPORT, self.MEAN_MAD_SUPPORT)

    @classmethod
    def supported(cls) -> Set["AmbiguityKind"]:
        """Return a set of supported ambiguity kinds."""
        return set(cls)

    @classmethod
    def get(cls, kind: str) -> "AmbiguityKind":
        """Get an ambiguity kind from its string representation.

        Accepts the CLI slug (``two-point``), the enum member name
        (``TWO_POINT``) or the camel case name used in JSON documents
        (``TwoPointMeanVarSupport``), case insensitively.

        Parameters
        ----------
        kind : str
            String representation of the kind.

        Returns
        -------
        AmbiguityKind
            Enum representation of the kind.

        Raises
        ------
        KindError
            If the kind is unknown.
        """
        if isinstance(kind, AmbiguityKind):
            return kind
        key = kind.strip().lower().replace("_", "-")
        member = _KIND_ALIASES.get(key.replace("-", ""))
        if member is None:
            raise KindError(kind=kind, supported=cls.supported())
        return member


_KIND_ALIASES: Dict[str, AmbiguityKind] = {
    "meanonly": AmbiguityKind.MEAN_ONLY,
    "mean": AmbiguityKind.MEAN_ONLY,
    "meanvariance": AmbiguityKind.MEAN_VARIANCE,
    "twopoint": AmbiguityKind.TWO_POINT,
    "twopointmeanvarsupport": AmbiguityKind.TWO_POINT,
    "meanvarsupport": AmbiguityKind.MEAN_VAR_SUPPORT,
    "meanmad": AmbiguityKind.MEAN_MAD,
    "meanmadsupport": AmbiguityKind.MEAN_MAD_SUPPORT,
}


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"

    def __str__(self) -> str:
        return f"{self.value}"

    @property
    def content_type(self) -> str:
        """Return the MIME type of documents in this format."""
        return "text/csv" if self is OutputFormat.CSV else "application/json"

    @classmethod
    def supported(cls) -> Set["OutputFormat"]:
        """Return a set of supported output formats."""
        return {cls.CSV, cls.JSON}

    @classmethod
    def get(cls, fmt: str) -> "OutputFormat":
        """Get an output format from its string representation.

        Raises
        ------
        OutputFormatError
            If the format is not supported.
        """
        if isinstance(fmt, OutputFormat):
            return fmt
        for member in cls.supported():
            if member.value == str(fmt).strip().lower():
                return member
        raise OutputFormatError(fmt=fmt, supported=cls.supported())


class Method(str, Enum):
    GENERIC = "generic"
    CLOSED_FORM = "closed-form"
    BOTH = "both"

    def __str__(self) -> str:
        return f"{self.value}"

    @classmethod
    def get(cls, method: str) -> "Method":
        """Get a threshold method from its string representation."""
        if isinstance(method, Method):
            return method
        for member in cls:
            if member.value == method.strip().lower():
                return member
        raise InvalidParameter(
            f"Unsupported method '{method}'. Valid options are: "
            f"{', '.join(m.value for m in cls)}."
        )


class Basis(str, Enum):
    POLYNOMIAL2 = "polynomial2"
    MAD = "mad"

    def __str__(self) -> str:
        return f"{self.value}"


VARIANCE_REGIME_NAMES = {0: "degenerate", 1: "lower", 2: "middle", 3: "upper"}
MAD_REGIME_NAMES = {
    0: "degenerate",
    1: "lower",
    2: "left-middle",
    3: "right-middle",
    4: "upper",
}
