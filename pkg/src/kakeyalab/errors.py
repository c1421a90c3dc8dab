"""Exception hierarchy shared by all modules.

Exit-code mapping for the command line tool: ValidationError -> 2,
ResourceLimitError -> 3, CertificateError -> 4, anything else -> 1.
"""


class KakeyaLabError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(KakeyaLabError):
    """Bad input: out-of-domain argument, malformed config, broken invariant."""


class UnknownParameterError(ValidationError):
    """A curve parameter y was not found in the family's index set."""


class ResourceLimitError(KakeyaLabError):
    """A grid or cover would exceed the configured cell budget."""

    def __init__(self, msg, required=None):
        super().__init__(msg)
        self.required = required


class CertificateError(KakeyaLabError):
    """A returned certificate failed re-verification.  Must never fire."""


class TransversalityError(KakeyaLabError):
    """A sampled direction tuple fell below the wedge floor."""

    def __init__(self, msg, tuple_indices=None):
        super().__init__(msg)
        self.tuple_indices = tuple_indices


class PipelineError(KakeyaLabError):
    """The discretization pipeline could not distribute mass as required."""


class InsufficientDataError(KakeyaLabError):
    """Too few scales/records for a fit."""


class RescaleError(KakeyaLabError):
    """Parabolic rescale would leave the unit scale (new delta > 1)."""
