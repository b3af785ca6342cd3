"""Exception and warning types shared by all modules.

Invalid arguments raise the builtin ``ValueError``; the classes below cover
the remaining failure kinds.
"""


class NumericalFailure(RuntimeError):
    """A linear algebra routine (SVD, eigensolver, quadrature) did not converge."""


class AccuracyWarning(UserWarning):
    """The discretization is too coarse or too small for the requested accuracy."""


class ReportIOError(OSError):
    """Report files could not be written."""


class UsageError(ValueError):
    """Bad command line or configuration, e.g. an unknown experiment id."""
