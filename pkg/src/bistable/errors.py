"""Shared exception types raised across the toolkit."""


class BistableError(Exception):
    """Base class for all toolkit errors."""


class UnsupportedMetric(BistableError):
    """Requested operation is not available for this metric tag / dimension."""


class GuardExceeded(BistableError):
    """A hard size guard tripped; the input is too large for this code path."""


class MassMismatch(BistableError):
    """Total masses differ where equal masses are required."""


class MonotonicityViolation(BistableError):
    """Filtration entries are not face-monotone."""


class NotASubcomplex(BistableError):
    """Claimed subcomplex contains simplices absent from the supercomplex."""


class EmptyGrid(BistableError):
    """Grid specification has no usable grid points."""


class SizeGuard(BistableError):
    """Combinatorial construction would exceed its size guard."""


class NonMonotoneLine(BistableError):
    """Query line is not monotone in the bifiltration order."""


class ParameterOutOfWindow(BistableError):
    """Parameters fall outside the validated window for a construction."""


class InfiniteMismatch(BistableError):
    """Barcodes have incompatible multisets of infinite intervals."""
