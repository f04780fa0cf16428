"""Exception types raised across the package."""


class PartialMatError(Exception):
    """Base class for every error raised by partialmat."""


class NotHermitian(PartialMatError):
    pass


class NotPSD(PartialMatError):
    pass


class NoConvergence(PartialMatError):
    pass


class DimMismatch(PartialMatError):
    pass


class BadSpec(PartialMatError):
    pass


class CapExceeded(PartialMatError):
    """A tensor power would exceed the configured dimension cap."""


class DimTooLarge(PartialMatError):
    """An oracle was asked for an input beyond its factorial-cost guard."""
