"""Exception hierarchy shared by all defog modules."""


class DefogError(Exception):
    """Base class for defog failures."""


class InvalidParams(DefogError, ValueError):
    pass


class UnsupportedFormat(DefogError):
    pass


class CorruptData(DefogError):
    pass


class DimensionMismatch(DefogError, ValueError):
    pass


class DegenerateOriginal(DefogError):
    """The original image has zero total variance or zero variance of its area variances,
    so the ratios against it are undefined."""
