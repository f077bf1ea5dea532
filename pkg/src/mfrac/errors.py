"""Exception types raised across the package."""


class MfracError(Exception):
    """Base class for package errors."""


class ParameterError(MfracError, ValueError):
    """An exponent, level or other scalar parameter is out of range."""


class AlignmentError(MfracError, ValueError):
    """A cube or translation does not line up with the cells of the grid."""


class ShapeError(MfracError, ValueError):
    """Grid functions that must share a grid do not."""


class UnsupportedFamilyError(MfracError, ValueError):
    pass


class EmptyFamilyError(MfracError, ValueError):
    pass


class CostCapExceeded(MfracError, RuntimeError):
    """Refusal to start a brute-force sum above the configured term budget."""

    def __init__(self, terms, cap):
        self.terms = int(terms)
        self.cap = int(cap)
        super().__init__(
            f"evaluation needs {self.terms:.3e} kernel terms, above the cap {self.cap:.3e}"
        )


class HypothesesUnmet(MfracError, ValueError):
    """A theorem suite was asked to run on inputs outside the theorem's hypotheses."""
