"""
Custom exceptions for frobound.
"""

class FroboundError(Exception):
    """Base exception for all frobound errors."""
    exit_code = 1

class InputError(FroboundError):
    """Exception raised for malformed job configurations or connection files."""
    exit_code = 2

class UnsupportedInputError(InputError):
    """Exception raised for inputs outside the supported class (irrational exponents, p = 2, ...)."""
    pass

class HypothesisError(UnsupportedInputError):
    """Exception raised when the hypotheses fail for a job; carries one report per point."""

    def __init__(self, message, reports=()):
        super().__init__(message)
        self.reports = list(reports)

class ArithmeticDomainError(FroboundError):
    """Exception raised for non-invertible elements, singular matrices and poles at expansion points."""
    pass

class PrecisionError(FroboundError):
    """Exception raised when the guaranteed accuracy is exhausted."""
    exit_code = 3

    def __init__(self, message, required_increase=None):
        super().__init__(message)
        self.required_increase = required_increase

class CacheError(FroboundError):
    """Exception raised for errors related to caching."""
    pass

class ReconstructionError(FroboundError):
    """Exception raised when pole-order measurement or rational reconstruction is inconclusive."""
    exit_code = 3

class TheoremViolationError(FroboundError):
    """Exception raised when computed data contradicts a proven bound."""
    exit_code = 4

    def __init__(self, message):
        super().__init__(f"THEOREM VIOLATION: {message}")
