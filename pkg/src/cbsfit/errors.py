"""Exception types raised across the package."""


class CBSError(Exception):
    """Base class for all package errors."""


class InputError(CBSError, ValueError):
    """Malformed input data, labels, or file contents."""


class ParameterError(CBSError, ValueError):
    """A configuration value violates its precondition."""


class DegenerateTupleError(CBSError):
    """The sampled tuple does not determine a unique model."""


class SampleFailure(CBSError):
    """The sample generator hit too many consecutive degenerate tuples."""


class NumericalError(CBSError):
    """A numerical routine produced an unusable result."""
