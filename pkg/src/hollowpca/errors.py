"""Exception types shared across the package."""


class HollowpcaError(Exception):
    """Base class for all errors raised by this package."""


class ConvergenceFailure(HollowpcaError):
    """An iterative numerical routine did not reach the requested tolerance."""


class RankDeficient(HollowpcaError):
    """A matrix that must have full rank is (numerically) singular.

    Raised by the matrix sign function when some singular value falls at or
    below the rank tolerance, signalling an ambiguous alignment between
    nearly orthogonal eigenspaces.
    """


class IndexOutOfRange(HollowpcaError, IndexError):
    """An index or index window lies outside the valid range."""


class InvalidParameter(HollowpcaError, ValueError):
    """A parameter violates its documented domain."""


class NonpositiveEigenvalue(HollowpcaError):
    """A square root of the spectrum was requested but an eigenvalue is <= 0.

    The PC-score embedding U diag(sqrt(lambda)) needs every eigenvalue in the
    window to be strictly positive; this error signals that the signal is too
    weak for the embedding to be defined.
    """


class DegenerateSpectrum(HollowpcaError):
    """Eigenvalue structure makes an estimator's weights undefined.

    Examples: the two leading eigenvalues coincide, or a logarithm argument
    built from them is not positive.  Phase-boundary parameter settings
    legitimately produce this.
    """


class ZeroEigengap(HollowpcaError):
    """The eigengap at the requested window is (numerically) zero."""


class ConfigError(InvalidParameter):
    """An experiment configuration failed schema or invariant validation.

    Collects every problem found in one pass so a bad config file can be
    fixed in a single round trip; the individual messages are available on
    the ``problems`` attribute.
    """

    def __init__(self, problems):
        self.problems = tuple(str(p) for p in problems)
        super().__init__("invalid config: " + "; ".join(self.problems))


class EmptyClusterRepaired(RuntimeWarning):
    """Warning category: a k-means cluster emptied and was reseeded.

    This is a recoverable event, not an error; the empty cluster's center is
    moved to the point currently farthest from its assigned center.
    """
