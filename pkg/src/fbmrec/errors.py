"""Exception hierarchy shared by the generators, estimators and experiments."""


class FbmRecError(Exception):
    """Base class for all package errors."""


class InvalidHurst(FbmRecError, ValueError):
    pass


class NumericalFailure(FbmRecError):
    """A numerical routine could not produce a trustworthy result."""


class EmbeddingNotPSD(NumericalFailure):
    """Circulant embedding has an eigenvalue below the clamping tolerance."""


class NumericalBreakdown(NumericalFailure):
    """Durbin-Levinson produced a non-positive innovation variance."""


class NotPositiveDefinite(NumericalFailure):
    """Cholesky factorization of the fBm covariance failed."""


class DegenerateRegression(NumericalFailure, ValueError):
    """Fewer than three points, or all abscissae equal."""


class ScaleTooFine(FbmRecError, ValueError):
    """Dyadic boxes would span fewer than the minimum number of grid points."""


class InsufficientHits(FbmRecError):
    """Too few Monte Carlo successes for a reliable probability or exponent."""
