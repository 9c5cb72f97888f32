"""Domain-specific error types shared across the package."""


class DegenerateConditioningError(ValueError):
    """Conditioning on an outcome whose probability is numerically zero."""


class ZeroStrengthError(ValueError):
    """Measurement strength K is below the 1e-9 guard; 1/K calibration is undefined."""


class InsufficientPostselectionError(ValueError):
    """No post-selected coincidence counts; the conditional estimator is undefined."""


class UndefinedSignificanceError(ValueError):
    """Significance requested for an estimate with sigma = 0."""


class UnreachableTargetError(ValueError):
    """Requested target value lies outside the model's reachable range."""
