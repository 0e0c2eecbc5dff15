"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class SingularityError(ArithmeticError):
    """A formula hits a removable or genuine singularity it cannot resolve."""


class DegenerateError(ValueError):
    """The input describes a degenerate wave (zero amplitude, h == h_c, ...)."""


class NoSolutionError(RuntimeError):
    """No member of the periodic family matches the requested parameters."""


class PrecisionLimitError(RuntimeError):
    """The solution exists but lies beyond what double precision can resolve."""


class IntegratorError(RuntimeError):
    """Adaptive time stepping failed (step underflow or non-finite state)."""


class PrecisionWarning(UserWarning):
    """Result is returned, but some digits are not trustworthy."""


class WindowTooShortError(DomainError):
    """Too little of the wave was sampled to measure amplitude and phase."""
