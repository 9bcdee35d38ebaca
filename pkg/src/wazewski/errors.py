"""Exception hierarchy shared by all modules."""


class WazewskiError(Exception):
    """Base class for every error raised by this package."""


class PreconditionError(WazewskiError, ValueError):
    """An operation was called with arguments violating its precondition."""


class StepUnderflow(WazewskiError):
    """The adaptive integrator needed a step smaller than the configured minimum."""

    def __init__(self, t, h, message=None):
        self.t = t
        self.h = h
        super().__init__(message or f"step {h:.3e} below minimum at t={t!r}")


class NonFiniteRhs(WazewskiError):
    """The right-hand side produced NaN or infinity."""

    def __init__(self, t, message=None):
        self.t = t
        super().__init__(message or f"non-finite right-hand side at t={t!r}")


class IntegrationBreakdown(WazewskiError):
    """A trajectory could not be continued before reaching its stopping condition.

    For systems that satisfy the global-existence hypothesis this cannot
    happen, so it is reported as a diagnostic rather than treated as an exit.
    ``state`` is the last accepted state and ``__cause__`` the underlying
    :class:`StepUnderflow` or :class:`NonFiniteRhs`.
    """

    def __init__(self, state, cause):
        self.state = state
        self.cause = cause
        super().__init__(
            f"integration broke down at t={state.t!r} before leaving the domain: {cause}"
        )


class DegenerateGradient(WazewskiError):
    """|dF| vanished (or nearly) at a boundary point."""


class NotApplicable(WazewskiError):
    """An asymptotic formula was evaluated outside its regime."""


class DegenerateCase(NotApplicable):
    """The quadratic exit-time root is ill-posed because A is (nearly) zero."""


class NoExit(WazewskiError):
    """The trajectory survived to the horizon where an exit was required."""

    def __init__(self, survival):
        self.survival = survival
        super().__init__(f"trajectory survived to horizon {survival.horizon!r}")


class TimeOutOfDomain(WazewskiError, ValueError):
    """A train profile was evaluated outside the time range it is known on."""


class InsufficientSamples(WazewskiError, ValueError):
    pass


class NonMonotoneTimes(WazewskiError, ValueError):
    pass


class BoundViolated(WazewskiError):
    """The a-priori energy estimate failed at some sample."""

    def __init__(self, t, lhs, rhs):
        self.t = t
        self.lhs = lhs
        self.rhs = rhs
        super().__init__(f"energy bound violated at t={t!r}: {lhs!r} > {rhs!r}")


class SearchError(WazewskiError):
    """Base class for survivor-search failures."""

    def __init__(self, message, trace=()):
        self.trace = list(trace)
        super().__init__(message)


class BracketLost(SearchError):
    """Both ends of the bisection bracket exit through the same side."""


class NoSurvivorFound(SearchError):
    """Bisection exhausted its budget without finding a surviving probe."""
