"""Exception hierarchy shared by every soupline module."""


class SouplineError(ValueError):
    """Base class for all domain errors raised by soupline."""


class DomainError(SouplineError):
    """An argument lies outside the domain of a closed-form expression."""


class InvalidConvexSpec(SouplineError):
    """A convex function cannot be used to generate a bound."""


class InfeasibleMean(SouplineError):
    """A requested mean cannot be produced by the given number of demands."""


class NotInvertible(SouplineError):
    """The bound family is already a closed-form throughput floor."""


class EmptyGrid(SouplineError):
    pass


class TooLarge(SouplineError):
    """Exact enumeration would exceed the configured size limits."""


class UnsupportedDistribution(SouplineError):
    pass


class NonConcave(SouplineError):
    pass
