"""Exception hierarchy shared by every module."""


class TodaSovError(Exception):
    """Base class for library errors."""


class PoleError(TodaSovError, ArithmeticError):
    """A Gamma argument sits on (or within 1e-12 of) a nonpositive integer."""


class NonConvergence(TodaSovError, RuntimeError):
    """Successive quadrature refinements disagree beyond the tolerance."""


class BudgetExceeded(TodaSovError, RuntimeError):
    """The requested quadrature would exceed the configured node cap."""


class DimensionMismatch(TodaSovError, ValueError):
    """Vector arguments have incompatible lengths."""


class DegenerateInput(TodaSovError, ValueError):
    """Input lies on an excluded degenerate set (e.g. a vanishing partial sum)."""


class PreconditionViolated(TodaSovError, ValueError):
    """Arguments violate a stated precondition."""


class TailTooLarge(TodaSovError, RuntimeError):
    """A truncated integration box leaves too much mass in the tail."""


class SmallDenominator(TodaSovError, ArithmeticError):
    """A ratio was requested at a point where the denominator nearly vanishes."""
