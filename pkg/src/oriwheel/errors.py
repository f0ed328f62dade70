"""Exception hierarchy shared by all modules."""


class OriWheelError(Exception):
    """Base class for every error raised by this package."""


class InvalidParams(OriWheelError, ValueError):
    """Parameters violate a domain invariant."""


class Infeasible(OriWheelError, ValueError):
    """The ring cannot close for this cell count and crease angle."""


class FoldInfeasible(OriWheelError):
    """No rigid-folding state exists at the requested fold angle."""


class NoClosure(OriWheelError):
    """Numeric closure search failed inside the allowed fold range."""


class NoFeasibleDesign(OriWheelError):
    """Every candidate in the design grid is infeasible."""


class Unconverged(OriWheelError):
    """Design search hit its evaluation budget; ``best`` holds the best result."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class NumericalDivergence(OriWheelError):
    """Simulation state became non-finite; ``trajectory`` holds the valid prefix."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class NeverEscaped(OriWheelError):
    """The wheel never climbed out of its initial sinkage."""

    def __init__(self, message, d_pt=float("nan")):
        super().__init__(message)
        self.t_pt = float("inf")
        self.d_pt = d_pt


class CalibrationFailed(OriWheelError):
    """No soil parameters satisfy every anchor."""


class ActuationLimit(OriWheelError):
    """Required width lies outside the actuated fold range."""


class IoError(OriWheelError, OSError):
    """Reading or writing an artifact file failed."""
