"""Exception types shared across the library."""


class ReformLabError(Exception):
    """Base class for all library-specific errors."""


class SpecFormatError(ReformLabError, ValueError):
    """A game, transformation, or meta-game description is malformed.

    The message names the offending field or profile.
    """


class UnknownLabelError(ReformLabError, ValueError):
    """A player or action label does not exist in the referenced game."""


class InfeasibleTransformError(ReformLabError, ValueError):
    """Applying the transformation would leave a player with no actions."""


class LabelCollisionError(ReformLabError, ValueError):
    """An added action label already exists for that player."""


class NumericError(ReformLabError, ArithmeticError):
    """A computation encountered non-finite values."""


class ContractionError(ReformLabError, ValueError):
    """The uniqueness certificate required by the operation does not hold."""


class CapacityError(ReformLabError, RuntimeError):
    """The meta-profile space exceeds the enumeration guard."""


class EvaluationError(ReformLabError, RuntimeError):
    """An inner equilibrium solve failed during meta-game evaluation."""

    def __init__(self, message, profile=None, residual=None):
        super().__init__(message)
        self.profile = profile
        self.residual = residual
