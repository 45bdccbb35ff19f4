"""Exception hierarchy for the toolkit.

All toolkit-specific failures derive from ToolkitError so callers (and the
CLI) can distinguish numerical failures from programming errors.
"""


class ToolkitError(Exception):
    """Base class for all toolkit failures."""


class ConfigError(ToolkitError):
    """Invalid run configuration (bad field, missing key, ...)."""


class DegenerateViscosityError(ToolkitError):
    """A viscosity block that must be invertible is singular."""


class CharacteristicShockError(ToolkitError):
    """An end state has a characteristic speed too close to zero."""


class HypothesisViolationError(ToolkitError):
    """The noncharacteristicity determinant vanishes along the profile."""


class NoConnectionError(ToolkitError):
    """The profile solver found no connecting orbit between the end states."""


class DomainTooShortError(ToolkitError):
    """Profile tails at the domain ends exceed the tail tolerance."""

    def __init__(self, msg, suggested_length=None):
        super().__init__(msg)
        self.suggested_length = suggested_length


class ScalingUndefinedError(ToolkitError):
    """A balanced scaling was requested at a frequency where it is undefined."""


class AngleRequiredError(ToolkitError):
    """A directional limit was requested at zero frequency without an angle."""


class SplittingError(ToolkitError):
    """A limit matrix has spectrum too close to the imaginary axis to split."""


class DiscontinuityError(ToolkitError):
    """Projector continuation failed; possible eigenvalue crossing on the path."""


class GlancingError(ToolkitError):
    """The inviscid symbol is at (or too near) a Jordan-block configuration."""


class ResolutionError(ToolkitError):
    """Contour refinement exceeded the maximum bisection depth."""


class ZeroOnContourError(ToolkitError):
    """An ill-conditioned Evans sample persisted on the contour."""


class FitError(ToolkitError):
    """A regression/extrapolation did not converge."""


class AccuracyError(ToolkitError):
    """An ODE integration failed to meet its tolerance."""
