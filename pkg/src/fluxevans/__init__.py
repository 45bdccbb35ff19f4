"""Evans-function toolkit for viscous shock profiles in flux formulations."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ToolkitError, ConfigError, DegenerateViscosityError,
    CharacteristicShockError, HypothesisViolationError, NoConnectionError,
    DomainTooShortError, ScalingUndefinedError, AngleRequiredError,
    SplittingError, DiscontinuityError, GlancingError, ResolutionError,
    ZeroOnContourError, FitError, AccuracyError,
)
from .model import (  # noqa: F401
    SystemModel, ShockClassification, check_h1, check_h2, check_rh, classify,
)
from .profile import (  # noqa: F401
    ShockProfile, solve_profile, profile_residual, fit_decay_rates,
)
from .formulations import (  # noqa: F401
    Frequency, CoefficientField, build_integrated_1d, build_flux_1d,
    build_balanced_flux_1d, build_flux_md, build_sharp_md,
    build_integrated_b21, linearized_coeffs,
)
from .bases import (  # noqa: F401
    SubspaceSplit, KatoTransport, split, kato_continue,
    glancing_model, glancing_delta,
)
from .evans import (  # noqa: F401
    EvansSample, ContourResult, evaluate, evaluate_many, evaluate_bf,
    evaluate_mbf, winding, circle_contour, default_splits, field_builder,
)
from .lopatinski import (  # noqa: F401
    LowFrequencyFit, lopatinski_det, symbol_matrix, jump_vector,
    fit_low_frequency,
)
