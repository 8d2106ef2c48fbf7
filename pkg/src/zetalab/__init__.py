"""zetalab: fourth-moment integrals of |zeta(1/2+it)| and their chord geometry."""

__version__ = "0.1.0"

from .errors import (
    BudgetError,
    ConditioningError,
    ConventionError,
    CoverageError,
    DomainError,
    GeometryError,
    MissedZeroError,
    NoBracketError,
    PrecisionError,
    RangeError,
    ZetalabError,
)
from .specfun import EvalPoint, Precision, theta, z, zeta_oracle
from .quad import (MomentEstimate, MomentFit, fit_moment_polynomial,
                   integrate_z4, laplace_moment, moment_samples)
from .ladder import (Chord, Convention, LadderCurve, build_ladder, chord,
                     find_almost_parallel_chords, find_unit_slope_chord,
                     load_curve, save_curve, verify_theorem)
from .zeros import (ZeroGeometry, crossing_point, find_inflection, find_zeros,
                    pair_geometry, rotating_chord_solve, select_gamma_bar,
                    verify_corollaries)

__all__ = [
    "__version__",
    "BudgetError", "ConditioningError", "ConventionError", "CoverageError",
    "DomainError", "GeometryError", "MissedZeroError", "NoBracketError",
    "PrecisionError", "RangeError", "ZetalabError",
    "EvalPoint", "Precision", "theta", "z", "zeta_oracle",
    "MomentEstimate", "MomentFit", "fit_moment_polynomial", "integrate_z4",
    "laplace_moment", "moment_samples",
    "Chord", "Convention", "LadderCurve", "build_ladder", "chord",
    "find_almost_parallel_chords", "find_unit_slope_chord", "load_curve",
    "save_curve", "verify_theorem",
    "ZeroGeometry", "crossing_point", "find_inflection", "find_zeros",
    "pair_geometry", "rotating_chord_solve", "select_gamma_bar",
    "verify_corollaries",
]
