"""Phase shifts, bound states and the Friedel sum rule for a spherical impurity.

Units are ``hbar^2 / 2m = 1``, so ``E = k^2``.
"""

from .boundstates import BoundStateTable, build_table, count_channel, locate_levels, total_excess_bound
from .errors import (
    BudgetError,
    ComputationError,
    FriedelError,
    MatchingError,
    ParseError,
    StepTooLargeError,
    ToleranceNotReachedError,
    UnwrapError,
    ValidationError,
)
from .finitebox import BoxCountScan, count_levels_in_box, scan
from .friedel import (
    DensityCheck,
    FriedelReport,
    density_excess_charge,
    density_identity_check,
    friedel_report,
    known_form_excess_charge,
    levinson_check,
    oscillatory_tail,
    sum_rule_excess_charge,
)
from .phaseshift import PhaseShiftCurve, build_curve, extract_phase_shift
from .potential import Potential, load_potential, parse_potential_file, serialize_potential, square_well, zero_potential
from .radial import RadialSolution, integrate_regular, normalization_identity_check
from .specfun import BesselPair, riccati_bessel

__version__ = "0.1.0"
