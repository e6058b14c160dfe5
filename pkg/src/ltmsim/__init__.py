"""Continuous link transmission model toolkit.

Network kinematic-wave simulation on cumulative count curves, variational
in-link reconstruction, invariant junction models, and analytical stationary
state / stability tools, all sharing a triangular fundamental diagram.
"""

from .curves import CumulativeCurve, DensityProfile
from .errors import (
    ConfigError,
    DegenerateTurningError,
    FeasibilityError,
    InsufficientDataError,
    JunctionContractError,
)
from .fundamental_diagram import TriangularFD
from .junction import (
    JunctionFlows,
    JunctionSpec,
    check_invariance,
    critical_demand_level,
    evaluate_junction,
    invariant_fluxes,
    noninvariant_merge_fluxes,
)
from .link_state import LinkState
from .variational import (
    FeasibilityViolation,
    UDomainData,
    candidate_value,
    check_feasible,
    reconstruct_field,
    solve_interior,
)

__all__ = [
    "CumulativeCurve",
    "DensityProfile",
    "TriangularFD",
    "LinkState",
    "UDomainData",
    "FeasibilityViolation",
    "candidate_value",
    "check_feasible",
    "reconstruct_field",
    "solve_interior",
    "JunctionSpec",
    "JunctionFlows",
    "critical_demand_level",
    "invariant_fluxes",
    "noninvariant_merge_fluxes",
    "evaluate_junction",
    "check_invariance",
    "ConfigError",
    "DegenerateTurningError",
    "FeasibilityError",
    "InsufficientDataError",
    "JunctionContractError",
]

__version__ = "0.1.0"
