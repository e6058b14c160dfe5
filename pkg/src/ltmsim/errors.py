"""Exception types shared across the package."""


class ConfigError(Exception):
    """Invalid or inconsistent configuration document."""


class JunctionContractError(RuntimeError):
    """A junction produced fluxes violating a link's demand or supply bound."""


class FeasibilityError(RuntimeError):
    """Boundary cumulative curves are inconsistent with link storage or FIFO limits."""


class DegenerateTurningError(ValueError):
    """A supply-constrained outgoing link receives no turning flow from any approach."""


class InsufficientDataError(ValueError):
    """Not enough trajectory samples to form an estimate."""
