"""Triangular flow-density relation shared by every kernel in the package.

Flux follows the free-flow branch q = v_free * k up to the critical density
and the congested branch q = (k_jam - k) * w_back above it.  The congested
wave travels at -w_back; w_back itself is stored as a positive magnitude and
every formula applies the sign explicitly, which keeps the backward-wave
bookkeeping free of double negations.

Derived constants:
    k_crit   = w_back / (v_free + w_back) * k_jam
    capacity = v_free * k_crit = (k_jam - k_crit) * w_back
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: Absolute tolerance for equality checks against cached derived constants
#: (critical density, capacity) in consistent units.
EQ_TOL = 1e-12


def _as_result(value, like):
    """Return a plain float for scalar input, ndarray otherwise."""
    if np.ndim(like) == 0:
        return float(value)
    return value


@dataclass(frozen=True)
class TriangularFD:
    """Triangular fundamental diagram with cached critical density and capacity.

    Immutable after construction and freely shareable across threads.

    Attributes:
        v_free: free-flow speed (length/time), > 0.
        w_back: magnitude of the congested wave speed (length/time), > 0.
        k_jam: jam density (veh/length), > 0.
    """

    v_free: float
    w_back: float
    k_jam: float
    k_crit: float = field(init=False, repr=False)
    capacity: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not (self.v_free > 0 and self.w_back > 0 and self.k_jam > 0):
            raise ValueError(
                "fundamental diagram parameters must be positive, got "
                f"v_free={self.v_free}, w_back={self.w_back}, k_jam={self.k_jam}"
            )
        k_crit = self.w_back / (self.v_free + self.w_back) * self.k_jam
        object.__setattr__(self, "k_crit", k_crit)
        object.__setattr__(self, "capacity", self.v_free * k_crit)

    def _checked_density(self, k):
        arr = np.asarray(k, dtype=float)
        if np.any(arr < -EQ_TOL) or np.any(arr > self.k_jam + EQ_TOL):
            raise ValueError(f"density outside [0, {self.k_jam}]: {k!r}")
        return np.clip(arr, 0.0, self.k_jam)

    def flux(self, k):
        """Flow rate at density k: min of the two branches, in [0, capacity]."""
        arr = self._checked_density(k)
        return _as_result(np.minimum(self.v_free * arr, (self.k_jam - arr) * self.w_back), k)

    def lagrangian(self, u):
        """Transform value L(u) = capacity - k_crit * u for observer speed u.

        Valid for u in [-w_back, v_free]; L(v_free) = 0, L(0) = capacity,
        L(-w_back) = w_back * k_jam.
        """
        arr = np.asarray(u, dtype=float)
        if np.any(arr < -self.w_back - EQ_TOL) or np.any(arr > self.v_free + EQ_TOL):
            raise ValueError(
                f"observer speed outside [{-self.w_back}, {self.v_free}]: {u!r}"
            )
        return _as_result(self.capacity - self.k_crit * arr, u)

    def pointwise_demand(self, k):
        """Sending flow of a cell at density k: min(v_free * k, capacity)."""
        arr = self._checked_density(k)
        return _as_result(np.minimum(self.v_free * arr, self.capacity), k)

    def pointwise_supply(self, k):
        """Receiving flow of a cell at density k: min(capacity, (k_jam - k) * w_back)."""
        arr = self._checked_density(k)
        return _as_result(np.minimum(self.capacity, (self.k_jam - arr) * self.w_back), k)

    def free_density(self, q):
        """Density on the free-flow branch carrying flux q (q <= capacity)."""
        if q < -EQ_TOL or q > self.capacity + EQ_TOL:
            raise ValueError(f"flux outside [0, {self.capacity}]: {q!r}")
        return min(max(q, 0.0), self.capacity) / self.v_free

    def congested_density(self, q):
        """Density on the congested branch carrying flux q (q <= capacity)."""
        if q < -EQ_TOL or q > self.capacity + EQ_TOL:
            raise ValueError(f"flux outside [0, {self.capacity}]: {q!r}")
        return self.k_jam - min(max(q, 0.0), self.capacity) / self.w_back
