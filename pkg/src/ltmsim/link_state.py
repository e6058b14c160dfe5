"""Evolving per-link state: boundary curves, queue/vacancy sizes, demand and supply.

A link's state is its initial density profile plus the inflow curve F and
outflow curve G recorded so far (and per-commodity splits of both).  The
boundary demand over a step [t, t+dt] is the out-count the link could ideally
release into an empty downstream divided by dt, capped at capacity; supply is
the mirror image against a jammed upstream.  Both reduce to curve lookups:

    demand = min( (F_hat(t+dt - L/V) - G(t)) / dt , C )
    supply = min( (G_hat(t+dt - L/W) + K*L - F(t)) / dt , C )

where the hatted lookups fall back to initial-data candidates while the
corresponding wave has not yet crossed the link.  As dt -> 0 these converge
to the flux-or-capacity limits selected by the queue and vacancy indicators.

The queue size lam(t) and vacancy size gam(t) are maintained incrementally as
well (the delay-ODE form of the dynamics); both formulations are exact for
piecewise-linear data and agree to rounding.

A LinkState is exclusively owned by its simulation.  Demand/supply queries
are read-only and may run in parallel across links within a step; advance is
serialized per link.
"""

from __future__ import annotations

from .curves import CumulativeCurve, DensityProfile
from .errors import FeasibilityError, JunctionContractError
from .fundamental_diagram import TriangularFD
from .variational import UDomainData

#: Absolute count tolerance before negative intermediate counts are a fault.
COUNT_TOL = 1e-9
#: Allowed flux excess over demand/supply before the junction contract fails.
FLUX_TOL = 1e-9
#: In-fluxes below this do not update the recorded commodity composition.
SHARE_FLUX_EPS = 1e-12
#: Slack for branch-activation tests on times.
TIME_TOL = 1e-9


class LinkState:
    """Boundary-curve state of one homogeneous link.

    Attributes:
        link_id: identifier used in faults and outputs.
        length: link length.
        fd: triangular fundamental diagram.
        initial: density profile at t = 0, rebased so N(L) = 0.
        inflow: cumulative in-count F, starting at the initial vehicle total.
        outflow: cumulative out-count G, starting at 0.
        lam, gam: queue and vacancy sizes maintained incrementally.
        commodities: commodity ids tracked on this link ((), for aggregate-only).
    """

    __slots__ = (
        "link_id",
        "length",
        "fd",
        "initial",
        "inflow",
        "outflow",
        "lam",
        "gam",
        "commodities",
        "inflow_by_commodity",
        "outflow_by_commodity",
        "_entry_share_times",
        "_entry_shares",
        "free_time",
        "back_time",
        "jam_count",
    )

    def __init__(
        self,
        link_id: str,
        length: float,
        fd: TriangularFD,
        initial: DensityProfile | None = None,
        commodities=(),
        entry_shares: dict | None = None,
    ):
        if length <= 0:
            raise ValueError(f"link {link_id}: length must be positive")
        profile = initial if initial is not None else DensityProfile.empty(length)
        if abs(profile.length - length) > 1e-12:
            raise ValueError(f"link {link_id}: profile length disagrees with link length")
        if profile.max_density() > fd.k_jam + 1e-12:
            raise ValueError(f"link {link_id}: initial density exceeds jam density")
        total = profile.total_vehicles()
        self.link_id = link_id
        self.length = float(length)
        self.fd = fd
        self.initial = profile.rebased(total)  # N(0) = vehicles on link, N(L) = 0
        self.inflow = CumulativeCurve([0.0], [total], max_slope=fd.capacity)
        self.outflow = CumulativeCurve([0.0], [0.0], max_slope=fd.capacity)
        self.lam = 0.0
        self.gam = 0.0
        self.free_time = self.length / fd.v_free
        self.back_time = self.length / fd.w_back
        self.jam_count = fd.k_jam * self.length

        self.commodities = tuple(commodities)
        if self.commodities:
            if entry_shares is None:
                if total > COUNT_TOL:
                    raise ValueError(
                        f"link {link_id}: initial vehicles need an entry-share split "
                        "when commodities are tracked"
                    )
                entry_shares = {p: (1.0 if i == 0 else 0.0) for i, p in enumerate(self.commodities)}
            self.inflow_by_commodity = {
                p: CumulativeCurve([0.0], [total * entry_shares.get(p, 0.0)])
                for p in self.commodities
            }
            self.outflow_by_commodity = {
                p: CumulativeCurve([0.0], [0.0]) for p in self.commodities
            }
            self._entry_share_times = [0.0]
            self._entry_shares = [dict(entry_shares)]
        else:
            self.inflow_by_commodity = {}
            self.outflow_by_commodity = {}
            self._entry_share_times = [0.0]
            self._entry_shares = [{}]

    # ------------------------------------------------------------------ state

    def vehicles(self, t: float) -> float:
        """Vehicles on the link at time t."""
        return self.inflow.value(t) - self.outflow.value(t)

    def queue_size(self, t: float) -> float:
        """Count deficit at the downstream end (vehicles held back by the exit).

        Equals N(L - V t) - G(t) before the free-flow wave has crossed the
        link and F(t - L/V) - G(t) afterwards; zero exactly at t = 0.
        """
        if t <= self.free_time:
            return self.initial.n_at(self.length - self.fd.v_free * t) - self.outflow.value(t)
        return self.inflow.value(t - self.free_time) - self.outflow.value(t)

    def vacancy_size(self, t: float) -> float:
        """Spare storage measured at the upstream end; zero exactly at t = 0."""
        if t <= self.back_time:
            wt = self.fd.w_back * t
            return self.initial.n_at(wt) + self.fd.k_jam * wt - self.inflow.value(t)
        return self.outflow.value(t - self.back_time) + self.jam_count - self.inflow.value(t)

    # --------------------------------------------------------- ideal lookups

    def _ideal_out_count(self, tau: float) -> float:
        """Out-count if the downstream were empty through time tau (uncapped)."""
        fd = self.fd
        best = self.initial.initial_candidate_min(
            fd, self.length, tau, self.length - fd.v_free * tau, self.length
        )
        if tau >= self.free_time - TIME_TOL:
            cand = self.inflow.value(max(tau - self.free_time, 0.0))
            if cand < best:
                best = cand
        return best

    def _ideal_in_count(self, tau: float) -> float:
        """In-count if the upstream were jammed through time tau (uncapped)."""
        fd = self.fd
        best = self.initial.initial_candidate_min(
            fd, 0.0, tau, 0.0, fd.w_back * tau
        )
        if tau >= self.back_time - TIME_TOL:
            cand = self.outflow.value(max(tau - self.back_time, 0.0)) + self.jam_count
            if cand < best:
                best = cand
        return best

    def _delayed_in_count(self, tau: float) -> float:
        """End-point form feeding the queue-size delay ODE."""
        if tau <= self.free_time:
            return self.initial.n_at(self.length - self.fd.v_free * tau)
        return self.inflow.value(tau - self.free_time)

    def _delayed_out_count(self, tau: float) -> float:
        """End-point form feeding the vacancy-size delay ODE."""
        if tau <= self.back_time:
            wt = self.fd.w_back * tau
            return self.initial.n_at(wt) + self.fd.k_jam * wt
        return self.outflow.value(tau - self.back_time) + self.jam_count

    # -------------------------------------------------------- demand / supply

    def demand(self, t: float, dt: float) -> float:
        """Sending flow over [t, t + dt] from the recorded curves."""
        num = self._ideal_out_count(t + dt) - self.outflow.value(t)
        if num < -COUNT_TOL:
            raise FeasibilityError(
                f"link {self.link_id}: out-count exceeds its ideal by {-num:.3g} at t={t}"
            )
        return min(max(num, 0.0) / dt, self.fd.capacity)

    def supply(self, t: float, dt: float) -> float:
        """Receiving flow over [t, t + dt] from the recorded curves."""
        num = self._ideal_in_count(t + dt) - self.inflow.value(t)
        if num < -COUNT_TOL:
            raise FeasibilityError(
                f"link {self.link_id}: in-count exceeds its ideal by {-num:.3g} at t={t}"
            )
        return min(max(num, 0.0) / dt, self.fd.capacity)

    def demand_qv(self, t: float, dt: float) -> float:
        """Sending flow over [t, t + dt] from the incremental queue state.

        Uses lam plus the exact delayed-inflow increment; initial-data
        candidates still apply while the free-flow wave is in flight, which
        also covers profiles with congested-ahead-of-uncongested stretches.
        """
        num = self.lam + (self._delayed_in_count(t + dt) - self._delayed_in_count(t))
        cand = (
            self.initial.initial_candidate_min(
                self.fd,
                self.length,
                t + dt,
                self.length - self.fd.v_free * (t + dt),
                self.length,
            )
            - self.outflow.value(t)
        )
        if cand < num:
            num = cand
        if num < -COUNT_TOL:
            raise FeasibilityError(
                f"link {self.link_id}: negative queue balance {num:.3g} at t={t}"
            )
        return min(max(num, 0.0) / dt, self.fd.capacity)

    def supply_qv(self, t: float, dt: float) -> float:
        """Receiving flow over [t, t + dt] from the incremental vacancy state."""
        num = self.gam + (self._delayed_out_count(t + dt) - self._delayed_out_count(t))
        cand = (
            self.initial.initial_candidate_min(
                self.fd, 0.0, t + dt, 0.0, self.fd.w_back * (t + dt)
            )
            - self.inflow.value(t)
        )
        if cand < num:
            num = cand
        if num < -COUNT_TOL:
            raise FeasibilityError(
                f"link {self.link_id}: negative vacancy balance {num:.3g} at t={t}"
            )
        return min(max(num, 0.0) / dt, self.fd.capacity)

    # ---------------------------------------------------------------- update

    def queue_formulation_step(self, f_in: float, g_out: float, t: float, dt: float):
        """Exact step increments (dlam, dgam) of the queue/vacancy delay ODEs.

        Integrates the delayed-rate right-hand sides across [t, t + dt], so a
        step may straddle the wave-arrival instants L/V and L/W without error;
        summing the increments reproduces queue_size/vacancy_size exactly.
        """
        dlam = (self._delayed_in_count(t + dt) - self._delayed_in_count(t)) - g_out * dt
        dgam = (self._delayed_out_count(t + dt) - self._delayed_out_count(t)) - f_in * dt
        return dlam, dgam

    def advance(
        self,
        f_in: float,
        g_out: float,
        t: float,
        dt: float,
        demand: float | None = None,
        supply: float | None = None,
        f_in_by_commodity: dict | None = None,
        g_out_by_commodity: dict | None = None,
    ) -> None:
        """Append one step of boundary flow.

        ``demand``/``supply`` may carry the snapshot already computed for the
        junction stage; otherwise they are recomputed here.  Fluxes violating
        those bounds raise JunctionContractError naming the link.
        """
        if dt <= 0:
            raise ValueError("dt must be positive")
        if f_in < -FLUX_TOL or g_out < -FLUX_TOL:
            raise JunctionContractError(
                f"link {self.link_id}: negative boundary flux (f={f_in}, g={g_out})"
            )
        f_in = max(f_in, 0.0)
        g_out = max(g_out, 0.0)
        d = self.demand(t, dt) if demand is None else demand
        s = self.supply(t, dt) if supply is None else supply
        if g_out > d + FLUX_TOL:
            raise JunctionContractError(
                f"link {self.link_id}: out-flux {g_out} exceeds demand {d} at t={t}"
            )
        if f_in > s + FLUX_TOL:
            raise JunctionContractError(
                f"link {self.link_id}: in-flux {f_in} exceeds supply {s} at t={t}"
            )
        dlam, dgam = self.queue_formulation_step(f_in, g_out, t, dt)
        self.inflow.append(t + dt, self.inflow.end_value + f_in * dt)
        self.outflow.append(t + dt, self.outflow.end_value + g_out * dt)
        self.lam += dlam
        self.gam += dgam
        if self.commodities:
            self._advance_commodities(f_in, g_out, t, dt, f_in_by_commodity, g_out_by_commodity)

    def _advance_commodities(self, f_in, g_out, t, dt, f_in_by_commodity, g_out_by_commodity):
        if f_in_by_commodity is None:
            shares = self._entry_shares[-1]
            f_in_by_commodity = {p: f_in * shares.get(p, 0.0) for p in self.commodities}
        if g_out_by_commodity is None:
            shares = self.exit_shares(t)
            g_out_by_commodity = {p: g_out * shares.get(p, 0.0) for p in self.commodities}
        for p in self.commodities:
            fp = f_in_by_commodity.get(p, 0.0)
            gp = g_out_by_commodity.get(p, 0.0)
            curve = self.inflow_by_commodity[p]
            curve.append(t + dt, curve.end_value + fp * dt)
            curve = self.outflow_by_commodity[p]
            curve.append(t + dt, curve.end_value + gp * dt)
        if f_in > SHARE_FLUX_EPS:
            shares = {p: f_in_by_commodity.get(p, 0.0) / f_in for p in self.commodities}
            self._entry_share_times.append(t)
            self._entry_shares.append(shares)

    # ------------------------------------------------------------- commodities

    def travel_time(self, t: float) -> float:
        """Travel time of the vehicle exiting at t, from F(t - pi) = G(t).

        Ties on flat inflow stretches resolve to the smallest travel time
        (the head of the next platoon); an empty never-loaded link yields 0.
        """
        target = self.outflow.value(t)
        tau = self.inflow.inverse_rightmost(target)
        return max(0.0, t - tau)

    def entry_shares_at(self, tau: float) -> dict:
        """Commodity composition of the inflow at time tau (held over zero-flux gaps)."""
        from bisect import bisect_right

        i = bisect_right(self._entry_share_times, tau) - 1
        if i < 0:
            i = 0
        return self._entry_shares[i]

    def exit_shares(self, t: float) -> dict:
        """Commodity composition of the outflow at t: entry shares one travel time back."""
        if not self.commodities:
            return {}
        target = self.outflow.value(t)
        if target < self.inflow.start_value - COUNT_TOL:
            # vehicles loaded at t = 0 inherit the first recorded composition
            return self._entry_shares[0]
        return self.entry_shares_at(t - self.travel_time(t))

    # ------------------------------------------------------------------ misc

    def udomain(self) -> UDomainData:
        """Snapshot of the link as initial/boundary data for the variational kernel."""
        return UDomainData(
            self.fd,
            self.length,
            self.initial,
            self.inflow.copy(),
            self.outflow.copy(),
        )
