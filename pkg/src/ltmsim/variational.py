"""Variational (Hopf-Lax / Newell) evaluation of cumulative flow on one link.

Inside the U-shaped space-time domain [0, L] x [0, T] with initial counts
N(x), upstream boundary counts F(t) and downstream boundary counts G(t), the
cumulative flow at an interior point is the smallest candidate cost

    B(y, s; x, t) = A(y, s) + (t - s) * capacity - (x - y) * k_crit

over boundary points (y, s) reachable backwards through the kinematic wave
cone, i.e. with (x - y) / (t - s) between -w_back and v_free.  For the
triangular relation the relevant candidates collapse to:

  * initial data evaluated at profile breakpoints and cone endpoints,
  * the upstream count delayed by the free-flow time, F(t - x / v_free),
  * the downstream count delayed by the backward-wave time plus full storage,
    G(t - (L - x) / w_back) + (L - x) * k_jam.

All functions here are pure over immutable inputs and safe to evaluate in
parallel over (x, t) grids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import CumulativeCurve, DensityProfile
from .errors import FeasibilityError
from .fundamental_diagram import TriangularFD

#: Slack for cone-membership and branch-activation tests on floats.
CONE_TOL = 1e-9
#: Absolute count tolerance for feasibility violations.
FEAS_TOL = 1e-9


def candidate_value(a_ys: float, y: float, s: float, x: float, t: float, fd: TriangularFD) -> float:
    """Candidate cost of reaching (x, t) from boundary point (y, s) with count a_ys.

    Raises ValueError if t <= s or the connecting slope falls outside the
    wave cone [-w_back, v_free].
    """
    dt = t - s
    if dt <= 0:
        raise ValueError(f"candidate requires t > s, got s={s}, t={t}")
    u = (x - y) / dt
    if u > fd.v_free + CONE_TOL or u < -fd.w_back - CONE_TOL:
        raise ValueError(
            f"slope {u} outside wave cone [{-fd.w_back}, {fd.v_free}]"
        )
    return a_ys + dt * fd.capacity - (x - y) * fd.k_crit


@dataclass(frozen=True)
class FeasibilityViolation:
    """One failed consistency condition of the initial-boundary data."""

    condition: str
    t: float
    lhs: float
    rhs: float

    @property
    def excess(self) -> float:
        return self.lhs - self.rhs

    def __str__(self) -> str:
        return (
            f"{self.condition} at t={self.t:.9g}: {self.lhs:.9g} > {self.rhs:.9g}"
            f" (excess {self.excess:.3g})"
        )


class UDomainData:
    """Initial and boundary data for one homogeneous link.

    Validates corner compatibility (F(0) = N(0) and G(0) = N(L) within 1e-9),
    density bounds, and that every boundary segment slope respects capacity.
    """

    def __init__(
        self,
        fd: TriangularFD,
        length: float,
        initial: DensityProfile,
        upstream: CumulativeCurve,
        downstream: CumulativeCurve,
    ):
        if abs(initial.length - length) > 1e-12:
            raise ValueError("initial profile length disagrees with link length")
        if initial.max_density() > fd.k_jam + 1e-12:
            raise ValueError("initial density exceeds jam density")
        for name, curve in (("upstream", upstream), ("downstream", downstream)):
            if abs(curve.start_time) > 1e-12:
                raise ValueError(f"{name} curve must start at t = 0")
            ts, vs = curve.times(), curve.values()
            for i in range(1, len(ts)):
                slope = (vs[i] - vs[i - 1]) / (ts[i] - ts[i - 1])
                if slope > fd.capacity + 1e-9:
                    raise ValueError(
                        f"{name} curve slope {slope} exceeds capacity {fd.capacity}"
                    )
        if abs(upstream.start_value - initial.n_at(0.0)) > 1e-9:
            raise ValueError("upstream corner count disagrees with initial N(0)")
        if abs(downstream.start_value - initial.n_at(length)) > 1e-9:
            raise ValueError("downstream corner count disagrees with initial N(L)")
        self.fd = fd
        self.length = float(length)
        self.initial = initial
        self.upstream = upstream
        self.downstream = downstream
        self._checked_horizon = 0.0


def solve_interior(data: UDomainData, x: float, t: float, check: bool = True) -> float:
    """Cumulative flow A(x, t) from the smallest reachable candidate.

    Accepts x in [0, L] and t >= 0.  With ``check`` enabled the boundary data
    is feasibility-checked up to t (cached monotonically) and a
    FeasibilityError names the failed condition.
    """
    fd = data.fd
    length = data.length
    if x < -1e-12 or x > length + 1e-12:
        raise ValueError(f"position {x} outside [0, {length}]")
    x = min(max(x, 0.0), length)
    if t < 0:
        raise ValueError(f"time {t} negative")
    if t == 0:
        return data.initial.n_at(x)
    if check:
        ensure_feasible(data, t)

    best = data.initial.initial_candidate_min(
        fd, x, t, x - fd.v_free * t, x + fd.w_back * t
    )
    if fd.v_free * t >= x - CONE_TOL:
        tau = t - x / fd.v_free
        cand = data.upstream.value(max(tau, 0.0))
        if cand < best:
            best = cand
    back = (length - x) / fd.w_back
    if t >= back - CONE_TOL:
        cand = data.downstream.value(max(t - back, 0.0)) + (length - x) * fd.k_jam
        if cand < best:
            best = cand
    return best


def _condition_times(horizon, primary: CumulativeCurve, mapped_times, lo: float) -> list:
    """Check times for one condition: curve breakpoints, mapped breakpoints, ends."""
    ts = {lo, horizon}
    for t in primary.times():
        if lo <= t <= horizon:
            ts.add(t)
    for t in mapped_times:
        if lo <= t <= horizon:
            ts.add(t)
    return sorted(ts)


def check_feasible(data: UDomainData, horizon: float) -> list[FeasibilityViolation]:
    """All consistency violations of the boundary data up to ``horizon``.

    Piecewise-linear functions only need checking at breakpoints, so each
    condition is evaluated at its own breakpoints plus the other side's
    breakpoints mapped through the relevant shift.
    """
    fd = data.fd
    length = data.length
    up, down, init = data.upstream, data.downstream, data.initial
    free_time = length / fd.v_free
    back_time = length / fd.w_back
    violations: list[FeasibilityViolation] = []

    def check(condition, ts, lhs_fn, rhs_fn):
        for t in ts:
            lhs = lhs_fn(t)
            rhs = rhs_fn(t)
            if lhs > rhs + FEAS_TOL:
                violations.append(FeasibilityViolation(condition, t, lhs, rhs))

    # inflow may not exceed what the backward wave can clear from initial data
    h = min(horizon, back_time, up.end_time)
    if h >= 0:
        ts = _condition_times(
            h, up, [xb / fd.w_back for xb in init.interior_breakpoints()], 0.0
        )
        check(
            "inflow_exceeds_initial_storage",
            ts,
            up.value,
            lambda t: init.n_at(fd.w_back * t) + fd.k_jam * fd.w_back * t,
        )

    # outflow may not exceed the vehicles initially ahead of the free-flow wave
    h = min(horizon, free_time, down.end_time)
    if h >= 0:
        ts = _condition_times(
            h, down, [(length - xb) / fd.v_free for xb in init.interior_breakpoints()], 0.0
        )
        check(
            "outflow_exceeds_initial_vehicles",
            ts,
            down.value,
            lambda t: init.n_at(length - fd.v_free * t),
        )

    # inflow may not exceed delayed outflow plus full jam storage
    h = min(horizon, up.end_time, down.end_time + back_time)
    if h > back_time:
        ts = _condition_times(h, up, [s + back_time for s in down.times()], back_time)
        check(
            "inflow_exceeds_jam_storage",
            ts,
            up.value,
            lambda t: down.value(t - back_time) + fd.k_jam * length,
        )

    # FIFO: vehicles cannot exit before having entered a free-flow time earlier
    h = min(horizon, down.end_time, up.end_time + free_time)
    if h > free_time:
        ts = _condition_times(h, down, [s + free_time for s in up.times()], free_time)
        check(
            "outflow_exceeds_delayed_inflow",
            ts,
            down.value,
            lambda t: up.value(t - free_time),
        )

    violations.sort(key=lambda v: v.t)
    return violations


def ensure_feasible(data: UDomainData, horizon: float) -> None:
    """Raise FeasibilityError on the first violated condition up to horizon."""
    if horizon <= data._checked_horizon:
        return
    violations = check_feasible(data, horizon)
    if violations:
        raise FeasibilityError(
            f"boundary data infeasible: {violations[0]}"
            + (f" (+{len(violations) - 1} more)" if len(violations) > 1 else "")
        )
    data._checked_horizon = horizon


def reconstruct_field(data: UDomainData, x_grid, t_grid, check: bool = True) -> np.ndarray:
    """Density field k(x, t) on a grid via centred differences of the counts.

    Returns an array of shape (len(t_grid), len(x_grid)) clamped to
    [0, k_jam]; edge columns use one-sided differences.
    """
    xs = np.asarray(x_grid, dtype=float)
    ts = np.asarray(t_grid, dtype=float)
    if xs.size < 2:
        raise ValueError("x_grid needs at least two points")
    counts = np.empty((ts.size, xs.size))
    if check and ts.size:
        ensure_feasible(data, float(ts.max()))
    for i, t in enumerate(ts):
        for j, x in enumerate(xs):
            counts[i, j] = solve_interior(data, float(x), float(t), check=False)
    dens = -np.gradient(counts, xs, axis=1)
    return np.clip(dens, 0.0, data.fd.k_jam)
