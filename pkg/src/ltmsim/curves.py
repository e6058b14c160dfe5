"""Piecewise-linear cumulative count curves and piecewise-constant density profiles.

A :class:`CumulativeCurve` is the boundary trace of the cumulative-flow
surface along one edge of a link: a monotone nondecreasing piecewise-linear
function of time whose segment slopes are fluxes.  A :class:`DensityProfile`
is the initial condition of a link: piecewise-constant density on [0, L]
together with the implied initial cumulative count

    N(x) = N(0) - integral_0^x k(y) dy,

where N(0) is an arbitrary reference (counts only ever enter comparisons as
differences).
"""

from __future__ import annotations

from bisect import bisect_right

from .fundamental_diagram import TriangularFD

#: Looseness allowed when a query time sits just outside the recorded range.
TIME_SLACK = 1e-9
#: Two consecutive segment slopes closer than this collapse into one segment.
COMPACTION_SLOPE_TOL = 1e-12
#: Allowed violation of monotonicity / slope caps before raising.
VALUE_TOL = 1e-9


class CumulativeCurve:
    """Monotone nondecreasing piecewise-linear time series of a cumulative count.

    Values between samples interpolate linearly.  Queries outside the recorded
    time range raise ``ValueError``; there is no extrapolation.  Appending a
    sample that continues the previous slope (within ``COMPACTION_SLOPE_TOL``)
    replaces the last breakpoint, so long stationary stretches stay at two
    points regardless of step count.
    """

    __slots__ = ("_t", "_v", "max_slope")

    def __init__(self, times, values, max_slope: float | None = None):
        ts = [float(t) for t in times]
        vs = [float(v) for v in values]
        if len(ts) != len(vs) or not ts:
            raise ValueError("times and values must be equally sized and non-empty")
        self.max_slope = max_slope
        for i in range(1, len(ts)):
            dt = ts[i] - ts[i - 1]
            if dt <= 0:
                raise ValueError(f"times must strictly increase, got {ts[i - 1]} -> {ts[i]}")
            dv = vs[i] - vs[i - 1]
            if dv < -VALUE_TOL:
                raise ValueError(f"values must be nondecreasing, got {vs[i - 1]} -> {vs[i]}")
            if max_slope is not None and dv / dt > max_slope + VALUE_TOL:
                raise ValueError(f"segment slope {dv / dt} exceeds cap {max_slope}")
        self._t = ts
        self._v = vs

    @classmethod
    def constant(cls, value: float, t0: float = 0.0, max_slope: float | None = None):
        return cls([t0], [value], max_slope=max_slope)

    def __len__(self) -> int:
        return len(self._t)

    def __repr__(self) -> str:
        return (
            f"CumulativeCurve({len(self._t)} pts, t in "
            f"[{self._t[0]}, {self._t[-1]}], v in [{self._v[0]}, {self._v[-1]}])"
        )

    @property
    def start_time(self) -> float:
        return self._t[0]

    @property
    def end_time(self) -> float:
        return self._t[-1]

    @property
    def start_value(self) -> float:
        return self._v[0]

    @property
    def end_value(self) -> float:
        return self._v[-1]

    def times(self) -> tuple:
        return tuple(self._t)

    def values(self) -> tuple:
        return tuple(self._v)

    def copy(self) -> "CumulativeCurve":
        dup = CumulativeCurve.__new__(CumulativeCurve)
        dup._t = list(self._t)
        dup._v = list(self._v)
        dup.max_slope = self.max_slope
        return dup

    def value(self, t: float) -> float:
        """Interpolated count at time t; exact at breakpoints."""
        ts = self._t
        last = ts[-1]
        if t >= last:
            if t <= last + TIME_SLACK:
                return self._v[-1]
            raise ValueError(f"query time {t} beyond recorded range end {last}")
        first = ts[0]
        if t <= first:
            if t >= first - TIME_SLACK:
                return self._v[0]
            raise ValueError(f"query time {t} precedes recorded range start {first}")
        i = bisect_right(ts, t) - 1
        if ts[i] == t:
            return self._v[i]
        vs = self._v
        w = (t - ts[i]) / (ts[i + 1] - ts[i])
        return vs[i] + w * (vs[i + 1] - vs[i])

    def append(self, t: float, v: float) -> None:
        """Extend the curve by one sample, compacting colinear breakpoints."""
        ts, vs = self._t, self._v
        t = float(t)
        v = float(v)
        dt = t - ts[-1]
        if dt <= 0:
            raise ValueError(f"times must strictly increase, got {ts[-1]} -> {t}")
        if v < vs[-1] - VALUE_TOL:
            raise ValueError(f"values must be nondecreasing, got {vs[-1]} -> {v}")
        if v < vs[-1]:
            v = vs[-1]
        slope = (v - vs[-1]) / dt
        if self.max_slope is not None and slope > self.max_slope + VALUE_TOL:
            raise ValueError(f"segment slope {slope} exceeds cap {self.max_slope}")
        if len(ts) >= 2:
            prev = (vs[-1] - vs[-2]) / (ts[-1] - ts[-2])
            if abs(prev - slope) <= COMPACTION_SLOPE_TOL:
                ts[-1] = t
                vs[-1] = v
                return
        ts.append(t)
        vs.append(v)

    def segment_slope(self, t: float) -> float:
        """Right-continuous segment slope at time t (flux); 0 for a single point."""
        ts = self._t
        if len(ts) == 1:
            return 0.0
        if t >= ts[-1]:
            i = len(ts) - 2
        else:
            i = max(bisect_right(ts, t) - 1, 0)
            if i == len(ts) - 1:
                i -= 1
        return (self._v[i + 1] - self._v[i]) / (ts[i + 1] - ts[i])

    def inverse_rightmost(self, target: float) -> float:
        """Largest time at which the curve equals ``target``.

        On a flat stretch at ``target`` the right end of the stretch is
        returned.  A target above the recorded range returns the end time;
        a target below the recorded start raises ``ValueError``.
        """
        vs = self._v
        if target < vs[0] - VALUE_TOL:
            raise ValueError(f"target {target} below recorded range start {vs[0]}")
        if target >= vs[-1]:
            return self._t[-1]
        j = bisect_right(vs, target)
        # vs[j] > target >= vs[j - 1]; the segment j-1 -> j strictly increases
        # across the target, so interpolation lands on the rightmost crossing.
        ts = self._t
        w = (target - vs[j - 1]) / (vs[j] - vs[j - 1])
        return ts[j - 1] + w * (ts[j] - ts[j - 1])

    def prune(self, t_min: float) -> None:
        """Drop breakpoints strictly before the segment containing ``t_min``."""
        i = bisect_right(self._t, t_min) - 1
        if i > 0:
            del self._t[:i]
            del self._v[:i]


class DensityProfile:
    """Piecewise-constant initial density on [0, L] with its cumulative count.

    ``segments`` is a sequence of ``(x_start, density)`` pairs with the first
    start at 0 and starts strictly increasing below ``length``; each density
    holds from its start up to the next one (the last up to ``length``).
    """

    __slots__ = ("_x", "_k", "length", "n0", "_cum", "_regular_cache")

    def __init__(self, segments, length: float, n0: float = 0.0):
        if length <= 0:
            raise ValueError(f"length must be positive, got {length}")
        xs = [float(x) for x, _ in segments]
        ks = [float(k) for _, k in segments]
        if not xs or xs[0] != 0.0:
            raise ValueError("segments must start at x = 0")
        for i in range(1, len(xs)):
            if xs[i] <= xs[i - 1]:
                raise ValueError("segment starts must strictly increase")
        if xs[-1] >= length:
            raise ValueError("segment starts must lie below the link length")
        if any(k < 0 for k in ks):
            raise ValueError("densities must be nonnegative")
        self._x = xs
        self._k = ks
        self.length = float(length)
        self.n0 = float(n0)
        # cumulative vehicle count from 0 up to each segment start
        cum = [0.0]
        for i in range(1, len(xs)):
            cum.append(cum[-1] + ks[i - 1] * (xs[i] - xs[i - 1]))
        self._cum = cum
        self._regular_cache: dict[float, bool] = {}

    @classmethod
    def empty(cls, length: float, n0: float = 0.0) -> "DensityProfile":
        return cls([(0.0, 0.0)], length, n0)

    @classmethod
    def uniform(cls, density: float, length: float, n0: float = 0.0) -> "DensityProfile":
        return cls([(0.0, density)], length, n0)

    @classmethod
    def from_blocks(cls, blocks, length: float, n0: float = 0.0) -> "DensityProfile":
        """Build from ``{x0, x1, k}`` blocks; uncovered stretches default to 0."""
        spans = sorted(
            ((float(b["x0"]), float(b["x1"]), float(b["k"])) for b in blocks),
            key=lambda s: s[0],
        )
        segments: list[tuple[float, float]] = []
        cursor = 0.0
        for x0, x1, k in spans:
            if x0 < cursor - 1e-12:
                raise ValueError(f"overlapping initial blocks at x = {x0}")
            if not (0.0 <= x0 < x1 <= length + 1e-12):
                raise ValueError(f"initial block [{x0}, {x1}] outside [0, {length}]")
            if x0 > cursor:
                segments.append((cursor, 0.0))
            segments.append((x0, k))
            cursor = min(x1, length)
        if cursor < length:
            segments.append((cursor, 0.0))
        if not segments:
            segments = [(0.0, 0.0)]
        # merge zero-length artifacts and equal-density neighbours
        merged: list[tuple[float, float]] = []
        for x, k in segments:
            if merged and abs(merged[-1][1] - k) <= 0.0:
                continue
            if merged and x <= merged[-1][0]:
                continue
            merged.append((x, k))
        return cls(merged, length, n0)

    def segments(self) -> tuple:
        return tuple(zip(self._x, self._k))

    def interior_breakpoints(self) -> tuple:
        return tuple(self._x[1:])

    def density_at(self, x: float) -> float:
        """Density at position x (right-continuous; left-continuous at x = L)."""
        if x < -1e-12 or x > self.length + 1e-12:
            raise ValueError(f"position {x} outside [0, {self.length}]")
        x = min(max(x, 0.0), self.length)
        if x >= self.length:
            return self._k[-1]
        i = bisect_right(self._x, x) - 1
        if i < 0:
            i = 0
        return self._k[i]

    def vehicles_before(self, x: float) -> float:
        """Integral of density over [0, x]."""
        if x < -1e-12 or x > self.length + 1e-12:
            raise ValueError(f"position {x} outside [0, {self.length}]")
        x = min(max(x, 0.0), self.length)
        i = bisect_right(self._x, x) - 1
        if i < 0:
            i = 0
        return self._cum[i] + self._k[i] * (x - self._x[i])

    def total_vehicles(self) -> float:
        return self.vehicles_before(self.length)

    def n_at(self, x: float) -> float:
        """Initial cumulative count N(x) = N(0) - integral_0^x k."""
        return self.n0 - self.vehicles_before(x)

    def rebased(self, n0: float) -> "DensityProfile":
        """Copy with a different count reference N(0)."""
        return DensityProfile(self.segments(), self.length, n0)

    def max_density(self) -> float:
        return max(self._k)

    def is_regular(self, k_crit: float) -> bool:
        """True iff densities are uncongested on a prefix and congested after.

        Fully uncongested and fully congested profiles qualify; a congested
        stretch followed by an uncongested one (a transonic fan source) does
        not.
        """
        cached = self._regular_cache.get(k_crit)
        if cached is not None:
            return cached
        seen_congested = False
        regular = True
        for k in self._k:
            if k > k_crit:
                seen_congested = True
            elif seen_congested:
                regular = False
                break
        self._regular_cache[k_crit] = regular
        return regular

    def initial_candidate_min(
        self, fd: TriangularFD, x: float, t: float, y_lo: float, y_hi: float
    ) -> float:
        """Smallest initial-data candidate value over the reachable cone.

        Evaluates ``N(y) + t * capacity - (x - y) * k_crit`` at the cone
        endpoints and, for profiles with a congested-before-uncongested
        stretch, at every interior breakpoint inside the cone (for regular
        profiles the extremum provably sits at an endpoint).
        """
        lo = max(0.0, y_lo)
        hi = min(self.length, y_hi)
        if hi < lo:
            hi = lo
        base = fd.capacity * t - fd.k_crit * x
        kc = fd.k_crit
        best = self.n_at(lo) + base + kc * lo
        if hi > lo:
            cand = self.n_at(hi) + base + kc * hi
            if cand < best:
                best = cand
            if not self.is_regular(kc):
                for y in self._x[1:]:
                    if lo < y < hi:
                        cand = self.n_at(y) + base + kc * y
                        if cand < best:
                            best = cand
        return best
