"""Macroscopic junction models mapping demands and supplies to boundary fluxes.

The workhorse is the fair-merge / FIFO-diverge model: a critical demand level
theta is found by a min-max search over approach subsets, upstream links send
min(demand, theta * capacity), and every downstream link receives the
turning-weighted sum of the sends.  The model is invariant: replaying it with
unserved demands relaxed to capacity and slack supplies relaxed to capacity
reproduces the same fluxes.  A demand-proportional merge is included as the
standard non-invariant counterexample.

All functions are pure; junctions within one simulation step may be evaluated
in parallel against a frozen demand/supply snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import DegenerateTurningError

#: Junction in-degree limit; theta enumeration is exponential in it.
MAX_IN_DEGREE = 8
#: Tolerance on turning-matrix row sums.
TURN_TOL = 1e-9
#: Tolerance used when comparing produced fluxes against bounds.
FLUX_TOL = 1e-9

INVARIANT_FAIR = "invariant_fair"
NONINVARIANT_FAIR_MERGE = "noninvariant_fair_merge"
MODELS = (INVARIANT_FAIR, NONINVARIANT_FAIR_MERGE)


@dataclass(frozen=True)
class JunctionSpec:
    """Static description of one junction.

    ``turns[i][j]`` is the proportion of link ``in_ids[i]`` traffic headed to
    ``out_ids[j]``; every row sums to one.
    """

    junction_id: str
    in_ids: tuple
    in_capacities: tuple
    out_ids: tuple
    out_capacities: tuple
    turns: tuple
    model: str = INVARIANT_FAIR

    def __post_init__(self):
        n_in, n_out = len(self.in_ids), len(self.out_ids)
        if n_in == 0 or n_out == 0:
            raise ValueError(f"junction {self.junction_id}: needs ports on both sides")
        if n_in > MAX_IN_DEGREE:
            raise ValueError(
                f"junction {self.junction_id}: in-degree {n_in} exceeds {MAX_IN_DEGREE}"
            )
        if len(self.in_capacities) != n_in or len(self.out_capacities) != n_out:
            raise ValueError(f"junction {self.junction_id}: capacity list sizes disagree")
        if any(c <= 0 for c in self.in_capacities + self.out_capacities):
            raise ValueError(f"junction {self.junction_id}: capacities must be positive")
        if self.model not in MODELS:
            raise ValueError(f"junction {self.junction_id}: unknown model {self.model!r}")
        if self.model == NONINVARIANT_FAIR_MERGE and n_out != 1:
            raise ValueError(
                f"junction {self.junction_id}: {self.model} requires a single outgoing link"
            )
        if len(self.turns) != n_in:
            raise ValueError(f"junction {self.junction_id}: turning matrix needs one row per approach")
        for i, row in enumerate(self.turns):
            if len(row) != n_out:
                raise ValueError(f"junction {self.junction_id}: turning row {i} has wrong width")
            if any(p < -TURN_TOL or p > 1 + TURN_TOL for p in row):
                raise ValueError(f"junction {self.junction_id}: turning proportions outside [0, 1]")
            if abs(sum(row) - 1.0) > TURN_TOL:
                raise ValueError(
                    f"junction {self.junction_id}: turning row for {self.in_ids[i]} sums to {sum(row)}"
                )

    def with_turns(self, turns) -> "JunctionSpec":
        return replace(self, turns=tuple(tuple(row) for row in turns))


@dataclass(frozen=True)
class JunctionFlows:
    """Resolved boundary fluxes at one junction for one instant."""

    theta: float
    g: tuple  # out-flux per incoming link
    f: tuple  # in-flux per outgoing link
    g_commodity: tuple | None = None  # per incoming link: {commodity: flux}

    def total(self) -> float:
        return sum(self.g)


def _validated(spec: JunctionSpec, demands, supplies):
    demands = [float(d) for d in demands]
    supplies = [float(s) for s in supplies]
    if len(demands) != len(spec.in_ids) or len(supplies) != len(spec.out_ids):
        raise ValueError(f"junction {spec.junction_id}: demand/supply sizes disagree")
    for i, d in enumerate(demands):
        if d < -FLUX_TOL or d > spec.in_capacities[i] + FLUX_TOL:
            raise ValueError(
                f"junction {spec.junction_id}: demand {d} of {spec.in_ids[i]} outside "
                f"[0, {spec.in_capacities[i]}]"
            )
        demands[i] = min(max(d, 0.0), spec.in_capacities[i])
    for j, s in enumerate(supplies):
        if s < -FLUX_TOL:
            raise ValueError(f"junction {spec.junction_id}: negative supply {s}")
        supplies[j] = max(s, 0.0)
    return demands, supplies


def critical_demand_level(spec: JunctionSpec, demands, supplies) -> float:
    """Critical demand level theta in [0, 1].

    For every outgoing link, the binding constraint is the best case over
    non-empty approach subsets sending at theta * capacity while the rest
    send their full demand; theta is the worst such constraint across
    outgoing links, capped at 1.  Subsets with zero turning capacity are
    skipped; an outgoing link receiving no turning flow imposes no
    constraint.
    """
    demands, supplies = _validated(spec, demands, supplies)
    n = len(demands)
    caps = spec.in_capacities
    theta = 1.0
    for j, s_b in enumerate(supplies):
        col = [spec.turns[i][j] for i in range(n)]
        turned_demand = sum(d * c for d, c in zip(demands, col))
        if all(caps[i] * col[i] <= 0.0 for i in range(n)):
            if s_b < turned_demand - FLUX_TOL:
                raise DegenerateTurningError(
                    f"junction {spec.junction_id}: outgoing {spec.out_ids[j]} is "
                    "supply-constrained but no approach turns toward it"
                )
            continue
        best = None
        for mask in range(1, 1 << n):
            denom = 0.0
            num = s_b
            for i in range(n):
                if mask >> i & 1:
                    denom += caps[i] * col[i]
                else:
                    num -= demands[i] * col[i]
            if denom <= 0.0:
                continue
            ratio = num / denom
            if best is None or ratio > best:
                best = ratio
        if best is not None and best < theta:
            theta = best
    return min(1.0, max(0.0, theta))


def invariant_fluxes(spec: JunctionSpec, demands, supplies, commodity_shares=None) -> JunctionFlows:
    """Fluxes of the invariant fair-merge / FIFO-diverge model.

    ``commodity_shares`` optionally carries one mapping per incoming link
    giving the commodity composition of its out-flux; the resulting
    per-commodity fluxes are returned verbatim scaled by the link flux.
    """
    demands, supplies = _validated(spec, demands, supplies)
    theta = critical_demand_level(spec, demands, supplies)
    g = tuple(
        min(d, theta * c) for d, c in zip(demands, spec.in_capacities)
    )
    f = []
    for j in range(len(spec.out_ids)):
        fb = sum(g[i] * spec.turns[i][j] for i in range(len(g)))
        if fb > supplies[j] + 1e-6 * (1.0 + supplies[j]):
            raise RuntimeError(
                f"junction {spec.junction_id}: computed in-flux {fb} exceeds supply "
                f"{supplies[j]} of {spec.out_ids[j]}"
            )
        f.append(min(fb, supplies[j]))
    g_comm = _commodity_fluxes(g, commodity_shares)
    return JunctionFlows(theta=theta, g=g, f=tuple(f), g_commodity=g_comm)


def noninvariant_merge_fluxes(spec: JunctionSpec, demands, supplies, commodity_shares=None) -> JunctionFlows:
    """Demand-proportional merge: each approach gets its share of min(total demand, supply)."""
    if len(spec.out_ids) != 1:
        raise ValueError(f"junction {spec.junction_id}: merge model needs one outgoing link")
    demands, supplies = _validated(spec, demands, supplies)
    total = sum(demands)
    s = supplies[0]
    if total <= 0.0:
        g = tuple(0.0 for _ in demands)
        return JunctionFlows(theta=1.0, g=g, f=(0.0,), g_commodity=_commodity_fluxes(g, commodity_shares))
    served = min(total, s)
    g = tuple(d / total * served for d in demands)
    return JunctionFlows(
        theta=min(1.0, served / total),
        g=g,
        f=(sum(g),),
        g_commodity=_commodity_fluxes(g, commodity_shares),
    )


def _commodity_fluxes(g, commodity_shares):
    if commodity_shares is None:
        return None
    return tuple(
        {p: g_i * share for p, share in shares.items()}
        for g_i, shares in zip(g, commodity_shares)
    )


def evaluate_junction(spec: JunctionSpec, demands, supplies, commodity_shares=None) -> JunctionFlows:
    """Dispatch to the junction model named in the spec."""
    if spec.model == INVARIANT_FAIR:
        return invariant_fluxes(spec, demands, supplies, commodity_shares)
    return noninvariant_merge_fluxes(spec, demands, supplies, commodity_shares)


def check_invariance(spec: JunctionSpec, demands, supplies, tol: float = 1e-12) -> bool:
    """Fixed-point test of the model under relaxed arguments.

    Approaches whose demand was not fully served have their demand relaxed to
    capacity (served ones keep the served flux); outgoing links with slack
    supply have it relaxed to capacity (binding ones keep the realised flux).
    Returns True iff re-evaluation reproduces the fluxes within ``tol``.
    """
    demands, supplies = _validated(spec, demands, supplies)
    base = evaluate_junction(spec, demands, supplies)
    relaxed_d = [
        spec.in_capacities[i] if base.g[i] < demands[i] - tol else base.g[i]
        for i in range(len(demands))
    ]
    relaxed_s = [
        spec.out_capacities[j] if base.f[j] < supplies[j] - tol else base.f[j]
        for j in range(len(supplies))
    ]
    again = evaluate_junction(spec, relaxed_d, relaxed_s)
    dev = max(
        max(abs(a - b) for a, b in zip(base.g, again.g)),
        max(abs(a - b) for a, b in zip(base.f, again.f)),
    )
    return dev <= tol
