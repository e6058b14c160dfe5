"""Junction models: critical demand level, flux bounds, invariance."""

import numpy as np
import pytest

from ltmsim import (
    JunctionSpec,
    check_invariance,
    critical_demand_level,
    evaluate_junction,
    invariant_fluxes,
    noninvariant_merge_fluxes,
)


def merge_spec(c1=1.0, c2=1.0, c3=1.0, model="invariant_fair"):
    return JunctionSpec(
        junction_id="m",
        in_ids=("1", "2"),
        in_capacities=(c1, c2),
        out_ids=("3",),
        out_capacities=(c3,),
        turns=((1.0,), (1.0,)),
        model=model,
    )


def diverge_spec(c0=3.0, c1=1.0, c2=2.0, xi=0.25):
    return JunctionSpec(
        junction_id="d",
        in_ids=("0",),
        in_capacities=(c0,),
        out_ids=("1", "2"),
        out_capacities=(c1, c2),
        turns=((xi, 1.0 - xi),),
    )


def linear_spec(c_in=1.0, c_out=1.0):
    return JunctionSpec(
        junction_id="l",
        in_ids=("a",),
        in_capacities=(c_in,),
        out_ids=("b",),
        out_capacities=(c_out,),
        turns=((1.0,),),
    )


class TestSpecValidation:
    def test_rows_must_sum_to_one(self):
        with pytest.raises(ValueError):
            JunctionSpec("j", ("a",), (1.0,), ("b", "c"), (1.0, 1.0), ((0.5, 0.4),))

    def test_noninvariant_requires_single_out(self):
        with pytest.raises(ValueError):
            JunctionSpec(
                "j",
                ("a",),
                (1.0,),
                ("b", "c"),
                (1.0, 1.0),
                ((0.5, 0.5),),
                model="noninvariant_fair_merge",
            )

    def test_in_degree_cap(self):
        n = 9
        with pytest.raises(ValueError):
            JunctionSpec(
                "j",
                tuple(str(i) for i in range(n)),
                (1.0,) * n,
                ("b",),
                (1.0,),
                ((1.0,),) * n,
            )


class TestCriticalDemandLevel:
    def test_contested_merge(self):
        # subsets: {1}: (1 - 1/4)/1, {2}: (1 - 1)/1, {1,2}: 1/2 -> 3/4
        theta = critical_demand_level(merge_spec(), [1.0, 0.25], [1.0])
        assert theta == pytest.approx(0.75)

    def test_uncontested_junction(self):
        theta = critical_demand_level(merge_spec(), [0.3, 0.25], [1.0])
        assert theta == pytest.approx(1.0)

    def test_diverge_closed_form(self):
        c0, xi = 3.0, 0.25
        s1, s2 = 1.0, 2.0
        theta = critical_demand_level(diverge_spec(c0=c0, xi=xi), [3.0], [s1, s2])
        expected = min(1.0, s1 / (c0 * xi), s2 / (c0 * (1 - xi)))
        assert theta == pytest.approx(expected)


class TestInvariantFluxes:
    def test_contested_merge_split(self):
        flows = invariant_fluxes(merge_spec(), [1.0, 0.25], [1.0])
        assert flows.g == pytest.approx((0.75, 0.25))
        assert flows.f == pytest.approx((1.0,))

    def test_linear_junction_takes_min(self):
        flows = invariant_fluxes(linear_spec(), [0.7], [0.4])
        assert flows.g == pytest.approx((0.4,))
        flows = invariant_fluxes(linear_spec(), [0.3], [0.9])
        assert flows.g == pytest.approx((0.3,))

    def test_diverge_example(self):
        # full upstream demand, binding second supply through the 8/9 level
        flows = invariant_fluxes(diverge_spec(), [3.0], [1.0, 2.0])
        assert flows.theta == pytest.approx(8.0 / 9.0)
        g0 = 3.0 * 8.0 / 9.0
        assert flows.g == pytest.approx((g0,))
        assert flows.f == pytest.approx((0.25 * g0, 0.75 * g0))
        assert flows.f[0] == pytest.approx(2.0 / 3.0)
        assert flows.f[1] == pytest.approx(2.0)

    def test_commodity_split(self):
        flows = invariant_fluxes(
            merge_spec(), [1.0, 0.25], [1.0],
            commodity_shares=({"a": 0.4, "b": 0.6}, {"a": 1.0}),
        )
        assert flows.g_commodity[0]["a"] == pytest.approx(0.3)
        assert flows.g_commodity[0]["b"] == pytest.approx(0.45)
        assert flows.g_commodity[1]["a"] == pytest.approx(0.25)


class TestNoninvariantMerge:
    def test_proportional_split(self):
        flows = noninvariant_merge_fluxes(
            merge_spec(model="noninvariant_fair_merge"), [1.0, 0.25], [1.0]
        )
        assert flows.g == pytest.approx((0.8, 0.2))

    def test_zero_demand(self):
        flows = noninvariant_merge_fluxes(
            merge_spec(model="noninvariant_fair_merge"), [0.0, 0.0], [1.0]
        )
        assert flows.g == pytest.approx((0.0, 0.0))

    def test_unconstrained_serves_all(self):
        flows = noninvariant_merge_fluxes(
            merge_spec(model="noninvariant_fair_merge"), [0.3, 0.25], [1.0]
        )
        assert flows.g == pytest.approx((0.3, 0.25))


class TestInvariance:
    def test_invariant_model_passes(self):
        assert check_invariance(merge_spec(), [1.0, 0.25], [1.0])

    def test_noninvariant_model_fails(self):
        assert not check_invariance(
            merge_spec(model="noninvariant_fair_merge"), [1.0, 0.25], [1.0]
        )

    def test_unconstrained_junction_always_invariant(self):
        assert check_invariance(merge_spec(), [0.3, 0.2], [1.0])
        assert check_invariance(
            merge_spec(model="noninvariant_fair_merge"), [0.3, 0.2], [1.0]
        )


def random_junction(rng, model="invariant_fair"):
    n_in = int(rng.integers(1, 5))
    n_out = 1 if model == "noninvariant_fair_merge" else int(rng.integers(1, 5))
    c_in = tuple(float(c) for c in rng.uniform(0.5, 3.0, n_in))
    c_out = tuple(float(c) for c in rng.uniform(0.5, 3.0, n_out))
    turns = []
    for _ in range(n_in):
        w = rng.uniform(0.0, 1.0, n_out)
        if rng.uniform() < 0.3 and n_out > 1:
            w[rng.integers(0, n_out)] = 0.0
        if w.sum() == 0:
            w[0] = 1.0
        turns.append(tuple(float(x) for x in w / w.sum()))
    spec = JunctionSpec("r", tuple(map(str, range(n_in))), c_in,
                        tuple(f"o{j}" for j in range(n_out)), c_out, tuple(turns),
                        model=model)
    demands = [float(rng.uniform(0.0, c)) for c in c_in]
    supplies = [float(rng.uniform(0.0, 3.0)) for _ in range(n_out)]
    return spec, demands, supplies


class TestRandomJunctionProperties:
    def test_bounds_conservation_fifo_and_invariance(self):
        rng = np.random.default_rng(2024)
        for _ in range(300):
            spec, demands, supplies = random_junction(rng)
            flows = evaluate_junction(spec, demands, supplies)
            for g, d in zip(flows.g, demands):
                assert -1e-12 <= g <= d + 1e-9
            for f, s in zip(flows.f, supplies):
                assert -1e-12 <= f <= s + 1e-9
            assert sum(flows.g) == pytest.approx(sum(flows.f), abs=1e-9)
            for j in range(len(spec.out_ids)):
                fifo = sum(flows.g[i] * spec.turns[i][j] for i in range(len(flows.g)))
                assert flows.f[j] == pytest.approx(fifo, abs=1e-9)
            assert check_invariance(spec, demands, supplies)

    def test_merge_agrees_with_closed_form(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            c1, c2 = rng.uniform(0.5, 3.0, 2)
            s3 = float(rng.uniform(0.0, 4.0))
            d1 = float(rng.uniform(0.0, c1))
            d2 = float(rng.uniform(0.0, c2))
            spec = merge_spec(c1=float(c1), c2=float(c2), c3=4.0)
            flows = invariant_fluxes(spec, [d1, d2], [s3])
            nu = c1 / (c1 + c2)
            g1 = min(d1, max(s3 - d2, nu * s3))
            g2 = min(d2, max(s3 - d1, (1 - nu) * s3))
            assert flows.g[0] == pytest.approx(g1, abs=1e-9)
            assert flows.g[1] == pytest.approx(g2, abs=1e-9)

    def test_monotone_in_demands_and_supplies(self):
        rng = np.random.default_rng(9)
        for _ in range(150):
            spec, demands, supplies = random_junction(rng)
            base = evaluate_junction(spec, demands, supplies)
            i = int(rng.integers(0, len(demands)))
            bumped = list(demands)
            bumped[i] = min(spec.in_capacities[i], bumped[i] + 0.2)
            more = evaluate_junction(spec, bumped, supplies)
            assert more.g[i] >= base.g[i] - 1e-9
            j = int(rng.integers(0, len(supplies)))
            s_up = list(supplies)
            s_up[j] += 0.3
            more_s = evaluate_junction(spec, demands, s_up)
            for a, b in zip(more_s.g, base.g):
                assert a >= b - 1e-9
