import math

import numpy as np
import pytest

from tentlab.disc import carleson
from tentlab.disc.analytic import PeakFunction
from tentlab.disc.carleson import (
    ConditionReport,
    ConditionValue,
    Verdict,
    condition_quantities,
    counterexample_scan,
    default_family,
    embedding_constant,
    level_set_ratio,
    maximal_tent_levels,
    phi_norm,
    verdict,
)
from tentlab.disc.grid import PolarGrid
from tentlab.disc.measure import lattice, weighted, zero_measure
from tentlab.disc.weights import StandardWeight, constant, log_weight

DEPTHS = (3, 4, 5)


@pytest.fixture(scope="module")
def grid():
    return PolarGrid(4)


@pytest.fixture(scope="module")
def mu(grid):
    return lattice(0.5, 2 * grid.outer_defect, np.random.default_rng(17)).measure()


class TestConditionValue:
    @pytest.mark.parametrize(
        "values,expected",
        [
            ((1.0, 1.1, 1.2), Verdict.BOUNDED),
            ((1.0, 2.0, 4.0), Verdict.DIVERGING),
            ((1.0, 2.0, 2.0), Verdict.INCONCLUSIVE),
            ((0.0, 0.0, 0.0), Verdict.BOUNDED),
            ((0.0, 1.0, 2.0), Verdict.DIVERGING),
            ((1.0, 5.0), Verdict.INCONCLUSIVE),
        ],
    )
    def test_verdict(self, values, expected):
        depths = tuple(range(len(values)))
        assert ConditionValue("x", depths, values).verdict is expected

    @pytest.mark.parametrize(
        "values",
        [(math.nan, math.nan, math.nan), (1.0, math.nan, 1.0), (1.0, 1.0, math.inf)],
    )
    def test_non_finite_is_inconclusive(self, values):
        assert ConditionValue("x", (1, 2, 3), values).verdict is Verdict.INCONCLUSIVE

    def test_trend(self):
        assert ConditionValue("x", (1, 2, 3), (2.0, 3.0, 0.0)).trend == (1.5, 0.0)

    def test_as_dict(self):
        document = ConditionValue("x", (1, 2, 3), (1.0, 1.0, 1.0)).as_dict()
        assert document["verdict"] == "bounded"
        assert document["trend"] == [1.0, 1.0]

    def test_report(self):
        report = ConditionReport("q=p", (ConditionValue("a", (1,), (1.0,)),))
        assert report["a"].values == (1.0,)
        assert report.names() == ["a"]
        with pytest.raises(KeyError):
            report["b"]


class TestRegimes:
    @pytest.mark.parametrize(
        "p,q,n,regime,names",
        [
            (2.0, 1.0, 0, "q<p", ["B", "Psi", "M"]),
            (2.0, 2.0, 0, "q=p", ["M_sup", "delta"]),
            (1.0, 2.0, 0, "q>p", ["M_sup", "delta"]),
            (1.0, 2.0, 1, "sup", ["square", "delta"]),
            (2.0, 2.0, 1, "sup", ["square", "delta"]),
            (3.0, 1.0, 1, "i", ["Phi_i"]),
            (1.5, 1.5, 1, "ii", ["Phi_ii"]),
            (4.0, 2.0, 1, "iii", ["Phi_iii"]),
        ],
    )
    def test_zero_measure(self, p, q, n, regime, names):
        report = condition_quantities(zero_measure(), constant, p, q, n, depths=DEPTHS)
        assert report.regime == regime
        assert report.names() == names
        for condition in report.conditions:
            assert condition.values == (0.0, 0.0, 0.0)
            assert condition.verdict is Verdict.BOUNDED

    def test_workers(self, mu):
        serial = condition_quantities(mu, constant, 2.0, 2.0, depths=DEPTHS)
        threaded = condition_quantities(
            mu, constant, 2.0, 2.0, depths=DEPTHS, workers=3
        )
        assert serial.as_dict() == threaded.as_dict()

    def test_depth_callable(self):
        report = condition_quantities(
            lambda depth: weighted(constant, PolarGrid(depth)),
            constant,
            2.0,
            2.0,
            depths=DEPTHS,
        )
        assert report["M_sup"].values == pytest.approx((1.0, 1.0, 1.0))
        assert report["M_sup"].verdict is Verdict.BOUNDED

    def test_lower_regime_positive(self, mu):
        report = condition_quantities(mu, StandardWeight(1.0), 2.0, 1.0, depths=DEPTHS)
        for condition in report.conditions:
            assert all(value > 0 for value in condition.values)


class TestPhiNorm:
    def test_case_mismatch(self):
        with pytest.raises(ValueError):
            phi_norm(zero_measure(), constant, 2.0, 1.0, 1, case="ii")

    def test_positive(self, mu, grid):
        assert phi_norm(mu, constant, 3.0, 1.0, 1, grid=grid) > 0
        assert phi_norm(mu, constant, 1.5, 1.5, 1, grid=grid) > 0


class TestEmbedding:
    def test_zero(self, grid):
        family = [PeakFunction(0.5, 2.0, 3.0, 1.0)]
        value = embedding_constant(zero_measure(), constant, 2.0, 2.0, 0, family, grid)
        assert value == 0.0

    def test_weighted_measure(self, grid):
        weight = StandardWeight(1.0)
        rng = np.random.default_rng(0)
        family = default_family(
            weight, 2.0, rng, radii=(0.5,), angles=2, combinations=1
        )
        assert len(family) == 3
        mu = weighted(weight, grid)
        value = embedding_constant(mu, weight, 2.0, 2.0, 0, family, grid)
        assert value == pytest.approx(1.0)

    def test_verdict_table(self):
        table = verdict(
            lambda depth: weighted(constant, PolarGrid(depth)),
            constant,
            2.0,
            2.0,
            0,
            np.random.default_rng(1),
            depths=DEPTHS,
            family=[
                PeakFunction(0.5, 2.0, 3.0, 1.0),
                PeakFunction(-0.8j, 2.0, 3.0, 1.0),
            ],
        )
        assert table.embedding.values == pytest.approx((1.0, 1.0, 1.0))
        assert table.embedding.verdict is Verdict.BOUNDED
        assert table.flags == []
        ratios = [row["ratio"] for row in table.brackets if row["condition"] == "M_sup"]
        assert ratios == pytest.approx([1.0, 1.0, 1.0])
        assert set(table.as_dict()) == {"conditions", "embedding", "brackets", "flags"}


class TestVerdictConsistency:
    @pytest.mark.parametrize("p,q", [(2.0, 1.0), (2.0, 2.0), (1.0, 2.0)])
    @pytest.mark.parametrize("n", [0, 1])
    def test_no_opposite_verdicts(self, p, q, n):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            # inside the coarsest grid, so no depth adds mass
            mu = lattice(rng.uniform(0.4, 0.7), 0.2, rng).measure()
            family = default_family(
                constant, p, rng, radii=(0.5, 0.75), angles=2, combinations=1
            )
            table = verdict(mu, constant, p, q, n, rng, depths=DEPTHS, family=family)
            assert table.flags == [], f"lattice {seed}"
            assert all(value > 0 for value in table.embedding.values)


class TestCounterexample:
    def test_split(self):
        report = counterexample_scan(log_weight)
        assert report["square"].verdict is Verdict.DIVERGING
        assert report["delta"].verdict is Verdict.BOUNDED
        for condition in report.conditions:
            assert all(map(math.isfinite, condition.values))

    def test_square_doubles(self):
        # the sup grows like 1 + depth log 2
        squares = counterexample_scan(log_weight, depths=(6, 16, 40))["square"]
        assert all(ratio >= 2 for ratio in squares.trend)

    def test_non_finite_masses(self, monkeypatch):
        monkeypatch.setattr(carleson, "maximal_sup", lambda *args, **kw: math.nan)
        with pytest.raises(ArithmeticError):
            counterexample_scan(log_weight)


class TestLevelSets:
    def test_ratio(self, mu, grid):
        F = PeakFunction(0.7, 2.0, 3.0, 1.0)
        result = level_set_ratio(mu, constant, 2.0, 2.0, F, 0.1, grid)
        assert result["lhs"] > 0
        assert 0 < result["ratio"] < math.inf

    def test_empty_level(self, mu, grid):
        F = PeakFunction(0.7, 2.0, 3.0, 1.0)
        result = level_set_ratio(mu, constant, 2.0, 2.0, F, 1e9, grid)
        assert result["ratio"] == 1.0

    def test_maximal_tents(self, mu, grid):
        values, levels = maximal_tent_levels(mu, constant, grid)
        assert levels
        assert np.all(values >= 0)
        for level in levels:
            np.testing.assert_array_equal(level.union, level.cells)
            assert len(level.tents) == len(level.members)
            for members, remainder in zip(level.members, level.remainders):
                assert np.all(members[remainder])

    def test_zero(self, grid):
        values, levels = maximal_tent_levels(zero_measure(), constant, grid)
        assert levels == []
        assert not np.any(values)
