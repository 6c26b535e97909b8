import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tentlab.disc.geometry import lens_matrix
from tentlab.disc.grid import PolarGrid
from tentlab.disc.measure import hyperbolic, lattice, points, zero_measure
from tentlab.disc.tent import (
    NormMode,
    TentFunction,
    TentSpace,
    area_function,
    c_function,
    cone_kernel_ratio,
    holder_bound,
    luecking_select,
    mixed_norm,
    p0_average,
    pairing,
    sequence_pairing_bound,
    stopping_time,
    tent_norm,
    weak_estimate,
    weak_estimate_p_gt_q,
)
from tentlab.disc.weights import StandardWeight, constant, log_weight


@pytest.fixture(scope="module")
def grid():
    return PolarGrid(4)


@pytest.fixture(scope="module")
def space(grid):
    sequence = lattice(0.5, grid.outer_defect, np.random.default_rng(21))
    return TentSpace.from_sequence(sequence, StandardWeight(1.0), grid)


KERNEL_WEIGHTS = [constant, StandardWeight(1.0), log_weight]


def random_function(space, seed):
    rng = np.random.default_rng(seed)
    size = space.points.size
    values = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return TentFunction(space, values)


class TestTentFunction:
    def test_shape(self, space):
        with pytest.raises(ValueError):
            TentFunction(space, np.zeros(3))

    def test_finite(self, space):
        values = np.zeros(space.points.size)
        values[0] = math.nan
        with pytest.raises(ValueError):
            TentFunction(space, values)

    def test_arithmetic(self, space):
        f = random_function(space, 1)
        np.testing.assert_allclose((abs(f) * 2).values, 2 * np.abs(f.values))
        np.testing.assert_allclose((f * f).values, f.values**2)

    def test_other_support(self, space, grid):
        other = TentSpace(points([(0.5, 1.0)]), constant, grid)
        with pytest.raises(ValueError):
            pairing(space.zeros(), other.zeros())


class TestFubini:
    @pytest.mark.parametrize("q", [0.5, 1.0, 2.0, 3.0])
    def test_identity(self, space, q):
        f = random_function(space, 2)
        lhs = (space.cell_weights * space.area_values(f, q) ** q).sum()
        rhs = (np.abs(f.values) ** q * space.tent_masses * space.masses).sum()
        assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_hyperbolic_space(self, grid):
        space = TentSpace(hyperbolic(grid.outer_defect), constant, grid)
        f = space.sample(np.abs)
        lhs = (space.cell_weights * space.area_values(f, 2.0) ** 2).sum()
        rhs = (np.abs(f.values) ** 2 * space.tent_masses * space.masses).sum()
        assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_tent_masses_are_cell_sums(self, space):
        assert np.all(space.tent_masses >= 0)
        assert np.any(space.tent_masses > 0)


class TestFunctionals:
    def test_area_at_cells(self, space, grid):
        f = random_function(space, 3)
        expected = space.area_values(f, 2.0)
        np.testing.assert_allclose(area_function(f, 2.0, grid.points), expected)

    def test_area_truncation(self, space, grid):
        f = random_function(space, 3)
        assert np.all(area_function(f, 2.0, grid.points, h=0.0) == 0)
        full = area_function(f, 2.0, grid.points)
        np.testing.assert_allclose(area_function(f, 2.0, grid.points, h=math.inf), full)
        assert np.all(area_function(f, 2.0, grid.points, h=0.5) <= full + 1e-12)

    def test_area_sup(self, space, grid):
        f = random_function(space, 4)
        values = area_function(f, math.inf, grid.points)
        assert values.max() <= np.abs(f.values).max()

    def test_origin(self, space):
        with pytest.raises(ValueError):
            area_function(space.zeros(), 2.0, 0.0)

    def test_c_at_cells(self, space, grid):
        f = random_function(space, 5)
        expected = space.c_values(f, 2.0)
        np.testing.assert_allclose(c_function(f, 2.0, grid.points), expected)

    def test_zero(self, space):
        assert tent_norm(space.zeros(), 2.0, 2.0) == 0.0
        assert tent_norm(space.zeros(), math.inf, 2.0) == 0.0

    def test_area_norm_needs_finite_p(self, space):
        with pytest.raises(ValueError):
            tent_norm(space.zeros(), math.inf, 2.0, NormMode.A)

    def test_homogeneity(self, space):
        f = random_function(space, 6)
        assert tent_norm(3 * f, 2.0, 1.0) == pytest.approx(3 * tent_norm(f, 2.0, 1.0))
        expected = 3 * tent_norm(f, math.inf, 2.0)
        assert tent_norm(3 * f, math.inf, 2.0) == pytest.approx(expected)

    def test_mixed_norm(self, space, grid):
        g = np.ones((space.points.size, len(grid)))
        expected = space.masses.sum() ** 0.5 * space.cell_weights.sum() ** 0.5
        assert mixed_norm(space, g, 2.0, 2.0) == pytest.approx(expected)
        assert mixed_norm(space, g, math.inf, math.inf) == pytest.approx(1.0)


class TestPairing:
    @pytest.mark.parametrize("p,q", [(2.0, 2.0), (1.5, 1.0), (3.0, 4.0), (4.0, 1.5)])
    def test_holder(self, space, p, q):
        bound = holder_bound(random_function(space, 7), random_function(space, 8), p, q)
        assert bound.holds
        assert 0 < bound.ratio <= 1 + 1e-12

    @pytest.mark.parametrize("p,q", [(2.0, 0.5), (1.5, 0.3), (4.0, 0.9)])
    def test_sequence_pairing(self, space, p, q):
        f, g = random_function(space, 9), random_function(space, 10)
        bound = sequence_pairing_bound(f, g, p, q)
        assert bound.holds

    def test_exponent_ranges(self, space):
        f = space.zeros()
        with pytest.raises(ValueError):
            holder_bound(f, f, 1.0, 2.0)
        with pytest.raises(ValueError):
            sequence_pairing_bound(f, f, 2.0, 1.0)

    def test_unit_masses(self, grid):
        space = TentSpace(points([(0.5, 2.0)]), constant, grid)
        with pytest.raises(ValueError):
            sequence_pairing_bound(space.zeros(), space.zeros(), 2.0, 0.5)

    def test_pairing_is_sesquilinear(self, space):
        f, g = random_function(space, 11), random_function(space, 12)
        assert pairing(2j * f, g) == pytest.approx(2j * pairing(f, g))


class TestStoppingTime:
    @pytest.mark.parametrize("seed", range(50))
    def test_coverage(self, grid, seed):
        rng = np.random.default_rng(seed)
        sequence = lattice(rng.uniform(0.4, 0.7), grid.outer_defect, rng)
        space = TentSpace.from_sequence(sequence, StandardWeight(1.0), grid)
        g = random_function(space, 100 + seed)
        profile = stopping_time(g, 2.0)
        assert profile.C3 > 0
        assert profile.C1 == pytest.approx((4 * profile.C3) ** 0.5)
        # w(T(z) - H(z)) <= C3 / C1^2 w(T(z)) off the cells with C = 0
        degenerate = (profile.c_values == 0) & (profile.h == 0)
        tents = lens_matrix(grid.points, grid.points, space.aperture)
        masses = space.cell_weights @ tents
        lost = (space.cell_weights * degenerate) @ tents
        valid = masses > 0
        bound = 1 - profile.C3 / profile.C1**2 - lost[valid] / masses[valid]
        assert np.all(profile.coverage[valid] >= bound - 1e-9)
        if not degenerate.any():
            assert np.all(profile.coverage[valid] >= 0.75 - 1e-9)
            assert profile.covered()

    def test_truncated_below_bound(self, space):
        g = random_function(space, 13)
        profile = stopping_time(g, 2.0)
        assert np.all(profile.truncated <= profile.C1 * profile.c_values * (1 + 1e-9))

    def test_zero(self, space):
        profile = stopping_time(space.zeros(), 2.0)
        assert np.all(np.isinf(profile.h))


class TestAverages:
    def test_p0_of_constant(self, grid):
        value = p0_average(lambda z, zeta: np.ones(zeta.shape), constant, 0.5, grid)
        assert value == pytest.approx(1.0)

    def test_p0_empty_tent(self, grid):
        with pytest.raises(ValueError):
            p0_average(lambda z, zeta: np.ones(zeta.shape), constant, 0.9999, grid)

    def test_space_p0(self, space, grid):
        averages = space.p0(np.ones((space.points.size, len(grid))))
        charged = space.tent_masses > 0
        np.testing.assert_allclose(averages[charged], 1.0)
        assert np.all(averages[~charged] == 0)


class TestConeKernel:
    def test_zero_measure(self, grid):
        space = TentSpace(zero_measure(), constant, grid)
        assert cone_kernel_ratio(space, 2.0, 3.0)["ratio"] == 1.0

    @pytest.mark.parametrize("lam", [2.0, 3.0, 5.0])
    def test_lattice(self, space, lam):
        result = cone_kernel_ratio(space, 2.0, lam)
        assert result["lhs"] > 0 and result["rhs"] > 0
        assert math.isfinite(result["ratio"])

    def test_origin_counts_once(self, grid):
        space = TentSpace(points([(0, 1.0)]), constant, grid)
        result = cone_kernel_ratio(space, 2.0, 3.0)
        assert result["rhs"] == 1.0

    @pytest.mark.parametrize("weight", KERNEL_WEIGHTS, ids=repr)
    @pytest.mark.parametrize("seed", range(50))
    def test_bracket(self, grid, weight, seed, brackets):
        rng = np.random.default_rng(seed)
        sequence = lattice(rng.uniform(0.4, 0.7), 2 * grid.outer_defect, rng)
        space = TentSpace.from_sequence(sequence, weight, grid)
        lambda0 = weight.certificate.lambda0
        for p in (1.0, 2.0):
            ratios = []
            for shift in (1, 2, 4):
                lam = lambda0 + shift
                ratio = cone_kernel_ratio(space, p, lam)["ratio"]
                # the kernel is at least 1 / (2 + aperture) on the lens
                low = (2 + space.aperture) ** (-lam * p)
                assert low <= ratio * (1 + 1e-12)
                assert ratio <= brackets["cone_kernel"]["high"]
                ratios.append(ratio)
            # the kernel is at most 1
            assert ratios[0] * (1 + 1e-12) >= ratios[1]
            assert ratios[1] * (1 + 1e-12) >= ratios[2]


class TestAperture:
    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("q", [1.0, 2.0])
    def test_norm_ratio(self, grid, seed, q, brackets):
        rng = np.random.default_rng(seed)
        sequence = lattice(rng.uniform(0.4, 0.7), 2 * grid.outer_defect, rng)
        values = rng.standard_normal(len(sequence))
        norms = {}
        for aperture in (0.25, 0.5, 1.0):
            space = TentSpace.from_sequence(
                sequence, StandardWeight(1.0), grid, aperture=aperture
            )
            norms[aperture] = tent_norm(TentFunction(space, values), q, q, NormMode.A)
        low, high = brackets["aperture"]["low"], brackets["aperture"]["high"]
        # lenses grow with the aperture
        assert low <= norms[0.25] / norms[0.5] <= 1 + 1e-12
        assert 1 - 1e-12 <= norms[1.0] / norms[0.5] <= high


class TestLuecking:
    def test_example(self):
        selected, values = luecking_select([[1.0, 0.0], [3.0, 1.0], [4.0, 3.0]])
        assert selected.tolist() == [[True, False], [True, True], [False, True]]
        assert values[:, 0].tolist() == [1.0, 3.0, 0.0]

    def test_negative(self):
        with pytest.raises(ValueError):
            luecking_select([[-1.0]])

    @settings(max_examples=1000, deadline=None)
    @given(
        st.lists(
            st.floats(min_value=0.0, max_value=1e6, allow_subnormal=False),
            min_size=1,
            max_size=30,
        ),
        st.sampled_from([0.3, 0.5, 0.9]),
    )
    def test_doubling_selection(self, phis, q):
        phis = np.asarray(phis)[:, None]
        selected, values = luecking_select(phis)
        chosen = phis[selected[:, 0], 0]
        assert np.all(chosen[1:] > 2 * chosen[:-1])
        assert np.all(values[~selected] == 0)
        top = chosen.max(initial=0.0)
        # max <= l^q sum <= (1 - 2^-q)^(-1/q) max over the kept values
        power_sum = (chosen**q).sum() ** (1 / q)
        assert top <= power_sum * (1 + 1e-12)
        assert power_sum <= (1 - 2**-q) ** (-1 / q) * top * (1 + 1e-12)
        # the kept maximum is within a factor 2 of the full one
        assert top <= phis.max() <= 2 * top


class TestWeakEstimates:
    def test_p_equals_q(self, space):
        estimate = weak_estimate(random_function(space, 14), 2.0)
        assert estimate.lhs > 0 and estimate.rhs > 0
        assert math.isfinite(estimate.ratio)

    def test_p_greater_than_q(self, space):
        estimate = weak_estimate_p_gt_q(random_function(space, 15), 3.0, 1.0)
        assert math.isfinite(estimate.ratio)

    def test_ordering(self, space):
        with pytest.raises(ValueError):
            weak_estimate_p_gt_q(space.zeros(), 1.0, 2.0)

    def test_log_weight(self, grid):
        sequence = lattice(0.6, grid.outer_defect, np.random.default_rng(4))
        space = TentSpace.from_sequence(sequence, log_weight, grid)
        assert weak_estimate(space.sample(np.abs), 1.0).ratio > 0
