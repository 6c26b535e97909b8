import math

import numpy as np
import pytest
from scipy import special

from tentlab.disc.geometry import Annulus, Arc, Sector, Square, Tent
from tentlab.disc.weights import (
    COMPARABILITY_SAMPLES,
    ConstantWeight,
    StandardWeight,
    TableWeight,
    comparability,
    constant,
    exponential,
    kernel_integral,
    log_weight,
    omega_star,
    region_mass,
    square_masses,
    tail,
    tent_masses,
    weight_from_spec,
)


class TestPresets:
    def test_standard_hat(self):
        weight = StandardWeight(1.0)
        assert weight.hat(0.5) == pytest.approx(0.5 - (1 - 0.5**3) / 3, rel=1e-9)

    def test_log_hat(self):
        t = 1e-3
        assert log_weight.hat(t) == pytest.approx(1 / (1 - math.log(t)))
        assert log_weight.hat_values(0.0) == 0.0

    def test_log_annulus(self):
        # d/dt annulus(t) = 2 (1 - t) w(1 - t)
        t, h = 0.5, 1e-5
        slope = (log_weight.annulus(t + h) - log_weight.annulus(t - h)) / (2 * h)
        expected = 2 * (1 - t) * float(log_weight.defect(t))
        assert slope == pytest.approx(expected, rel=1e-6)
        assert log_weight.total == pytest.approx(2 * math.e * special.exp1(1.0))
        assert math.isfinite(log_weight.total)

    def test_singular_weight_total(self):
        assert StandardWeight(-0.5).total == pytest.approx(2.0, rel=1e-6)
        assert math.isfinite(StandardWeight(-0.9).tent(0.5))

    @pytest.mark.parametrize("alpha", [-0.5, 0.0, 1.0, 3.0])
    def test_total(self, alpha):
        weight = StandardWeight(alpha)
        assert weight.total == pytest.approx(1 / (alpha + 1), rel=1e-8)

    def test_invalid_alpha(self):
        with pytest.raises(ValueError):
            StandardWeight(-1.0)

    @pytest.mark.parametrize(
        "kind,params,expected",
        [
            ("constant", {}, "constant"),
            ("standard", {"alpha": 0}, "constant"),
            ("standard", {"alpha": 1}, "standard(alpha=1)"),
            ("log", {}, "log"),
            ("exponential", {}, "exponential"),
        ],
    )
    def test_weight_from_spec(self, kind, params, expected):
        assert repr(weight_from_spec(kind, **params)) == expected

    def test_unknown_spec(self):
        with pytest.raises(ValueError):
            weight_from_spec("gaussian")

    def test_tail(self):
        assert tail(constant, 0.25) == pytest.approx(0.75)
        with pytest.raises(ValueError):
            tail(constant, 1.0)


class TestTables:
    @pytest.mark.parametrize("t", [0.9, 0.3, 0.01, 1e-5])
    def test_hat_values(self, t):
        weight = StandardWeight(1.5)
        assert float(weight.hat_values(t)) == pytest.approx(weight.hat(t), rel=1e-3)

    @pytest.mark.parametrize("t", [0.5, 0.05, 1e-4])
    def test_tent_values(self, t):
        weight = StandardWeight(0.5)
        assert float(weight.tent_values(t)) == pytest.approx(weight.tent(t), rel=1e-2)

    def test_from_csv(self, tmp_path):
        path = tmp_path / "weight.csv"
        path.write_text("r,w\n0.0,1.0\n0.5,1.0\n0.99,1.0\n")
        weight = TableWeight.from_csv(path)
        assert repr(weight) == "table(3)"
        assert weight.hat(0.5) == pytest.approx(0.5, rel=1e-6)

    @pytest.mark.parametrize(
        "radii,values",
        [
            ([0.0], [1.0]),
            ([0.5, 0.2], [1.0, 1.0]),
            ([0.0, 1.0], [1.0, 1.0]),
            ([0.0, 0.5], [1.0, -1.0]),
        ],
    )
    def test_invalid_table(self, radii, values):
        with pytest.raises(ValueError):
            TableWeight(radii, values)


class TestMasses:
    def test_square(self):
        expected = 0.5 * 0.75 / (2 * math.pi)
        assert region_mass(constant, Square.at(0.5)) == pytest.approx(expected)
        np.testing.assert_allclose(
            square_masses(constant, [0.5, 0.1]),
            [
                region_mass(constant, Square.at(0.5)),
                region_mass(constant, Square.at(0.9j)),
            ],
        )

    def test_tent(self):
        assert region_mass(constant, Tent(0.5)) == pytest.approx(0.125 / math.pi)
        np.testing.assert_allclose(tent_masses(constant, [0.5, -0.5j]), 0.125 / math.pi)

    def test_sector_and_annulus(self):
        assert region_mass(constant, Sector(Arc(0.0, math.pi))) == pytest.approx(0.5)
        assert region_mass(constant, Annulus(0.5)) == pytest.approx(0.75)

    def test_arc_is_not_a_region(self):
        with pytest.raises(ValueError):
            region_mass(constant, Arc(0.0, 1.0))

    def test_large_square(self):
        with pytest.raises(ValueError):
            region_mass(constant, Square(Arc(0.0, 1.0)))

    def test_omega_star(self):
        z = 0.5
        expected = (z**2 - 1) / 4 - math.log(z) / 2
        assert omega_star(constant, z) == pytest.approx(expected, rel=1e-8)


class TestKernelIntegral:
    def test_origin(self):
        assert kernel_integral(constant, 0.0, 2.0) == pytest.approx(1.0, rel=1e-8)

    @pytest.mark.parametrize("rho", [0.3, 0.5, 0.9])
    def test_bergman_kernel(self, rho):
        expected = 1 / (1 - rho**2) ** 2
        assert kernel_integral(constant, rho, 3.0) == pytest.approx(expected, rel=1e-6)


class TestDoubling:
    def test_constant(self):
        certificate = constant.certificate
        assert certificate.member
        assert certificate.C == pytest.approx(2.0, abs=1e-6)
        assert 1.0 <= certificate.square_tent <= 2.0 + 1e-9
        assert math.isfinite(certificate.lambda0)

    def test_log_weight(self):
        certificate = log_weight.certificate
        assert certificate.member
        assert certificate.C <= 1 + math.log(2) + 1e-6
        assert math.isfinite(certificate.lambda0)
        assert math.isfinite(certificate.square_tent)

    def test_standard_weight(self):
        # hat(r) = (1 - r)^2 (2 + r) / 3 for the weight 1 - r^2
        r = np.linspace(0.0, 0.99, 2000)
        scan = (8 * (2 + r) / (5 + r)).max()
        certificate = StandardWeight(1.0).certificate
        assert certificate.member
        assert certificate.C == pytest.approx(scan, rel=0.05)

    def test_exponential_is_rejected(self):
        certificate = exponential.certificate
        assert not certificate.member
        assert math.isnan(certificate.lambda0)

    def test_as_dict(self):
        assert set(ConstantWeight().certificate.as_dict()) >= {"member", "C", "lambda0"}


DOUBLING_PRESETS = [
    constant,
    StandardWeight(-0.5),
    StandardWeight(1.0),
    StandardWeight(2.0),
    log_weight,
]


class TestComparability:
    @pytest.mark.parametrize("weight", DOUBLING_PRESETS, ids=repr)
    def test_bracket(self, weight, brackets):
        K = brackets["comparability"]["K"]
        square_tent, tent_star = comparability(weight)
        assert 1.0 <= square_tent <= K
        assert 1.0 <= tent_star <= K

    @pytest.mark.parametrize("weight", DOUBLING_PRESETS, ids=repr)
    def test_refinement(self, weight, brackets):
        stability = brackets["comparability"]["refinement"]
        coarse = comparability(weight)
        fine = comparability(weight, 2 * COMPARABILITY_SAMPLES - 1)
        for before, after in zip(coarse, fine):
            assert after >= before * (1 - 1e-9)
            assert after <= before * (1 + stability)

    def test_certificate(self):
        certificate = StandardWeight(1.0).certificate
        expected = comparability(StandardWeight(1.0))
        assert (certificate.square_tent, certificate.tent_star) == expected
