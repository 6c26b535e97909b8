import math

import numpy as np
import pytest

from tentlab.disc.geometry import PseudoDisc, Square, Tent, pseudo_distance
from tentlab.disc.grid import PolarGrid
from tentlab.disc.measure import (
    DiscMeasure,
    SeparatedSequence,
    build_measure,
    counterexample,
    hyperbolic,
    lattice,
    mass,
    points,
    read_measure_csv,
    weighted,
    write_measure_csv,
    zero_measure,
)
from tentlab.disc.weights import constant, log_weight


class TestDiscMeasure:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"points": [0.5, 0.2], "masses": [1.0]},
            {"points": [0.5], "masses": [-1.0]},
            {"points": [1.0], "masses": [1.0]},
            {"grid": PolarGrid(2)},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            DiscMeasure(**kwargs)

    def test_points(self):
        mu = points([(0.5, 1.0), (-0.5j, 2.5)])
        assert mu.total == 3.5
        assert mu.is_discrete
        assert mass(mu, Square.at(0.5)) == 1.0

    def test_zero(self):
        mu = zero_measure()
        assert mu.total == 0.0
        assert mu.support[0].size == 0

    def test_scaled_and_with_atoms(self):
        mu = points([(0.5, 1.0)]).scaled(3.0).with_atoms([0.1j], [1.0])
        assert mu.total == pytest.approx(4.0)
        assert mu.points.size == 2


class TestRadial:
    def test_hyperbolic_total(self):
        t_min = 0.1
        expected = 1 / (t_min * (2 - t_min)) - 1
        assert hyperbolic(t_min).total == pytest.approx(expected, rel=1e-8)

    def test_on_grid(self):
        grid = PolarGrid(3)
        mu = hyperbolic(grid.outer_defect)
        gridded = mu.on_grid(grid)
        assert not gridded.is_radial
        assert gridded.total == pytest.approx(mu.total, rel=1e-8)
        assert gridded.on_grid(grid) is gridded

    @pytest.mark.parametrize("center", [0.0, 0.5, 0.9j])
    def test_hyperbolic_pseudo_disc(self, center):
        r = 0.3
        mu = hyperbolic(1e-4)
        expected = r * r / (1 - r * r)
        assert mass(mu, PseudoDisc(center, r)) == pytest.approx(expected, rel=1e-4)

    def test_tent_matches_grid(self):
        mu = hyperbolic(2.0**-8)
        grid = PolarGrid(8)
        exact = mass(mu, Tent(0.5))
        gridded = mass(mu.on_grid(grid), Tent(0.5))
        assert gridded == pytest.approx(exact, rel=0.1)

    def test_counterexample_grows(self):
        masses = [
            mass(counterexample(log_weight, 2.0**-d), Square.at(0.5))
            for d in (4, 8, 16)
        ]
        assert masses[0] < masses[1] < masses[2]

    def test_weighted(self):
        grid = PolarGrid(3)
        mu = weighted(constant, grid, 2.0)
        assert mu.total == pytest.approx(2 * grid.cell_masses(constant).sum())


class TestSequences:
    def test_separation(self):
        sequence = SeparatedSequence.from_points([0.5, -0.5])
        assert sequence.separation == pytest.approx(0.8)
        assert SeparatedSequence.from_points([0.5]).separation == math.inf

    @pytest.mark.parametrize("points", [[0.0, 0.5], [0.5, 0.5], [1.0]])
    def test_invalid(self, points):
        with pytest.raises(ValueError):
            SeparatedSequence.from_points(points)

    @pytest.mark.parametrize("delta", [0.3, 0.5, 0.7])
    def test_lattice(self, delta):
        sequence = lattice(delta, 0.01, np.random.default_rng(1))
        assert len(sequence) > 0
        assert np.all(1 - np.abs(sequence.points) >= 0.01)
        assert sequence.separation > 0

    def test_lattice_is_seeded(self):
        first = lattice(0.5, 0.05, np.random.default_rng(7))
        second = lattice(0.5, 0.05, np.random.default_rng(7))
        np.testing.assert_array_equal(first.points, second.points)

    def test_lattice_cap(self):
        assert len(lattice(0.5, 1e-3, np.random.default_rng(0), max_points=40)) == 40

    def test_lattice_rings(self):
        sequence = lattice(0.5, 0.05, np.random.default_rng(3))
        radii = np.unique(np.round(np.abs(sequence.points), 12))
        steps = pseudo_distance(radii[:-1], radii[1:])
        np.testing.assert_allclose(steps, 0.5, rtol=1e-9)


class TestBuild:
    def test_points(self):
        mu = build_measure("points", atoms=[[[0.5, 0.1], 2.0], [0.3, 1.0]])
        assert mu.points.tolist() == [0.5 + 0.1j, 0.3 + 0j]
        assert mu.total == 3.0

    def test_negative(self):
        with pytest.raises(ValueError):
            build_measure("points", atoms=[[0.5, -1.0]])

    def test_unknown(self):
        with pytest.raises(ValueError):
            build_measure("cantor")

    def test_lattice(self):
        rng = np.random.default_rng(0)
        mu = build_measure("lattice", delta=0.5, t_min=0.05, rng=rng)
        assert np.all(mu.masses == 1)

    def test_csv(self, tmp_path):
        mu = points([(0.5, 1.0), (-0.25j, 0.5)])
        path = tmp_path / "mu.csv"
        write_measure_csv(mu, path)
        loaded = read_measure_csv(path)
        np.testing.assert_array_equal(loaded.points, mu.points)
        np.testing.assert_array_equal(loaded.masses, mu.masses)
        assert build_measure("csv", path=path).total == 1.5
