"""Positive measures of the unit disc.

A measure is a finite cloud of atoms, optionally together with a density.
A density is either radial, a function of ``t = 1 - |z|`` against ``dA``,
or materialized as masses of the cells of a polar grid. Grid masses are
attributed to regions by cell centre.

>>> mass(points([(0.9, 1.0)]), Square.at(0.9))
1.0
>>> mass(points([(0.9, 1.0)]), PseudoDisc(0.5, 0.3))
0.0
"""

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from tentlab.checks import check_non_negative, check_positive
from tentlab.disc.geometry import (
    Annulus,
    PseudoDisc,
    Region,
    Sector,
    Square,
    Tent,
    pseudo_distance,
)
from tentlab.disc.grid import PolarGrid, default_grid
from tentlab.disc.weights import RadialWeight, radial_integral

__all__ = [
    "DiscMeasure",
    "RadialDensity",
    "SeparatedSequence",
    "build_measure",
    "counterexample",
    "hyperbolic",
    "lattice",
    "mass",
    "points",
    "read_measure_csv",
    "weighted",
    "write_measure_csv",
    "zero_measure",
]


def _atleast_1d(values, dtype) -> np.ndarray:
    return np.atleast_1d(np.asarray(values, dtype=dtype))


def _complex(z) -> complex:
    return complex(*z) if isinstance(z, (list, tuple)) else complex(z)


@dataclass(frozen=True, eq=False)
class RadialDensity:
    """Density ``g(t)`` of ``dmu = g(1 - |z|) dA`` supported on ``t >= t_min``."""

    density: Callable[[float], float]
    t_min: float = 0.0
    label: str = "density"

    def __post_init__(self):
        check_non_negative(self.t_min)

    def __call__(self, t):
        return self.density(t)

    def integral(
        self, func: Callable[[float], float], t_low: float, t_high: float
    ) -> float:
        """``int g(t) func(t) dt`` over ``[t_low, t_high]`` cut at `t_min`."""
        t_low = max(t_low, self.t_min)
        t_high = min(t_high, 1.0)
        return radial_integral(lambda t: self.density(t) * func(t), t_low, t_high)

    def rings(self, t_low: float, t_high: float) -> float:
        """Mass of ``1 - t_high <= |z| <= 1 - t_low``."""
        return self.integral(lambda t: 2 * (1 - t), t_low, t_high)

    def square(self, length: float) -> float:
        return length / (2 * math.pi) * self.rings(0.0, length)

    def annulus(self, radius: float) -> float:
        return self.rings(0.0, 1.0 - radius)

    def tent(self, z: complex, aperture: float) -> float:
        t_z = 1.0 - abs(z)
        return 2 * aperture / math.pi * self.integral(lambda t: t_z - t, 0.0, t_z)

    def pseudo_disc(self, center: complex, radius: float) -> float:
        modulus = abs(center)
        if modulus == 0:
            return self.rings(1.0 - radius, 1.0)
        t_a = 1.0 - modulus
        scale = 1 - (radius * modulus) ** 2
        t_c = t_a * (1 + radius**2 * modulus) / scale
        euclidean = radius * t_a * (1 + modulus) / scale

        def fraction(t):
            s, c = 1.0 - t, 1.0 - t_c
            if s <= 0 or c <= 0:
                return 1.0 if abs(t - t_c) < euclidean else 0.0
            chord = (euclidean**2 - (t_c - t) ** 2) / (4 * s * c)
            return 2 * math.asin(math.sqrt(min(max(chord, 0.0), 1.0))) / math.pi

        t_low = t_a * (1 - radius) / (1 + radius * modulus)
        t_high = t_a * (1 + radius) / (1 - radius * modulus)
        return self.integral(lambda t: fraction(t) * 2 * (1 - t), t_low, t_high)


@dataclass(frozen=True, eq=False)
class DiscMeasure:
    """Atoms ``masses[k] * delta(points[k])`` plus an optional density.

    `divergent` marks a measure whose total mass is infinite and which is
    only available truncated near the boundary.
    """

    points: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    masses: np.ndarray = field(default_factory=lambda: np.zeros(0))
    radial: RadialDensity | None = None
    grid: PolarGrid | None = None
    cell_values: np.ndarray | None = None
    divergent: bool = False
    label: str = "points"

    def __post_init__(self):
        object.__setattr__(self, "points", _atleast_1d(self.points, complex))
        object.__setattr__(self, "masses", _atleast_1d(self.masses, float))
        if self.points.shape != self.masses.shape:
            raise ValueError(
                f"Expected a mass for every point, got {self.masses.shape}"
            )
        if np.any(self.masses < 0):
            raise ValueError("Expected non-negative masses")
        if np.any(np.abs(self.points) >= 1):
            raise ValueError("Expected atoms inside the unit disc")
        if (self.grid is None) != (self.cell_values is None):
            raise ValueError("Expected cell values together with their grid")
        if self.cell_values is not None and np.any(self.cell_values < 0):
            raise ValueError("Expected non-negative cell values")

    @property
    def is_discrete(self) -> bool:
        return self.radial is None and self.cell_values is None

    @property
    def is_radial(self) -> bool:
        """No atoms and a radial density without a grid."""
        if self.radial is None or self.cell_values is not None:
            return False
        return self.points.size == 0

    @cached_property
    def support(self) -> tuple[np.ndarray, np.ndarray]:
        """Points and masses of the atoms followed by the grid cells."""
        if self.cell_values is None:
            return self.points, self.masses
        return (
            np.concatenate([self.points, self.grid.points]),
            np.concatenate([self.masses, self.cell_values]),
        )

    @cached_property
    def total(self) -> float:
        """Total mass, truncated for a divergent measure."""
        value = float(self.masses.sum())
        if self.cell_values is not None:
            value += float(self.cell_values.sum())
        elif self.radial is not None:
            value += self.radial.annulus(0.0)
        return value

    def on_grid(self, grid: PolarGrid) -> "DiscMeasure":
        """The measure with its radial density replaced by exact ring masses on `grid`."""
        if self.radial is None:
            return self
        if self.grid == grid:
            return self
        density = replace(self.radial, t_min=max(self.radial.t_min, grid.outer_defect))
        rings = np.array(
            [
                density.rings(lo, hi)
                for hi, lo in zip(grid.edges[:-1], grid.edges[1:])
            ]
        )
        cells = (rings / grid.cells_per_ring)[grid.ring_index]
        logging.debug(f"Materialize {self.label} on {grid}")
        return replace(self, radial=density, grid=grid, cell_values=cells)

    def scaled(self, factor: float) -> "DiscMeasure":
        check_non_negative(factor)
        radial = self.radial
        if radial is not None:
            radial = RadialDensity(
                lambda t: factor * self.radial.density(t), radial.t_min, radial.label
            )
        cells = None if self.cell_values is None else factor * self.cell_values
        return replace(
            self, masses=factor * self.masses, radial=radial, cell_values=cells
        )

    def with_atoms(self, points, masses) -> "DiscMeasure":
        return replace(
            self,
            points=np.concatenate([self.points, _atleast_1d(points, complex)]),
            masses=np.concatenate([self.masses, _atleast_1d(masses, float)]),
        )

    def __repr__(self):
        return f"{self.label}({self.points.size} atoms, total={self.total:.6g})"


def _radial_mass(density: RadialDensity, region: Region) -> float | None:
    match region:
        case Square(arc=arc):
            return density.square(arc.length)
        case Tent(vertex=z, aperture=alpha):
            return density.tent(z, alpha)
        case Sector(arc=arc):
            return arc.length / (2 * math.pi) * density.annulus(0.0)
        case Annulus(radius=r):
            return density.annulus(r)
        case PseudoDisc(center=c, radius=r):
            return density.pseudo_disc(c, r)
        case _:
            return None


def mass(measure: DiscMeasure, region: Region, grid: PolarGrid | None = None) -> float:
    """``mu(R)``: atoms and grid cells whose centres lie in `region`.

    A radial density without a grid is integrated exactly for squares, tents,
    sectors, annuli and pseudo-hyperbolic discs; other regions use `grid` or
    the default grid.
    """
    value = 0.0
    if measure.points.size:
        value = float(measure.masses[region.contains(measure.points)].sum())
    if measure.cell_values is not None:
        value += float(measure.cell_values[region.contains(measure.grid.points)].sum())
    elif measure.radial is not None:
        exact = _radial_mass(measure.radial, region)
        if exact is None:
            gridded = measure.on_grid(grid or default_grid())
            inside = region.contains(gridded.grid.points)
            exact = float(gridded.cell_values[inside].sum())
        value += exact
    return value


@dataclass(frozen=True, eq=False)
class SeparatedSequence:
    """Points ``z_k != 0`` with positive pseudo-hyperbolic separation."""

    points: np.ndarray

    def __post_init__(self):
        points = np.atleast_1d(np.asarray(self.points, dtype=complex))
        if np.any(points == 0):
            raise ValueError("Expected z_k != 0 for every point of the sequence")
        if np.any(np.abs(points) >= 1):
            raise ValueError("Expected points inside the unit disc")
        object.__setattr__(self, "points", points)
        if points.size > 1 and self.separation <= 0:
            raise ValueError("Expected pairwise distinct points")

    @staticmethod
    def from_points(points: Iterable[complex]) -> "SeparatedSequence":
        return SeparatedSequence(np.fromiter(points, dtype=complex))

    @cached_property
    def separation(self) -> float:
        """``min_{j != k} pseudo_distance(z_j, z_k)``, infinite for one point."""
        if self.points.size < 2:
            return math.inf
        distances = pseudo_distance(self.points[:, None], self.points[None, :])
        np.fill_diagonal(distances, np.inf)
        return float(distances.min())

    def __len__(self) -> int:
        return self.points.size

    def measure(self, masses=None) -> DiscMeasure:
        """``sum_k masses_k delta(z_k)``, unit masses by default."""
        masses = np.ones(len(self)) if masses is None else masses
        return DiscMeasure(self.points, masses, label="sequence")


def zero_measure() -> DiscMeasure:
    return DiscMeasure(label="zero")


def points(atoms: Iterable[tuple[complex, float]]) -> DiscMeasure:
    """Measure of the atoms given as ``(z, mass)`` pairs."""
    atoms = list(atoms)
    return DiscMeasure(
        np.array([z for z, _ in atoms], dtype=complex),
        np.array([m for _, m in atoms], dtype=float),
    )


def hyperbolic(t_min: float) -> DiscMeasure:
    """``dh = dA / (1 - |z|^2)^2`` truncated at ``1 - |z| >= t_min``."""
    check_positive(t_min)
    density = RadialDensity(lambda t: 1.0 / (t * (2 - t)) ** 2, t_min, "hyperbolic")
    return DiscMeasure(radial=density, divergent=True, label="hyperbolic")


def counterexample(weight: RadialWeight, t_min: float) -> DiscMeasure:
    """``dmu = omega(S(z)) (1 - |z|)^-2 dA`` truncated at ``1 - |z| >= t_min``.

    For the log weight the quotients ``mu(S(a)) / omega(S(a))`` are unbounded
    while ``mu(Delta(a, r)) / omega(S(a))`` stay bounded.
    """
    check_positive(t_min)
    density = RadialDensity(
        lambda t: float(weight.annulus_values(t)) / (2 * math.pi * t),
        t_min,
        "counterexample",
    )
    logging.info(f"Counterexample measure for {weight!r} truncated at t={t_min:.3g}")
    return DiscMeasure(radial=density, divergent=True, label="counterexample")


def weighted(weight: RadialWeight, grid: PolarGrid, factor: float = 1.0) -> DiscMeasure:
    """``factor * omega dA`` as exact cell masses of `grid`."""
    check_non_negative(factor)
    cells = factor * np.array(grid.cell_masses(weight))
    return DiscMeasure(grid=grid, cell_values=cells, label="weighted")


def lattice(
    delta: float,
    t_min: float,
    rng: np.random.Generator | None = None,
    max_points: int | None = None,
) -> SeparatedSequence:
    """Ring by ring lattice with pseudo-hyperbolic spacing about `delta`.

    Ring radii follow ``r_{m+1} = (r_m + delta) / (1 + delta r_m)`` from
    ``r_0 = delta``; every ring carries ``2 pi r / (delta (1 - r^2))`` points
    turned by a random angle. Rings with ``1 - r < t_min`` are dropped.
    """
    if not 0 < delta < 1:
        raise ValueError(f"Expected 0 < {delta=} < 1")
    check_positive(t_min)
    rng = rng or np.random.default_rng()
    parts = []
    count = 0
    r = delta
    while 1 - r >= t_min:
        n = max(1, math.floor(2 * math.pi * r / (delta * (1 - r * r))))
        angles = 2 * math.pi * (np.arange(n) + rng.random()) / n
        parts.append(r * np.exp(1j * angles))
        count += n
        if max_points is not None and count >= max_points:
            break
        r = (r + delta) / (1 + delta * r)
    result = np.concatenate(parts) if parts else np.zeros(0, dtype=complex)
    if max_points is not None:
        result = result[:max_points]
    return SeparatedSequence(result)


def read_measure_csv(path: str | Path) -> DiscMeasure:
    """Atoms from the lines ``x,y,mass``; a header line is skipped."""
    atoms = []
    with open(path, newline="") as stream:
        for row in csv.reader(stream):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                x, y, m = (float(value) for value in row[:3])
            except ValueError:
                if atoms:
                    raise
                continue
            atoms.append((complex(x, y), m))
    return points(atoms)


def write_measure_csv(measure: DiscMeasure, path: str | Path):
    """Write the atoms and grid cells of `measure` as ``x,y,mass`` lines."""
    support, masses = measure.support
    with open(path, "w", newline="") as stream:
        writer = csv.writer(stream)
        writer.writerow(["x", "y", "mass"])
        for z, m in zip(support, masses):
            writer.writerow([repr(float(z.real)), repr(float(z.imag)), repr(float(m))])


def build_measure(kind: str, **params) -> DiscMeasure:
    """Build a measure from a preset name and its parameters.

    >>> build_measure("points", atoms=[(0.5, 2.0)]).total
    2.0
    """
    match kind:
        case "zero":
            return zero_measure()
        case "points":
            atoms = [(_complex(z), float(m)) for z, m in params["atoms"]]
            if any(m < 0 for _, m in atoms):
                raise ValueError("Expected non-negative masses")
            return points(atoms)
        case "csv":
            return read_measure_csv(params["path"])
        case "hyperbolic":
            return hyperbolic(float(params["t_min"]))
        case "counterexample":
            return counterexample(params["weight"], float(params["t_min"]))
        case "weighted":
            factor = float(params.get("factor", 1.0))
            return weighted(params["weight"], params["grid"], factor)
        case "lattice":
            sequence = lattice(
                float(params["delta"]),
                float(params["t_min"]),
                params.get("rng"),
                params.get("max_points"),
            )
            return sequence.measure()
        case _:
            raise ValueError(f"Unknown measure {kind=}")
