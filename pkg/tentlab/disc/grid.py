"""Polar grid of the unit disc.

The grid is made of rings whose distances to the boundary circle shrink
geometrically, ``1 - r_i = rho**i``. Every ring is cut in a power of two
of cells, so that cells are roughly square in the hyperbolic sense. Areas
are normalized, ``dA = dx dy / pi``, hence the whole disc has area 1.

>>> grid = PolarGrid(depth=2)
>>> grid.rings
4
>>> abs(grid.weights.sum() - grid.outer_radius**2) < 1e-12
True
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np

from tentlab.checks import check_bounds, check_positive

__all__ = [
    "DEFAULT_ASPECT",
    "DEFAULT_DEPTH",
    "DEFAULT_RHO",
    "MIN_CELLS",
    "PolarGrid",
    "SampledFunction",
    "default_grid",
]

DEFAULT_DEPTH = 6
DEFAULT_RHO = 2**-0.5
DEFAULT_ASPECT = 2.0
MIN_CELLS = 16


@dataclass(frozen=True)
class PolarGrid:
    """Cells of the disc truncated at ``1 - r_M = 2**-depth``.

    `rho` is the ratio of consecutive ring widths, `aspect` the ratio of the
    angular to the radial size of a cell.
    """

    depth: int
    rho: float = DEFAULT_RHO
    aspect: float = DEFAULT_ASPECT

    def __post_init__(self):
        check_positive(self.depth)
        check_bounds(self.rho, 0.05, 0.95)
        check_positive(self.aspect)

    @cached_property
    def rings(self) -> int:
        return math.ceil(self.depth * math.log(2) / -math.log(self.rho) - 1e-9)

    @cached_property
    def edges(self) -> np.ndarray:
        """Distances ``t_i = 1 - r_i`` of the ring edges to the circle, decreasing."""
        return self.rho ** np.arange(self.rings + 1, dtype=float)

    @property
    def outer_radius(self) -> float:
        return 1.0 - float(self.edges[-1])

    @property
    def outer_defect(self) -> float:
        return float(self.edges[-1])

    @cached_property
    def cells_per_ring(self) -> np.ndarray:
        t_in, t_out = self.edges[:-1], self.edges[1:]
        width = t_in - t_out
        radius = 1.0 - (t_in + t_out) / 2
        wanted = 2 * math.pi * radius / (self.aspect * width)
        exponent = np.ceil(np.log2(np.maximum(wanted, MIN_CELLS)))
        return (2**exponent).astype(int)

    @cached_property
    def ring_index(self) -> np.ndarray:
        return np.repeat(np.arange(self.rings), self.cells_per_ring)

    @cached_property
    def ring_radii(self) -> np.ndarray:
        """Radius of the centres of the cells of every ring."""
        return 1.0 - (self.edges[:-1] + self.edges[1:]) / 2

    @cached_property
    def radii(self) -> np.ndarray:
        return self.ring_radii[self.ring_index]

    @cached_property
    def defects(self) -> np.ndarray:
        """``1 - |z|`` of the cell centres, computed without cancellation."""
        return ((self.edges[:-1] + self.edges[1:]) / 2)[self.ring_index]

    @cached_property
    def angles(self) -> np.ndarray:
        parts = [
            2 * math.pi * (np.arange(n) + 0.5) / n for n in self.cells_per_ring
        ]
        return np.concatenate(parts)

    @cached_property
    def half_widths(self) -> np.ndarray:
        """Half of the angular extent of every cell."""
        return (math.pi / self.cells_per_ring)[self.ring_index]

    @cached_property
    def points(self) -> np.ndarray:
        points = self.radii * np.exp(1j * self.angles)
        logging.info(f"Build polar grid {self} with {points.size} cells")
        return points

    @cached_property
    def weights(self) -> np.ndarray:
        """Normalized area of every cell, exactly ``(r_{i+1}^2 - r_i^2) / n_i``."""
        r_in, r_out = 1.0 - self.edges[:-1], 1.0 - self.edges[1:]
        ring_area = r_out**2 - r_in**2
        return (ring_area / self.cells_per_ring)[self.ring_index]

    def __len__(self) -> int:
        return int(self.cells_per_ring.sum())

    def cell_masses(self, weight) -> np.ndarray:
        """Weighted area of every cell, ``int_ring w(s) 2s ds / n_i``."""
        return _cell_masses(self, weight)

    def sample(self, func: Callable[[np.ndarray], np.ndarray]) -> "SampledFunction":
        return SampledFunction(self, np.asarray(func(self.points)))

    def refine(self) -> "PolarGrid":
        return PolarGrid(self.depth + 1, self.rho, self.aspect)


@lru_cache(maxsize=128)
def _cell_masses(grid: PolarGrid, weight) -> np.ndarray:
    masses = weight.ring_masses(grid.edges) / grid.cells_per_ring
    masses = masses[grid.ring_index]
    masses.setflags(write=False)
    return masses


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values of a function at the cell centres of a grid."""

    grid: PolarGrid
    values: np.ndarray

    def __post_init__(self):
        if np.shape(self.values) != (len(self.grid),):
            raise ValueError(
                f"Expected {len(self.grid)} values, got {np.shape(self.values)}"
            )

    def __abs__(self) -> "SampledFunction":
        return SampledFunction(self.grid, np.abs(self.values))

    def __mul__(self, other) -> "SampledFunction":
        if isinstance(other, SampledFunction):
            if other.grid != self.grid:
                raise ValueError("Expected functions on the same grid")
            other = other.values
        return SampledFunction(self.grid, self.values * other)

    __rmul__ = __mul__

    def __pow__(self, exponent: float) -> "SampledFunction":
        return SampledFunction(self.grid, self.values**exponent)


@lru_cache(maxsize=16)
def default_grid(depth: int = DEFAULT_DEPTH) -> PolarGrid:
    return PolarGrid(depth)
