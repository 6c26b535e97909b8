"""Analytic functions on the disc: kernels, test functions and their norms.

>>> kernel(0.5, 0.5, 2) == (0.5 / 0.75) ** 2
True
>>> kernel(0.0, 0.3, 1.5)
1.0
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import special

from tentlab.checks import (
    check_exponent,
    check_non_negative,
    check_nonzero_point,
    check_positive,
)
from tentlab.disc.geometry import DEFAULT_APERTURE, lens_matrix
from tentlab.disc.grid import PolarGrid, SampledFunction
from tentlab.disc.measure import SeparatedSequence
from tentlab.disc.weights import RadialWeight, square_masses

__all__ = [
    "CAUCHY_NODES",
    "KernelCombination",
    "PeakFunction",
    "RationalTestFunction",
    "bergman_norm",
    "cauchy_derivative",
    "kernel",
    "nontangential_max",
    "nontangential_norm",
    "s_lambda",
    "test_function",
]

CAUCHY_NODES = 64
CHUNK = 512


def kernel(z, zeta, lam: float):
    """``((1 - |z|) / |1 - conj(zeta) z|)^lam``, vectorized."""
    check_positive(lam)
    z = np.asarray(z, dtype=complex)
    zeta = np.asarray(zeta, dtype=complex)
    value = ((1 - np.abs(z)) / np.abs(1 - np.conj(zeta) * z)) ** lam
    return float(value) if value.ndim == 0 else value


class RationalTestFunction(ABC):
    """Analytic function of the disc with closed-form derivatives."""

    @abstractmethod
    def derivative(self, z, n: int = 0) -> np.ndarray:
        pass

    def __call__(self, z):
        value = self.derivative(z, 0)
        return complex(value) if np.ndim(value) == 0 else value


def _power_derivative(conj_a, z, gamma: float, n: int):
    """``d^n/dz^n (1 - conj_a z)^(-gamma)``."""
    return special.poch(gamma, n) * conj_a**n * (1 - conj_a * z) ** (-gamma - n)


@dataclass(frozen=True)
class PeakFunction(RationalTestFunction):
    """``f_a(z) = ((1 - |a|) / (1 - conj(a) z))^gamma w(S(a))^(-1/p)`` with ``gamma = (lam + 1) / p``."""

    a: complex
    p: float
    lam: float
    scale: float

    @property
    def gamma(self) -> float:
        return (self.lam + 1) / self.p

    def derivative(self, z, n: int = 0):
        check_non_negative(n)
        z = np.asarray(z, dtype=complex)
        conj_a = np.conj(self.a)
        factor = self.scale * (1 - abs(self.a)) ** self.gamma
        return factor * _power_derivative(conj_a, z, self.gamma, n)


def test_function(
    a: complex, p: float, weight: RadialWeight, lam: float | None = None
) -> PeakFunction:
    """``f_{a,p}`` normalized in ``A^p_w``; `lam` defaults to ``lambda0 + 1`` of the weight."""
    a = check_nonzero_point(a)
    check_exponent(p)
    if lam is None:
        lam = weight.certificate.lambda0 + 1
    check_positive(lam)
    mass = float(square_masses(weight, [1 - abs(a)])[0])
    if not mass > 0:
        raise ValueError(f"Expected a square with weighted mass at {a=}")
    return PeakFunction(a, p, lam, mass ** (-1 / p))


@dataclass(frozen=True, eq=False)
class KernelCombination(RationalTestFunction):
    """``sum_k b_k ((1 - |z_k|) / (1 - conj(z_k) z))^lam``."""

    points: np.ndarray
    coefficients: np.ndarray
    lam: float

    def __post_init__(self):
        check_positive(self.lam)
        points = np.atleast_1d(np.asarray(self.points, dtype=complex))
        coefficients = np.atleast_1d(np.asarray(self.coefficients))
        if points.shape != coefficients.shape:
            raise ValueError(
                f"Expected a coefficient for every point, got {coefficients.shape}"
            )
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "coefficients", coefficients)

    def derivative(self, z, n: int = 0):
        check_non_negative(n)
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        weights = self.coefficients * (1 - np.abs(self.points)) ** self.lam
        conj = np.conj(self.points)
        values = np.zeros(flat.shape, dtype=complex)
        for first in range(0, flat.size, CHUNK):
            block = flat[first : first + CHUNK, None]
            terms = _power_derivative(conj[None, :], block, self.lam, n)
            values[first : first + CHUNK] = terms @ weights
        return values.reshape(z.shape)


def s_lambda(coefficients, sequence: SeparatedSequence, lam: float, z):
    """``S_lam(b)(z) = sum_k b_k ((1 - |z_k|) / (1 - conj(z_k) z))^lam``."""
    return KernelCombination(sequence.points, coefficients, lam)(z)


def cauchy_derivative(
    F, z: complex, n: int, radius: float | None = None, nodes: int = CAUCHY_NODES
):
    """``F^(n)(z)`` by the trapezoidal rule on the Cauchy integral over a small circle."""
    check_non_negative(n)
    radius = (1 - abs(z)) / 4 if radius is None else radius
    check_positive(radius)
    theta = 2 * math.pi * np.arange(nodes) / nodes
    values = np.asarray(F(z + radius * np.exp(1j * theta)))
    coefficient = np.mean(values * np.exp(-1j * n * theta))
    return complex(math.factorial(n) * coefficient / radius**n)


def _grid_values(F, grid: PolarGrid) -> np.ndarray:
    if isinstance(F, SampledFunction):
        return np.asarray(F.values)
    return np.asarray(F(grid.points))


def bergman_norm(F, weight: RadialWeight, p: float, grid: PolarGrid) -> float:
    """``||F||_{A^p_w}`` by the weighted cells of `grid`."""
    check_exponent(p)
    values = np.abs(_grid_values(F, grid))
    return float((np.asarray(grid.cell_masses(weight)) * values**p).sum()) ** (1 / p)


def _ray(zeta: np.ndarray, grid: PolarGrid) -> tuple[np.ndarray, np.ndarray]:
    """Points ``r zeta / |zeta|`` at the origin and the ring radii, with ``r < |zeta|``."""
    radii = np.concatenate([[0.0], grid.ring_radii])
    directions = zeta / np.abs(zeta)
    return radii[None, :] * directions[:, None], radii[None, :] < np.abs(zeta)[:, None]


def nontangential_max(F, zeta, grid: PolarGrid, aperture: float = DEFAULT_APERTURE):
    """``N(F)(zeta)``, the largest ``|F|`` over the cells in the lens and on the ray to ``zeta``.

    A sampled function is only searched over the cells.
    """
    scalar = np.ndim(zeta) == 0
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    for point in zeta:
        check_nonzero_point(point)
    cells = np.abs(_grid_values(F, grid))
    values = np.zeros(zeta.size)
    for first in range(0, zeta.size, CHUNK):
        block = zeta[first : first + CHUNK]
        inside = lens_matrix(block, grid.points, aperture)
        best = np.where(inside, cells[None, :], 0.0).max(axis=1, initial=0.0)
        if not isinstance(F, SampledFunction):
            ray, below = _ray(block, grid)
            on_ray = np.where(below, np.abs(np.asarray(F(ray))), 0.0)
            best = np.maximum(best, on_ray.max(axis=1, initial=0.0))
        values[first : first + CHUNK] = best
    return float(values[0]) if scalar else values


def nontangential_norm(
    F,
    weight: RadialWeight,
    p: float,
    grid: PolarGrid,
    aperture: float = DEFAULT_APERTURE,
) -> float:
    """``||N(F)||_{L^p_w}`` on the cells of `grid`."""
    check_exponent(p)
    values = nontangential_max(F, grid.points, grid, aperture)
    return float((np.asarray(grid.cell_masses(weight)) * values**p).sum()) ** (1 / p)
