"""Weighted maximal functions of measures.

``M_{w,alpha}(mu)(z)`` is the supremum of ``mu(R) / w(R)^alpha`` over the
regions `R` of a finite family containing `z`:

* standard: dyadic Carleson squares of side ``2**-n`` at every rotation by
  ``2 pi j / 2**(n + 3)``, together with the squares ``S(a)`` of the atoms of
  the measure and of the evaluation points;
* dyadic square: the squares ``S(I)`` over the dyadic arcs of the circle;
* dyadic tent: the dyadic tents, plus the global term ``mu(D) / w(D)^alpha``;
* kernel: ``sup_{a in Gamma(z)} w(S(a))^-alpha int ((1 - |a|) / |1 - conj(a) u|)^lam dmu(u)``.

Weighted masses of squares are exact unless a grid is given, in which case
they are taken from the grid with the same cell attribution as grid measures.
Candidates with no weighted mass are skipped.
"""

import logging
import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from tentlab.checks import check_exponent, check_finite, check_positive
from tentlab.disc.geometry import (
    DEFAULT_APERTURE,
    angle_difference,
    dyadic_tent_incidence,
    dyadic_tents,
    lens_matrix,
)
from tentlab.disc.grid import PolarGrid, SampledFunction, default_grid
from tentlab.disc.measure import DiscMeasure
from tentlab.disc.weights import RadialWeight, square_masses

__all__ = [
    "DEFAULT_LEVELS",
    "MaximalMode",
    "MaximalCheck",
    "SquareFamily",
    "maximal_bound_check",
    "maximal_function",
    "maximal_necessity_check",
    "maximal_operator_image",
    "maximal_sup",
    "square_family",
    "square_ratios",
    "tent_ratios",
]

DEFAULT_LEVELS = 6
CHUNK = 256
# squares of the 1-D scan for radial measures
RADIAL_SCAN = 400


class MaximalMode(Enum):
    STANDARD = "standard"
    DYADIC_SQUARE = "dyadic-square"
    DYADIC_TENT = "dyadic-tent"
    KERNEL = "kernel"


@dataclass(frozen=True, eq=False)
class SquareFamily:
    """Squares given by the midpoints and lengths of their arcs."""

    mids: np.ndarray
    lengths: np.ndarray

    def __len__(self) -> int:
        return self.lengths.size

    def pairs(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Pairs ``(j, k)`` with ``points[k]`` in the j-th square."""
        points = np.atleast_1d(np.asarray(points, dtype=complex))
        modulus, theta = np.abs(points), np.angle(points)
        squares, owners = [], []
        for first in range(0, len(self), CHUNK):
            mids = self.mids[first : first + CHUNK, None]
            lengths = self.lengths[first : first + CHUNK, None]
            gap = np.abs(angle_difference(theta[None, :], mids))
            inside = (modulus[None, :] >= 1 - lengths) & (gap <= lengths / 2)
            rows, cols = np.nonzero(inside)
            squares.append(rows + first)
            owners.append(cols)
        if not squares:
            return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
        return np.concatenate(squares), np.concatenate(owners)

    def masses(self, points, masses) -> np.ndarray:
        """Total mass of the weighted `points` in every square."""
        squares, owners = self.pairs(points)
        weights = np.asarray(masses, dtype=float)[owners]
        return np.bincount(squares, weights=weights, minlength=len(self))

    def vertices(self) -> np.ndarray:
        return (1 - self.lengths) * np.exp(1j * self.mids)


def square_family(
    n_max: int = DEFAULT_LEVELS, anchors=(), dyadic: bool = False
) -> SquareFamily:
    """Rotated dyadic squares up to level `n_max` plus the squares ``S(a)`` of `anchors`.

    With `dyadic` the family is the squares ``S(I)`` over the dyadic arcs
    ``I_{n,k}`` of the whole circle instead.

    >>> len(square_family(1))
    24
    """
    mids, lengths = [], []
    for n in range(n_max + 1):
        if dyadic:
            length, count = math.pi / 2 ** (n + 2), 2 ** (n + 3)
            mids.append((np.arange(count) + 0.5) * length)
        else:
            length, count = 2.0**-n, 2 ** (n + 3)
            mids.append(2 * math.pi * np.arange(count) / count)
        lengths.append(np.full(count, length))
    anchors = np.atleast_1d(np.asarray(anchors, dtype=complex))
    anchors = anchors[anchors != 0]
    mids.append(np.angle(anchors))
    lengths.append(1 - np.abs(anchors))
    return SquareFamily(np.concatenate(mids), np.concatenate(lengths))


def _measure_masses(
    family: SquareFamily, mu: DiscMeasure, grid: PolarGrid | None
) -> np.ndarray:
    if mu.radial is not None and mu.cell_values is None and grid is not None:
        mu = mu.on_grid(grid)
    support, masses = mu.support
    values = family.masses(support, masses) if support.size else np.zeros(len(family))
    if mu.radial is not None and mu.cell_values is None:
        lengths, inverse = np.unique(family.lengths, return_inverse=True)
        exact = np.array([mu.radial.square(length) for length in lengths])
        values = values + exact[inverse]
    return values


def _weight_masses(
    family: SquareFamily, weight: RadialWeight, grid: PolarGrid | None
) -> np.ndarray:
    if grid is None:
        return square_masses(weight, family.lengths)
    return family.masses(grid.points, grid.cell_masses(weight))


def _ratios(
    numerators: np.ndarray, denominators: np.ndarray, alpha: float
) -> np.ndarray:
    check_finite(numerators, "measure masses")
    check_finite(denominators, "weighted masses")
    valid = denominators > 0
    skipped = int(np.count_nonzero(~valid))
    if skipped:
        logging.debug(f"Skip {skipped} candidates without weighted mass")
    ratios = np.full(numerators.shape, -np.inf)
    ratios[valid] = numerators[valid] / denominators[valid] ** alpha
    return ratios


def _sup_over_pairs(
    ratios: np.ndarray, regions: np.ndarray, owners: np.ndarray, size: int
) -> np.ndarray:
    values = np.full(size, -np.inf)
    np.maximum.at(values, owners, ratios[regions])
    return np.maximum(values, 0.0)


def _square_maximal(mu, weight, alpha, z, family, grid) -> np.ndarray:
    numerators = _measure_masses(family, mu, grid)
    ratios = _ratios(numerators, _weight_masses(family, weight, grid), alpha)
    squares, owners = family.pairs(z)
    return _sup_over_pairs(ratios, squares, owners, z.size)


def square_ratios(
    mu: DiscMeasure,
    weight: RadialWeight,
    alpha: float,
    n_max: int = DEFAULT_LEVELS,
    grid: PolarGrid | None = None,
    anchors=(),
    dyadic: bool = False,
) -> tuple[SquareFamily, np.ndarray]:
    """The square family with ``mu(S) / w(S)^alpha`` for each square, -inf without mass."""
    family = square_family(n_max, anchors, dyadic)
    masses = _measure_masses(family, mu, grid)
    return family, _ratios(masses, _weight_masses(family, weight, grid), alpha)


def tent_ratios(
    mu: DiscMeasure,
    weight: RadialWeight,
    alpha: float,
    n_max: int,
    grid: PolarGrid,
) -> tuple[np.ndarray, float]:
    """``mu(T) / w(T)^alpha`` over ``dyadic_tents(n_max, True)`` and the global term."""
    mu = mu.on_grid(grid)
    count = len(dyadic_tents(n_max, full_circle=True))
    support, masses = mu.support
    tents, owners = dyadic_tent_incidence(support, n_max, full_circle=True)
    numerators = np.bincount(tents, weights=masses[owners], minlength=count)
    tents, owners = dyadic_tent_incidence(grid.points, n_max, full_circle=True)
    cell_masses = grid.cell_masses(weight)
    denominators = np.bincount(tents, weights=cell_masses[owners], minlength=count)
    total = float(cell_masses.sum())
    glob = mu.total / total**alpha if total > 0 else 0.0
    return _ratios(numerators, denominators, alpha), glob


def _tent_maximal(mu, weight, alpha, z, n_max, grid) -> np.ndarray:
    ratios, glob = tent_ratios(mu, weight, alpha, n_max, grid)
    tents, owners = dyadic_tent_incidence(z, n_max, full_circle=True)
    return np.maximum(_sup_over_pairs(ratios, tents, owners, z.size), glob)


def _kernel_candidates(z: np.ndarray, n_max: int, anchors: np.ndarray) -> np.ndarray:
    """Vertices of the rotated dyadic squares, atoms, and radial points below every `z`."""
    vertices = [square_family(n_max).vertices(), anchors]
    radii = 1 - 2.0 ** -np.arange(1, n_max + 2)
    for zeta in z[z != 0]:
        vertices.append(radii[radii < abs(zeta)] * zeta / abs(zeta))
    return np.unique(np.concatenate(vertices))


def _kernel_ratios(mu, weight, alpha, candidates, grid, lam) -> np.ndarray:
    if lam is None:
        lam = weight.certificate.lambda0 + 1
    check_positive(lam)
    if mu.radial is not None and mu.cell_values is None:
        mu = mu.on_grid(grid or default_grid())
    support, masses = mu.support
    lengths = 1 - np.abs(candidates)
    if grid is None:
        denominators = square_masses(weight, lengths)
    else:
        family = SquareFamily(np.angle(candidates), lengths)
        denominators = _weight_masses(family, weight, grid)
    numerators = np.zeros(candidates.size)
    for first in range(0, candidates.size, CHUNK):
        a = candidates[first : first + CHUNK, None]
        kernel = ((1 - np.abs(a)) / np.abs(1 - np.conj(a) * support[None, :])) ** lam
        numerators[first : first + CHUNK] = kernel @ masses
    return _ratios(numerators, denominators, alpha)


def _kernel_maximal(mu, weight, alpha, z, n_max, grid, lam) -> np.ndarray:
    candidates = _kernel_candidates(z, n_max, mu.points)
    ratios = _kernel_ratios(mu, weight, alpha, candidates, grid, lam)
    values = np.zeros(z.size)
    for first in range(0, z.size, CHUNK):
        inside = lens_matrix(z[first : first + CHUNK], candidates, DEFAULT_APERTURE)
        best = np.where(inside, ratios[None, :], -np.inf).max(axis=1, initial=-np.inf)
        values[first : first + CHUNK] = np.maximum(best, 0.0)
    return values


def maximal_function(
    mu: DiscMeasure,
    weight: RadialWeight,
    alpha: float,
    z,
    mode: MaximalMode = MaximalMode.STANDARD,
    n_max: int = DEFAULT_LEVELS,
    grid: PolarGrid | None = None,
    lam: float | None = None,
):
    """``M_{w,alpha}(mu)`` at the point or points `z` for the family of `mode`.

    >>> from tentlab.disc.measure import points
    >>> from tentlab.disc.weights import constant
    >>> round(maximal_function(points([(0.9, 1.0)]), constant, 1, 0.9), 2)
    330.69
    """
    check_exponent(alpha)
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(np.abs(z) >= 1):
        raise ValueError("Expected evaluation points inside the unit disc")
    match mode:
        case MaximalMode.STANDARD:
            family = square_family(n_max, np.concatenate([mu.points, z]))
            values = _square_maximal(mu, weight, alpha, z, family, grid)
        case MaximalMode.DYADIC_SQUARE:
            family = square_family(n_max, dyadic=True)
            values = _square_maximal(mu, weight, alpha, z, family, grid)
        case MaximalMode.DYADIC_TENT:
            values = _tent_maximal(mu, weight, alpha, z, n_max, grid or default_grid())
        case MaximalMode.KERNEL:
            values = _kernel_maximal(mu, weight, alpha, z, n_max, grid, lam)
        case _:
            raise ValueError(f"Unknown maximal {mode=}")
    return float(values[0]) if scalar else values


def _radial_sup(
    mu: DiscMeasure, weight: RadialWeight, alpha: float, lengths: np.ndarray
) -> float:
    scan = np.geomspace(max(mu.radial.t_min, 1e-300), 1.0, RADIAL_SCAN)
    scan = np.unique(np.concatenate([scan, lengths]))
    numerators = np.array([mu.radial.square(length) for length in scan])
    ratios = _ratios(numerators, square_masses(weight, scan), alpha)
    return float(max(ratios.max(initial=0.0), 0.0))


def maximal_sup(
    mu: DiscMeasure,
    weight: RadialWeight,
    alpha: float,
    mode: MaximalMode = MaximalMode.STANDARD,
    n_max: int = DEFAULT_LEVELS,
    grid: PolarGrid | None = None,
    lam: float | None = None,
) -> float:
    """``||M_{w,alpha}(mu)||_{L^inf}``: the largest ratio over the whole family.

    Every region of a family contains a point of the disc, so no evaluation
    points are needed. A radial measure without grid is scanned over the
    lengths of the squares ``S(a)`` down to its truncation.
    """
    check_exponent(alpha)
    match mode:
        case MaximalMode.STANDARD | MaximalMode.DYADIC_SQUARE:
            dyadic = mode is MaximalMode.DYADIC_SQUARE
            if mu.is_radial and grid is None:
                family = square_family(n_max, dyadic=dyadic)
                return _radial_sup(mu, weight, alpha, family.lengths)
            _, ratios = square_ratios(mu, weight, alpha, n_max, grid, mu.points, dyadic)
            return float(max(ratios.max(initial=0.0), 0.0))
        case MaximalMode.DYADIC_TENT:
            ratios, glob = tent_ratios(mu, weight, alpha, n_max, grid or default_grid())
            return float(max(ratios.max(initial=0.0), glob, 0.0))
        case MaximalMode.KERNEL:
            empty = np.zeros(0, dtype=complex)
            candidates = _kernel_candidates(empty, n_max, mu.points)
            ratios = _kernel_ratios(mu, weight, alpha, candidates, grid, lam)
            return float(max(ratios.max(initial=0.0), 0.0))
        case _:
            raise ValueError(f"Unknown maximal {mode=}")


class _SquareOperator:
    """``phi -> [M_w(phi^(1/alpha))]^alpha`` for a fixed family, grid and evaluation points."""

    def __init__(
        self,
        family: SquareFamily,
        weight: RadialWeight,
        alpha: float,
        grid: PolarGrid,
        z,
    ):
        self.family = family
        self.alpha = alpha
        self.grid = grid
        self.cell_masses = np.asarray(grid.cell_masses(weight))
        self.cells = family.pairs(grid.points)
        self.size = np.atleast_1d(z).size
        self.owners = family.pairs(z)
        self.denominators = self._masses(self.cell_masses)

    def _masses(self, values: np.ndarray) -> np.ndarray:
        squares, cells = self.cells
        return np.bincount(squares, weights=values[cells], minlength=len(self.family))

    def __call__(self, values: np.ndarray) -> np.ndarray:
        numerators = self._masses(values ** (1 / self.alpha) * self.cell_masses)
        ratios = _ratios(numerators, self.denominators, 1.0)
        return _sup_over_pairs(ratios, *self.owners, self.size) ** self.alpha


def maximal_operator_image(
    phi: SampledFunction,
    weight: RadialWeight,
    alpha: float,
    n_max: int = DEFAULT_LEVELS,
    z=None,
    family: SquareFamily | None = None,
) -> SampledFunction | np.ndarray:
    """``[M_w(phi^(1/alpha))]^alpha`` on the cells of the grid of `phi`.

    `M_w(psi)` is the maximal function of the measure ``psi w dA``, with
    weighted masses of squares taken from the grid. When `z` is given the
    image is evaluated at these points instead of the grid cells.
    """
    check_exponent(alpha)
    values = np.asarray(phi.values, dtype=float)
    if np.any(values < 0):
        raise ValueError("Expected a non-negative function")
    if z is None:
        points = phi.grid.points
    else:
        points = np.atleast_1d(np.asarray(z, dtype=complex))
    if family is None:
        family = square_family(n_max, points)
    image = _SquareOperator(family, weight, alpha, phi.grid, points)(values)
    return SampledFunction(phi.grid, image) if z is None else image


@dataclass(frozen=True)
class MaximalCheck:
    """Condition ``sup M_{w,q/p}(mu)`` against the empirical operator norm."""

    condition: float
    norm: float
    constant: float
    holds: bool
    samples: int
    bracket: float = math.inf

    def as_dict(self) -> dict:
        return asdict(self)


class _NormSampler:
    """Empirical ``||op(phi)||^q_{L^q(mu)} / ||phi||^q_{L^p_w}`` on the family of `mu`."""

    def __init__(self, mu, weight, p, q, alpha, grid, n_max):
        self.mu = mu.on_grid(grid)
        self.support, self.masses = self.mu.support
        self.family = square_family(n_max, self.support)
        self.operator = _SquareOperator(self.family, weight, alpha, grid, self.support)
        self.p, self.q = p, q
        self.condition = maximal_sup(self.mu, weight, q / p, n_max=n_max, grid=grid)

    @property
    def ceiling(self) -> float:
        """Ceiling of the empirical norm on this family for ``p <= q``, ``p alpha >= 1``.

        Hölder on the square realizing the sup at each atom and
        ``mu(S) <= K w(S)^(q/p)`` give ``norm <= K N^(q/p)``, where `K` is the
        condition over this family and `N` the largest number of its squares
        containing one cell.
        """
        if self.q < self.p or self.p * self.operator.alpha < 1:
            return math.inf
        denominators = self.operator.denominators
        charged = denominators > 0
        if not np.any(charged):
            return 0.0
        masses = self.family.masses(self.support, self.masses)[charged]
        K = float((masses / denominators[charged] ** (self.q / self.p)).max())
        _, cells = self.operator.cells
        N = int(np.bincount(cells, minlength=len(self.operator.grid)).max())
        return K * N ** (self.q / self.p)

    def __call__(self, values: np.ndarray) -> float:
        total = float((values**self.p * self.operator.cell_masses).sum())
        norm = total ** (self.q / self.p)
        if norm == 0:
            return 0.0
        return float((self.operator(values) ** self.q * self.masses).sum()) / norm


def maximal_necessity_check(
    mu: DiscMeasure,
    weight: RadialWeight,
    p: float,
    q: float,
    alpha: float,
    grid: PolarGrid,
    n_max: int = 4,
) -> MaximalCheck:
    """Test the operator on the indicators of the charged squares of the family.

    For ``phi = chi_S`` the image is at least 1 on `S`, so the empirical norm
    dominates ``mu(S) / w(S)^(q/p)`` square by square.
    """
    sampler = _NormSampler(mu, weight, p, q, alpha, grid, n_max)
    squares, cells = sampler.operator.cells
    charged = np.nonzero(
        (_measure_masses(sampler.family, sampler.mu, grid) > 0)
        & (sampler.operator.denominators > 0)
    )[0]
    norm = 0.0
    for j in charged:
        phi = np.zeros(len(grid))
        phi[cells[squares == j]] = 1.0
        norm = max(norm, sampler(phi))
    condition = sampler.condition
    holds = condition <= norm * (1 + 1e-12)
    ratio = norm / condition if condition > 0 else 1.0
    return MaximalCheck(condition, norm, ratio, holds, charged.size)


def maximal_bound_check(
    mu: DiscMeasure,
    weight: RadialWeight,
    p: float,
    q: float,
    alpha: float,
    grid: PolarGrid,
    rng: np.random.Generator,
    samples: int = 20,
    n_max: int = 4,
) -> MaximalCheck:
    """Empirical norm over random non-negative test functions.

    `constant` is the ratio of the empirical norm to the condition and
    `bracket` the ceiling of that ratio for ``p <= q``; the check holds when
    the constant stays below it.
    """
    if not p * alpha > 1:
        logging.warning(f"Expected p * alpha > 1, got {p=} {alpha=}")
    if q < p:
        logging.warning(f"No ceiling of the operator norm for {p=} > {q=}")
    sampler = _NormSampler(mu, weight, p, q, alpha, grid, n_max)
    norm = 0.0
    for _ in range(samples):
        phi = rng.random(len(grid)) * (rng.random(len(grid)) < rng.random())
        norm = max(norm, sampler(phi))
    condition = sampler.condition
    ceiling = sampler.ceiling
    holds = norm <= ceiling * (1 + 1e-9)
    if condition > 0:
        constant, bracket = norm / condition, ceiling / condition
    else:
        constant = 0.0 if norm == 0 else math.inf
        bracket = 0.0 if ceiling == 0 else math.inf
    return MaximalCheck(condition, norm, constant, holds, samples, bracket)
