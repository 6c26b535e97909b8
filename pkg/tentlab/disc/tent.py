"""Tent spaces over a discrete measure.

Functions live on the support ``{z_k}`` of a measure `nu` with masses
``nu_k``. The functionals

    A_q(f)(zeta)^q = sum_{z_k in Gamma(zeta)} |f(z_k)|^q nu_k
    C_q(f)(zeta)^q = sup_{a in Gamma(zeta)} w(T(a))^-1 sum_{z_k in T(a)} |f(z_k)|^q w(T(z_k)) nu_k

are evaluated at the cells of a polar grid, and every ``L^p_w`` integral
is the cell quadrature ``sum_cells W |.|^p`` with ``W`` the weighted cell
masses. Tent masses ``w(T(z_k))`` are measured with the same cells, which
makes Fubini identities exact:

    sum_cells W A_q(f)^q == sum_k |f(z_k)|^q w(T(z_k)) nu_k
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable

import numpy as np

from tentlab.checks import (
    check_exponent,
    check_non_negative,
    check_nonzero_point,
    check_positive,
)
from tentlab.disc.geometry import (
    DEFAULT_APERTURE,
    closed_tent_matrix,
    dyadic_vertices,
    lens_matrix,
)
from tentlab.disc.grid import PolarGrid
from tentlab.disc.maximal import DEFAULT_LEVELS, maximal_function, maximal_sup
from tentlab.disc.measure import DiscMeasure, SeparatedSequence
from tentlab.disc.weights import RadialWeight

__all__ = [
    "NormMode",
    "PairingBound",
    "StoppingProfile",
    "TentFunction",
    "TentSpace",
    "area_function",
    "c_function",
    "cone_kernel_ratio",
    "holder_bound",
    "l_p_c_norm",
    "luecking_select",
    "mixed_norm",
    "p0_average",
    "pairing",
    "sequence_pairing_bound",
    "stopping_time",
    "stopping_constant",
    "tent_norm",
    "weak_estimate",
    "weak_estimate_p_gt_q",
    "WeakEstimate",
]

CHUNK = 512


class NormMode(Enum):
    A = "A"
    C = "C"


def _power_sum(values: np.ndarray, weights: np.ndarray, p: float) -> float:
    """``(sum weights |values|^p)^(1/p)``, the maximum for ``p = inf``."""
    values = np.abs(values)
    if p == math.inf:
        return float(values.max(initial=0.0))
    return float((weights * values**p).sum()) ** (1 / p)


class TentSpace:
    """Shared quadrature of a measure `nu`, a weight and a grid.

    `aperture` is the aperture of the lenses and tents, `n_max` the depth of
    the dyadic vertices used as candidates in the sup of ``C_q``.
    """

    def __init__(
        self,
        nu: DiscMeasure,
        weight: RadialWeight,
        grid: PolarGrid,
        aperture: float = DEFAULT_APERTURE,
        n_max: int = DEFAULT_LEVELS,
    ):
        self.nu = nu.on_grid(grid)
        self.weight = weight
        self.grid = grid
        self.aperture = aperture
        self.n_max = n_max

    @staticmethod
    def from_sequence(
        sequence: SeparatedSequence, weight: RadialWeight, grid: PolarGrid, **options
    ) -> "TentSpace":
        """Space of the unit point masses on a separated sequence."""
        return TentSpace(sequence.measure(), weight, grid, **options)

    @cached_property
    def points(self) -> np.ndarray:
        return self.nu.support[0]

    @cached_property
    def masses(self) -> np.ndarray:
        return self.nu.support[1]

    @cached_property
    def cell_weights(self) -> np.ndarray:
        """Weighted masses ``W`` of the grid cells."""
        return np.asarray(self.grid.cell_masses(self.weight))

    @cached_property
    def cone(self) -> np.ndarray:
        """``[i, k] = z_k in Gamma(cell_i)``."""
        logging.info(
            f"Build cones of {len(self.grid)} cells over {self.points.size} points"
        )
        return lens_matrix(self.grid.points, self.points, self.aperture)

    @cached_property
    def tent_masses(self) -> np.ndarray:
        """``w(T(z_k))`` measured by the grid cells."""
        return self.cell_weights @ self.cone

    @cached_property
    def candidates(self) -> np.ndarray:
        """Vertices of the tents in the sup of ``C_q``: dyadic vertices and the support."""
        vertices = dyadic_vertices(self.n_max, full_circle=True)
        return np.concatenate([vertices, self.points])

    @cached_property
    def candidate_cone(self) -> np.ndarray:
        """``[i, j] = candidates[j] in Gamma(cell_i)``."""
        return lens_matrix(self.grid.points, self.candidates, self.aperture)

    @cached_property
    def candidate_masses(self) -> np.ndarray:
        return self.cell_weights @ self.candidate_cone

    @cached_property
    def closed_tents(self) -> np.ndarray:
        """``[j, k] = z_k`` in the closed tent of ``candidates[j]``."""
        return closed_tent_matrix(self.candidates, self.points, self.aperture)

    @property
    def positive(self) -> np.ndarray:
        return self.masses > 0

    def sample(self, func: Callable[[np.ndarray], np.ndarray]) -> "TentFunction":
        return TentFunction(self, np.asarray(func(self.points)))

    def zeros(self) -> "TentFunction":
        return TentFunction(self, np.zeros(self.points.size))

    # functionals at the grid cells

    def area_values(
        self, f: "TentFunction", q: float, h: np.ndarray | float = math.inf
    ) -> np.ndarray:
        """``A_q(f | h)`` at every cell; `h` may vary from cell to cell."""
        check_exponent(q, infinite=True)
        inside = self.cone
        h = np.broadcast_to(np.asarray(h, dtype=float), (len(self.grid),))
        if np.any(np.isfinite(h)):
            bound = np.abs(self.grid.points) / (1 + h)
            truncated = np.abs(self.points)[None, :] > bound[:, None]
            inside = inside & (truncated | ~np.isfinite(h)[:, None])
        values = np.abs(f.values)
        if q == math.inf:
            charged = np.where(inside & self.positive[None, :], values[None, :], 0.0)
            return charged.max(axis=1, initial=0.0)
        return (inside @ (values**q * self.masses)) ** (1 / q)

    def _candidate_ratios(self, f: "TentFunction", q: float) -> np.ndarray:
        weights = self.tent_masses * self.masses
        numerators = self.closed_tents @ (np.abs(f.values) ** q * weights)
        ratios = np.full(numerators.shape, -np.inf)
        valid = self.candidate_masses > 0
        if not valid.all():
            logging.debug(
                f"Skip {np.count_nonzero(~valid)} candidate tents without weighted mass"
            )
        ratios[valid] = numerators[valid] / self.candidate_masses[valid]
        return ratios

    def c_values(self, f: "TentFunction", q: float) -> np.ndarray:
        """``C_q(f)`` at every cell."""
        check_exponent(q)
        ratios = self._candidate_ratios(f, q)
        values = np.zeros(len(self.grid))
        for first in range(0, len(self.grid), CHUNK):
            inside = self.candidate_cone[first : first + CHUNK]
            best = np.where(inside, ratios[None, :], -np.inf)
            best = best.max(axis=1, initial=-np.inf)
            values[first : first + CHUNK] = np.maximum(best, 0.0)
        return values ** (1 / q)

    def lebesgue_norm(self, values: np.ndarray, p: float) -> float:
        """``||values||_{L^p_w}`` by the cell quadrature."""
        return _power_sum(values, self.cell_weights, p)

    def measure_norm(self, f: "TentFunction", q: float) -> float:
        """``||f||_{L^q(nu)}``."""
        if q == math.inf:
            return float(np.abs(f.values[self.positive]).max(initial=0.0))
        return _power_sum(f.values, self.masses, q)

    def p0(self, g: np.ndarray) -> np.ndarray:
        """``P0(g)(z_k)`` for ``g[k, i] = g(z_k, cell_i)``; zero where the tent has no cells."""
        totals = (self.cone.T * g) @ self.cell_weights
        values = np.zeros(self.points.size, dtype=totals.dtype)
        valid = self.tent_masses > 0
        values[valid] = totals[valid] / self.tent_masses[valid]
        return values

    def __repr__(self):
        return (
            f"TentSpace({self.nu!r}, {self.weight!r}, {self.grid},"
            f" aperture={self.aperture})"
        )


@dataclass(frozen=True, eq=False)
class TentFunction:
    """Values of a function on the support of a tent space."""

    space: TentSpace
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.shape != self.space.points.shape:
            raise ValueError(
                f"Expected {self.space.points.size} values, got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("Expected finite values")
        object.__setattr__(self, "values", values)

    def __abs__(self) -> "TentFunction":
        return TentFunction(self.space, np.abs(self.values))

    def __mul__(self, other) -> "TentFunction":
        if isinstance(other, TentFunction):
            _check_same_support(self, other)
            other = other.values
        return TentFunction(self.space, self.values * other)

    __rmul__ = __mul__


def _check_same_support(f: TentFunction, g: TentFunction):
    if f.space is g.space:
        return
    same = (
        f.space.points.shape == g.space.points.shape
        and np.array_equal(f.space.points, g.space.points)
        and np.array_equal(f.space.masses, g.space.masses)
    )
    if not same:
        raise ValueError("Expected tent functions on the same support")


def area_function(
    f: TentFunction,
    q: float,
    zeta,
    h: float = math.inf,
    aperture: float | None = None,
):
    """``A_q(f | h)(zeta)``, the ``L^q(nu)`` norm of `f` over the truncated lens.

    For ``q = inf`` the largest value over the lens; an empty lens gives 0.
    """
    check_exponent(q, infinite=True)
    check_non_negative(h)
    space = f.space
    aperture = space.aperture if aperture is None else aperture
    scalar = np.ndim(zeta) == 0
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    for z in zeta:
        check_nonzero_point(z)
    inside = lens_matrix(zeta, space.points, aperture)
    if h < math.inf:
        inside &= np.abs(space.points)[None, :] > np.abs(zeta)[:, None] / (1 + h)
    values = np.abs(f.values)
    if q == math.inf:
        result = np.where(inside & space.positive[None, :], values[None, :], 0.0)
        result = result.max(axis=1, initial=0.0)
    else:
        result = (inside @ (values**q * space.masses)) ** (1 / q)
    return float(result[0]) if scalar else result


def c_function(f: TentFunction, q: float, zeta):
    """``C_q(f)(zeta)``, the sup over the candidate vertices ``a in Gamma(zeta)``."""
    check_exponent(q)
    space = f.space
    scalar = np.ndim(zeta) == 0
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    for z in zeta:
        check_nonzero_point(z)
    ratios = space._candidate_ratios(f, q)
    inside = lens_matrix(zeta, space.candidates, space.aperture)
    result = np.where(inside, ratios[None, :], -np.inf).max(axis=1, initial=-np.inf)
    result = np.maximum(result, 0.0)
    result = result ** (1 / q)
    return float(result[0]) if scalar else result


def tent_norm(
    f: TentFunction, p: float, q: float, mode: NormMode | None = None
) -> float:
    """``||f||_{T^p_q}``.

    Mode A is ``||A_q(f)||_{L^p_w}``, mode C is ``||C_q(f)||_{L^p_w}``; the
    default is C for ``p = inf`` and A otherwise.
    """
    check_exponent(p, infinite=True)
    check_exponent(q, infinite=True)
    space = f.space
    mode = mode or (NormMode.C if p == math.inf else NormMode.A)
    if mode is NormMode.A:
        if p == math.inf:
            raise ValueError("Expected a finite p for the area norm, use mode C")
        return space.lebesgue_norm(space.area_values(f, q), p)
    return space.lebesgue_norm(space.c_values(f, q), p)


def l_p_c_norm(f: TentFunction, p: float, q: float) -> float:
    """``||C_q(f)||_{L^p_w}``."""
    return tent_norm(f, p, q, NormMode.C)


def pairing(f: TentFunction, g: TentFunction):
    """``<f, g> = sum_k f(z_k) conj(g(z_k)) w(T(z_k)) nu_k``."""
    _check_same_support(f, g)
    space = f.space
    value = (f.values * np.conj(g.values) * space.tent_masses * space.masses).sum()
    return complex(value) if np.iscomplexobj(value) else float(value)


@dataclass(frozen=True)
class PairingBound:
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        if self.rhs > 0:
            return self.lhs / self.rhs
        return 1.0 if self.lhs == 0 else math.inf

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-12)


def _dual(p: float) -> float:
    if p == math.inf:
        return 1.0
    return math.inf if p == 1 else p / (p - 1)


def holder_bound(f: TentFunction, g: TentFunction, p: float, q: float) -> PairingBound:
    """``|<f, g>|`` against ``||f||_{T^p_q} ||g||_{T^p'_q'}`` for ``1 < p < inf`` and ``q >= 1``."""
    if not 1 < p < math.inf:
        raise ValueError(f"Expected 1 < {p=} < inf")
    if not q >= 1:
        raise ValueError(f"Expected {q=} >= 1")
    lhs = abs(pairing(f, g))
    rhs = tent_norm(f, p, q, NormMode.A) * tent_norm(g, _dual(p), _dual(q), NormMode.A)
    return PairingBound(lhs, rhs)


def sequence_pairing_bound(
    f: TentFunction, g: TentFunction, p: float, q: float
) -> PairingBound:
    """``|<f, g>|`` against ``||g||_{T^p'_inf} ||f||_{T^p_q}`` for unit masses and ``q < 1 < p``."""
    if not 0 < q < 1 < p < math.inf:
        raise ValueError(f"Expected 0 < {q=} < 1 < {p=} < inf")
    if not np.all(f.space.masses == 1):
        raise ValueError("Expected unit masses")
    lhs = abs(pairing(f, g))
    rhs = tent_norm(g, _dual(p), math.inf, NormMode.A) * tent_norm(f, p, q, NormMode.A)
    return PairingBound(lhs, rhs)


@dataclass(frozen=True, eq=False)
class StoppingProfile:
    """Stopping time of ``A_q'(g | h)`` against ``C1 C_q'(g)`` at the grid cells.

    `coverage` is ``w(T(z) ∩ H(z)) / w(T(z))`` at every cell ``z``, NaN when
    the tent of the cell holds no cells.
    """

    radii: np.ndarray
    h: np.ndarray
    C1: float
    C3: float
    truncated: np.ndarray
    c_values: np.ndarray
    coverage: np.ndarray

    def covered(self, radius: float = 5 / 6, bound: float = 0.5) -> bool:
        chosen = (self.radii >= radius) & np.isfinite(self.coverage)
        return bool(np.all(self.coverage[chosen] >= bound))


def _thresholds(space: TentSpace) -> np.ndarray:
    """``|zeta| / |z_k| - 1``: `z_k` enters ``Gamma^h(zeta)`` for ``h`` above it."""
    with np.errstate(divide="ignore"):
        return np.abs(space.grid.points)[:, None] / np.abs(space.points)[None, :] - 1


def stopping_constant(
    g: TentFunction, q_dual: float, c_values: np.ndarray | None = None
) -> float:
    """Chebyshev constant ``C3`` of the stopping time.

    ``C3 = sup_z w(T(z))^-1 int_T(z) A^q'(g | |z_k| > |z|) / C^q' dw``, the
    truncation taken at the exact radius of the vertex, so that
    ``w(T(z) - H(z)) <= C3 / C1^q' w(T(z))`` at every cell ``z``. Cells with
    ``C = 0`` carry no weighted mass and are left out.
    """
    space = g.space
    if c_values is None:
        c_values = space.c_values(g, q_dual)
    terms = np.abs(g.values) ** q_dual * space.masses
    powered = c_values**q_dual
    valid = powered > 0
    skipped = int(np.count_nonzero((space.cone @ terms > 0) & ~valid))
    if skipped:
        logging.debug(f"Skip {skipped} cells with C = 0 and a charged lens")
    weights = np.zeros(len(space.grid))
    weights[valid] = space.cell_weights[valid] / powered[valid]
    support = np.abs(space.points)
    best = 0.0
    for first in range(0, len(space.grid), CHUNK):
        vertices = space.grid.points[first : first + CHUNK]
        tents = lens_matrix(space.grid.points, vertices, space.aperture)
        # upper[i, j]: the part of A^q'(g)(cell_i) beyond the radius of vertex j
        beyond = support[:, None] > np.abs(vertices)[None, :]
        upper = space.cone @ (terms[:, None] * beyond)
        masses = space.cell_weights @ tents
        totals = weights @ (tents * upper)
        charged = masses > 0
        if charged.any():
            best = max(best, float((totals[charged] / masses[charged]).max()))
    return best


def stopping_time(
    g: TentFunction, q_dual: float, C1: float | None = None
) -> StoppingProfile:
    """``h(zeta) = sup{h : A_q'(g | h)(zeta) <= C1 C_q'(g)(zeta)}`` at every cell.

    The truncated aggregate is a step function of `h`, so the sup is the
    threshold of the first support point whose inclusion exceeds the bound.
    Without `C1` the constant ``C1^q' = 4 C3`` is used.
    """
    check_exponent(q_dual)
    space = g.space
    c_values = space.c_values(g, q_dual)
    C3 = stopping_constant(g, q_dual, c_values)
    if C1 is None:
        C1 = (4 * C3) ** (1 / q_dual) if C3 > 0 else 1.0
    check_positive(C1)
    terms = np.abs(g.values) ** q_dual * space.masses
    thresholds = _thresholds(space)
    bounds = (C1 * c_values) ** q_dual
    h = np.full(len(space.grid), math.inf)
    truncated = np.zeros(len(space.grid))
    degenerate = 0
    for i in range(len(space.grid)):
        members = np.nonzero(space.cone[i] & (terms > 0))[0]
        if members.size == 0:
            continue
        if c_values[i] == 0:
            h[i] = 0.0
            degenerate += 1
            continue
        levels = thresholds[i, members]
        order = np.argsort(levels, kind="stable")
        sums = np.cumsum(terms[members][order])
        exceeding = np.nonzero(sums > bounds[i])[0]
        if exceeding.size:
            h[i] = levels[order[exceeding[0]]]
            truncated[i] = terms[members][levels < h[i]].sum()
        else:
            truncated[i] = sums[-1]
    if degenerate:
        logging.warning(
            f"C = 0 with a charged lens at {degenerate} cells, stopping time set to 0"
        )
    return StoppingProfile(
        radii=np.abs(space.grid.points),
        h=h,
        C1=float(C1),
        C3=C3,
        truncated=truncated ** (1 / q_dual),
        c_values=c_values,
        coverage=_coverage(space, h),
    )


def _coverage(space: TentSpace, h: np.ndarray) -> np.ndarray:
    radii = np.abs(space.grid.points)
    coverage = np.full(len(space.grid), np.nan)
    for first in range(0, len(space.grid), CHUNK):
        z = space.grid.points[first : first + CHUNK]
        tents = lens_matrix(space.grid.points, z, space.aperture)
        masses = space.cell_weights @ tents
        # zeta in H(z) when |zeta| <= (1 + h(zeta)) |z|
        held = radii[:, None] <= (1 + h[:, None]) * np.abs(z)[None, :]
        covered = space.cell_weights @ (tents & held)
        valid = masses > 0
        block = coverage[first : first + CHUNK]
        block[valid] = covered[valid] / masses[valid]
    return coverage


def p0_average(
    g: Callable[[complex, np.ndarray], np.ndarray],
    weight: RadialWeight,
    z: complex,
    grid: PolarGrid,
    aperture: float = DEFAULT_APERTURE,
) -> float:
    """``P0(g)(z) = w(T(z))^-1 int_T(z) g(z, zeta) w(zeta) dA(zeta)`` by the cells of `grid`."""
    check_nonzero_point(z)
    inside = lens_matrix(grid.points, z, aperture)[:, 0]
    cell_masses = np.asarray(grid.cell_masses(weight))[inside]
    total = float(cell_masses.sum())
    if total <= 0:
        raise ValueError(f"Expected a tent with weighted mass at {z=}")
    values = np.broadcast_to(np.asarray(g(z, grid.points[inside])), cell_masses.shape)
    return (values * cell_masses).sum() / total


def mixed_norm(space: TentSpace, g: np.ndarray, p: float, q: float) -> float:
    """``||g||_{L^p L^q(nu, w)}`` for ``g[k, i] = g(z_k, cell_i)``.

    The inner norm is taken over the support in ``L^q(nu)``, the outer one
    over the cells in ``L^p_w``.
    """
    check_exponent(p, infinite=True)
    check_exponent(q, infinite=True)
    g = np.abs(np.asarray(g))
    if q == math.inf:
        inner = np.where(space.positive[:, None], g, 0.0).max(axis=0, initial=0.0)
    else:
        inner = (space.masses @ g**q) ** (1 / q)
    return space.lebesgue_norm(inner, p)


def cone_kernel_ratio(space: TentSpace, p: float, lam: float) -> dict:
    """Both sides of the cone integral of the kernel ``((1 - |z|) / |1 - conj(zeta) z|)^lam``.

    The right side counts the origin once, as ``nu({0})``, and not inside
    the lenses. ``0 / 0`` is reported as 1.
    """
    check_exponent(p)
    check_positive(lam)
    points, masses = space.points, space.masses
    lhs_inner = np.zeros(len(space.grid))
    for first in range(0, len(space.grid), CHUNK):
        zeta = space.grid.points[first : first + CHUNK, None]
        distance = np.abs(1 - np.conj(zeta) * points[None, :])
        kernel = ((1 - np.abs(points)[None, :]) / distance) ** lam
        lhs_inner[first : first + CHUNK] = kernel @ masses
    lhs = float((space.cell_weights * lhs_inner**p).sum())
    origin = points == 0
    cones = (space.cone & ~origin[None, :]) @ masses
    rhs = float((space.cell_weights * cones**p).sum()) + float(masses[origin].sum())
    if rhs > 0:
        ratio = lhs / rhs
    elif lhs == 0:
        logging.info("Cone integral of the zero measure, ratio set to 1")
        ratio = 1.0
    else:
        logging.warning("Cone integral with an empty right side")
        ratio = math.inf
    return {"lhs": lhs, "rhs": rhs, "ratio": ratio, "lambda": lam, "p": p}


def luecking_select(phis) -> tuple[np.ndarray, np.ndarray]:
    """Greedy doubling selection at every point.

    For every column the first positive ``phi_k`` is kept, then each next
    ``phi_k`` exceeding twice the last kept one. Returns the selection mask
    and the selected values (zero elsewhere).

    >>> luecking_select([[1.0], [3.0], [4.0]])[0][:, 0].tolist()
    [True, True, False]
    """
    phis = np.asarray(phis, dtype=float)
    if np.any(phis < 0):
        raise ValueError("Expected non-negative functions")
    selected = np.zeros(phis.shape, dtype=bool)
    last = np.zeros(phis.shape[1:])
    for k in range(phis.shape[0]):
        chosen = phis[k] > 2 * last
        chosen &= phis[k] > 0
        selected[k] = chosen
        last = np.where(chosen, phis[k], last)
    return selected, np.where(selected, phis, 0.0)


@dataclass(frozen=True)
class WeakEstimate:
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        if self.rhs > 0:
            return self.lhs / self.rhs
        return 1.0 if self.lhs == 0 else math.inf


def weak_estimate(f: TentFunction, q: float) -> WeakEstimate:
    """``||f||^q_{L^q(nu)}`` against ``||M_w(nu)||_{L^inf} ||f||^q_{T^q_inf}``."""
    check_exponent(q)
    space = f.space
    lhs = space.measure_norm(f, q) ** q
    sup = maximal_sup(space.nu, space.weight, 1.0, n_max=space.n_max, grid=space.grid)
    return WeakEstimate(lhs, sup * tent_norm(f, q, math.inf, NormMode.A) ** q)


def weak_estimate_p_gt_q(f: TentFunction, p: float, q: float) -> WeakEstimate:
    """``||f||^q_{L^q(nu)}`` against ``||M_w(nu)||_{L^(p/(p-q))_w} ||f||^q_{T^p_inf}``."""
    if not p > q:
        raise ValueError(f"Expected {p=} > {q=}")
    check_exponent(q)
    space = f.space
    lhs = space.measure_norm(f, q) ** q
    maximal = maximal_function(
        space.nu,
        space.weight,
        1.0,
        space.grid.points,
        n_max=space.n_max,
        grid=space.grid,
    )
    norm = tent_norm(f, p, math.inf, NormMode.A)
    rhs = space.lebesgue_norm(maximal, p / (p - q)) * norm**q
    return WeakEstimate(lhs, rhs)
