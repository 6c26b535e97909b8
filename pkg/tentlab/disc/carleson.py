"""Carleson conditions of a measure against measured embedding constants.

Every condition is evaluated at several grid depths; the verdict reads the
trend of successive values. A bounded verdict is numerical evidence at the
stated depths, never a proof.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from tentlab.checks import check_exponent, check_finite, check_non_negative
from tentlab.disc.analytic import (
    KernelCombination,
    RationalTestFunction,
    bergman_norm,
    kernel,
    nontangential_max,
    test_function,
)
from tentlab.disc.geometry import (
    DyadicTent,
    dyadic_tent_incidence,
    dyadic_tents,
    pseudo_distance,
)
from tentlab.disc.grid import PolarGrid
from tentlab.disc.maximal import (
    DEFAULT_LEVELS,
    MaximalMode,
    maximal_function,
    maximal_sup,
    square_ratios,
    tent_ratios,
)
from tentlab.disc.measure import DiscMeasure, counterexample, hyperbolic, lattice
from tentlab.disc.tent import NormMode, TentFunction, TentSpace, tent_norm
from tentlab.disc.weights import RadialWeight, square_masses

__all__ = [
    "BOUNDED_RATIO",
    "COUNTEREXAMPLE_DEPTHS",
    "DEFAULT_R",
    "DIVERGING_RATIO",
    "ConditionReport",
    "ConditionValue",
    "LevelSet",
    "Verdict",
    "VerdictTable",
    "condition_quantities",
    "counterexample_scan",
    "default_family",
    "embedding_constant",
    "level_set_ratio",
    "maximal_tent_levels",
    "phi_norm",
    "verdict",
]

DEFAULT_R = 0.5
DEFAULT_DEPTHS = (4, 5, 6)
COUNTEREXAMPLE_DEPTHS = (8, 20, 44)
BOUNDED_RATIO = 1.25
DIVERGING_RATIO = 1.5
CHUNK = 512


class Verdict(Enum):
    BOUNDED = "bounded"
    DIVERGING = "diverging"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ConditionValue:
    """Values of one quantity at increasing depths."""

    name: str
    depths: tuple[int, ...]
    values: tuple[float, ...]

    @property
    def trend(self) -> tuple[float, ...]:
        """Successive ratios, 1 for ``0 / 0``."""
        ratios = []
        for previous, current in zip(self.values, self.values[1:]):
            if previous > 0:
                ratios.append(current / previous)
            else:
                ratios.append(1.0 if current == 0 else math.inf)
        return tuple(ratios)

    @property
    def verdict(self) -> Verdict:
        """Inconclusive for fewer than three depths or any non-finite value."""
        trend = self.trend
        if len(trend) < 2 or not all(map(math.isfinite, self.values)):
            return Verdict.INCONCLUSIVE
        if all(ratio <= BOUNDED_RATIO for ratio in trend):
            return Verdict.BOUNDED
        if all(ratio >= DIVERGING_RATIO for ratio in trend):
            return Verdict.DIVERGING
        return Verdict.INCONCLUSIVE

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "depths": list(self.depths),
            "values": list(self.values),
            "trend": list(self.trend),
            "verdict": self.verdict.value,
        }


@dataclass(frozen=True)
class ConditionReport:
    regime: str
    conditions: tuple[ConditionValue, ...]

    def __getitem__(self, name: str) -> ConditionValue:
        for condition in self.conditions:
            if condition.name == name:
                return condition
        raise KeyError(name)

    def names(self) -> list[str]:
        return [condition.name for condition in self.conditions]

    def as_dict(self) -> dict:
        conditions = [c.as_dict() for c in self.conditions]
        return {"regime": self.regime, "conditions": conditions}


def _regime(p: float, q: float, n: int) -> str:
    if n == 0:
        return "q<p" if q < p else ("q=p" if q == p else "q>p")
    if q > p or 2 <= q == p:
        return "sup"
    if q < min(2, p):
        return "i"
    return "ii" if q == p else "iii"


def _delta_masses(mu: DiscMeasure, centers: np.ndarray, r: float) -> np.ndarray:
    """``mu(Delta(z, r))`` for every centre, the measure taken by its support."""
    support, masses = mu.support
    values = np.zeros(centers.size)
    if support.size == 0:
        return values
    for first in range(0, centers.size, CHUNK):
        block = centers[first : first + CHUNK, None]
        inside = np.asarray(pseudo_distance(block, support[None, :])) < r
        values[first : first + CHUNK] = inside @ masses
    return values


def _delta_sup(mu, weight, alpha, r, grid, nq=0.0) -> float:
    centers = grid.points
    defects = grid.defects
    denominators = square_masses(weight, defects) ** alpha * defects**nq
    numerators = _delta_masses(mu, centers, r)
    valid = denominators > 0
    return float((numerators[valid] / denominators[valid]).max(initial=0.0))


def _inverse_tents(space: TentSpace) -> np.ndarray:
    inverse = np.zeros(space.points.size)
    valid = space.tent_masses > 0
    inverse[valid] = 1 / space.tent_masses[valid]
    return inverse


def phi_norm(
    mu: DiscMeasure,
    weight: RadialWeight,
    p: float,
    q: float,
    n: int,
    r: float = DEFAULT_R,
    case: str | None = None,
    grid: PolarGrid | None = None,
    n_max: int = DEFAULT_LEVELS,
) -> float:
    """Tent norm over the hyperbolic measure of ``Phi(z) = mu(Delta(z, r)) / (w(S(z)) (1 - |z|)^(qn))``.

    `case` picks the target space: ``"i"`` is ``T^(p/(p-q))_(2/(2-q))`` for
    ``q < min(2, p)``, ``"ii"`` is ``T^inf_(2/(2-p))`` for ``q = p < 2`` and
    ``"iii"`` is ``T^(p/(p-q))_inf`` for ``2 <= q < p``.
    """
    check_exponent(p)
    check_exponent(q)
    check_non_negative(n)
    grid = grid or PolarGrid(DEFAULT_DEPTHS[-1])
    expected = _regime(p, q, max(n, 1))
    case = case or expected
    if case != expected:
        raise ValueError(f"Expected case {expected!r} for {p=} {q=}, got {case!r}")
    space = TentSpace(hyperbolic(grid.outer_defect), weight, grid, n_max=n_max)
    points = space.points
    defects = 1 - np.abs(points)
    denominators = square_masses(weight, defects) * defects ** (q * n)
    numerators = _delta_masses(mu.on_grid(grid), points, r)
    values = np.zeros(points.size)
    valid = denominators > 0
    values[valid] = numerators[valid] / denominators[valid]
    phi = TentFunction(space, values)
    match case:
        case "i":
            return tent_norm(phi, p / (p - q), 2 / (2 - q), NormMode.A)
        case "ii":
            return tent_norm(phi, math.inf, 2 / (2 - p), NormMode.C)
        case _:
            return tent_norm(phi, p / (p - q), math.inf, NormMode.A)


def _quantities(mu, weight, p, q, n, r, grid, n_max, lam) -> dict[str, float]:
    mu = mu.on_grid(grid)
    regime = _regime(p, q, n)
    match regime:
        case "q<p":
            s = p / (p - q)
            space = TentSpace(mu, weight, grid, n_max=n_max)
            masses = space.masses * _inverse_tents(space)
            B = space.cone @ masses
            if lam is None:
                lam = weight.certificate.lambda0 + 1
            psi = np.zeros(len(grid))
            for first in range(0, len(grid), CHUNK):
                block = grid.points[first : first + CHUNK, None]
                values = kernel(space.points[None, :], block, lam)
                psi[first : first + CHUNK] = values @ masses
            M = maximal_function(mu, weight, 1.0, grid.points, n_max=n_max, grid=grid)
            return {
                "B": space.lebesgue_norm(B, s),
                "Psi": space.lebesgue_norm(psi, s),
                "M": space.lebesgue_norm(M, s),
            }
        case "q=p" | "q>p":
            alpha = q / p
            return {
                "M_sup": maximal_sup(mu, weight, alpha, n_max=n_max, grid=grid),
                "delta": _delta_sup(mu, weight, alpha, r, grid),
            }
        case "sup":
            alpha = q / p
            family, ratios = square_ratios(mu, weight, alpha, n_max, grid, grid.points)
            scaled = ratios / family.lengths ** (n * q)
            return {
                "square": float(max(scaled.max(initial=0.0), 0.0)),
                "delta": _delta_sup(mu, weight, alpha, r, grid, n * q),
            }
        case _:
            value = phi_norm(mu, weight, p, q, n, r, regime, grid, n_max)
            return {f"Phi_{regime}": value}


def _measure_at(
    mu: DiscMeasure | Callable[[int], DiscMeasure], depth: int
) -> DiscMeasure:
    return mu(depth) if callable(mu) else mu


def condition_quantities(
    mu: DiscMeasure | Callable[[int], DiscMeasure],
    weight: RadialWeight,
    p: float,
    q: float,
    n: int = 0,
    r: float = DEFAULT_R,
    depths=DEFAULT_DEPTHS,
    n_max: int = 4,
    lam: float | None = None,
    workers: int = 1,
) -> ConditionReport:
    """Conditions for ``D^(n): A^p_w -> L^q(mu)`` at every grid depth.

    `mu` is a measure or a function of the depth returning its truncation.
    Regime ``q < p`` reports the ``L^(p/(p-q))_w`` norms of ``B_mu``,
    ``Psi_mu`` and ``M_w(mu)``; ``q >= p`` the sup of ``M_{w,q/p}(mu)`` and of
    the ``Delta`` quotient; ``n >= 1`` the conditions of the derivative.
    """
    check_exponent(p)
    check_exponent(q)
    check_non_negative(n)

    def evaluate(depth: int) -> dict[str, float]:
        logging.info(f"Evaluate conditions at depth {depth}")
        grid = PolarGrid(depth)
        return _quantities(_measure_at(mu, depth), weight, p, q, n, r, grid, n_max, lam)

    depths = tuple(depths)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        results = list(executor.map(evaluate, depths))
    names = list(results[0]) if results else []
    conditions = tuple(
        ConditionValue(name, depths, tuple(result[name] for result in results))
        for name in names
    )
    return ConditionReport(_regime(p, q, n), conditions)


def default_family(
    weight: RadialWeight,
    p: float,
    rng: np.random.Generator,
    radii=(0.5, 0.75, 0.9),
    angles: int = 4,
    combinations: int = 2,
    lam: float | None = None,
) -> list[RationalTestFunction]:
    """Test functions ``f_{a,p}`` on a polar sweep and random ``S_lam(b)`` on a lattice."""
    if lam is None:
        lam = weight.certificate.lambda0 + 1
    family: list[RationalTestFunction] = []
    for radius in radii:
        turn = rng.random()
        for j in range(angles):
            a = radius * np.exp(2j * math.pi * (j + turn) / angles)
            family.append(test_function(a, p, weight, lam))
    sequence = lattice(0.6, 0.1, rng)
    for _ in range(combinations):
        size = len(sequence)
        coefficients = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        family.append(KernelCombination(sequence.points, coefficients, lam))
    return family


def embedding_constant(
    mu: DiscMeasure,
    weight: RadialWeight,
    p: float,
    q: float,
    n: int,
    family: list[RationalTestFunction],
    grid: PolarGrid,
) -> float:
    """``max_f ||f^(n)||_{L^q(mu)} / ||f||_{A^p_w}`` over `family`, a lower bound of the norm."""
    check_exponent(p)
    check_exponent(q)
    support, masses = mu.on_grid(grid).support
    best = 0.0
    if support.size == 0:
        return best
    for F in family:
        norm = bergman_norm(F, weight, p, grid)
        if norm == 0:
            continue
        values = np.abs(F.derivative(support, n))
        best = max(best, float((values**q * masses).sum()) ** (1 / q) / norm)
    return best


@dataclass
class VerdictTable:
    report: ConditionReport
    embedding: ConditionValue
    flags: list[str] = field(default_factory=list)

    @property
    def brackets(self) -> list[dict]:
        """Ratio of the embedding constant to every condition at every depth."""
        rows = []
        for condition in self.report.conditions:
            triples = zip(condition.depths, condition.values, self.embedding.values)
            for depth, value, constant in triples:
                if value > 0:
                    ratio = constant / value
                else:
                    ratio = 1.0 if constant == 0 else math.inf
                rows.append(
                    {"condition": condition.name, "depth": depth, "ratio": ratio}
                )
        return rows

    def as_dict(self) -> dict:
        return {
            "conditions": self.report.as_dict()["conditions"],
            "embedding": self.embedding.as_dict(),
            "brackets": self.brackets,
            "flags": list(self.flags),
        }


def verdict(
    mu: DiscMeasure | Callable[[int], DiscMeasure],
    weight: RadialWeight,
    p: float,
    q: float,
    n: int,
    rng: np.random.Generator,
    depths=DEFAULT_DEPTHS,
    family: list[RationalTestFunction] | None = None,
    **options,
) -> VerdictTable:
    """Pair every condition with the embedding constant and flag opposite verdicts."""
    report = condition_quantities(mu, weight, p, q, n, depths=depths, **options)
    family = family if family is not None else default_family(weight, p, rng)
    constants = tuple(
        embedding_constant(
            _measure_at(mu, depth), weight, p, q, n, family, PolarGrid(depth)
        )
        for depth in report.conditions[0].depths
    )
    embedding = ConditionValue("embedding", tuple(depths), constants)
    table = VerdictTable(report, embedding)
    opposite = {Verdict.BOUNDED: Verdict.DIVERGING, Verdict.DIVERGING: Verdict.BOUNDED}
    for condition in report.conditions:
        if opposite.get(condition.verdict) is embedding.verdict:
            table.flags.append(
                f"{condition.name} is {condition.verdict.value}"
                f" while the embedding is {embedding.verdict.value}"
            )
    return table


def counterexample_scan(
    weight: RadialWeight,
    depths=COUNTEREXAMPLE_DEPTHS,
    r: float = DEFAULT_R,
    samples: int = 80,
) -> ConditionReport:
    """Square and ``Delta`` quotients of the counterexample truncated at ``1 - |z| = 2^-d``.

    Masses are exact radial integrals, so no grid is involved and the
    depths can go down to the precision of floating point.
    """
    squares, deltas = [], []
    for depth in depths:
        t_min = 2.0**-depth
        mu = counterexample(weight, t_min)
        squares.append(check_finite(maximal_sup(mu, weight, 1.0), "square quotient"))
        defects = np.geomspace(0.5, t_min, samples)
        masses = np.array([mu.radial.pseudo_disc(complex(1 - t), r) for t in defects])
        quotients = masses / square_masses(weight, defects)
        deltas.append(float(check_finite(quotients, "Delta quotients").max()))
        logging.info(
            f"Counterexample at depth {depth}:"
            f" square {squares[-1]:.4g} delta {deltas[-1]:.4g}"
        )
    depths = tuple(depths)
    return ConditionReport(
        "counterexample",
        (
            ConditionValue("square", depths, tuple(squares)),
            ConditionValue("delta", depths, tuple(deltas)),
        ),
    )


def level_set_ratio(
    mu: DiscMeasure,
    weight: RadialWeight,
    p: float,
    q: float,
    F: RationalTestFunction,
    level: float,
    grid: PolarGrid,
    n_max: int = 4,
) -> dict:
    """``mu(O)`` against ``(int_O M_{w,q/p}(mu)^(p/q) w dA)^(q/p)`` for ``O = {N(F) > level}``."""
    check_exponent(p)
    check_exponent(q)
    mu = mu.on_grid(grid)
    support, masses = mu.support
    charged = support != 0
    inside_points = np.zeros(support.size, dtype=bool)
    if np.any(charged):
        inside_points[charged] = nontangential_max(F, support[charged], grid) > level
    lhs = float(masses[inside_points].sum())
    cells = nontangential_max(F, grid.points, grid) > level
    maximal = maximal_function(
        mu, weight, q / p, grid.points[cells], n_max=n_max, grid=grid
    )
    cell_masses = np.asarray(grid.cell_masses(weight))[cells]
    rhs = float((cell_masses * maximal ** (p / q)).sum()) ** (q / p)
    if rhs > 0:
        ratio = lhs / rhs
    else:
        ratio = 1.0 if lhs == 0 else math.inf
    return {"level": level, "lhs": lhs, "rhs": rhs, "ratio": ratio}


@dataclass(frozen=True, eq=False)
class LevelSet:
    """``E_k = {M~(mu) > 2^k}`` on the cells with its maximal dyadic tents.

    `members` holds the cells of every maximal tent and `remainders` the
    cells of ``G(T)``.
    """

    k: int
    cells: np.ndarray
    tents: list[DyadicTent]
    members: list[np.ndarray]
    remainders: list[np.ndarray]
    global_term: bool

    @property
    def union(self) -> np.ndarray:
        """Cells covered by the maximal tents, or all cells past the global term."""
        covered = np.full(self.cells.shape, self.global_term)
        for members in self.members:
            covered |= members
        return covered


def _is_maximal(
    j: int,
    tents: list[DyadicTent],
    index: dict,
    ratios: np.ndarray,
    threshold: float,
) -> bool:
    parent = tents[j]
    while parent.level > 0:
        parent = DyadicTent(
            parent.level - 1, parent.index // 2, parent.depth, parent.mirrored
        )
        if ratios[index[(parent.level, parent.index, parent.mirrored)]] > threshold:
            return False
    return True


def maximal_tent_levels(
    mu: DiscMeasure, weight: RadialWeight, grid: PolarGrid, n_max: int = 4
) -> tuple[np.ndarray, list[LevelSet]]:
    """Level sets of the dyadic tent maximal function on the cells of `grid`.

    The maximal tents of ``E_k`` are the dyadic tents with ``mu(T) / w(T) > 2^k``
    whose ancestors all fall below; ``G(T)`` is ``T`` minus ``E_(k+1)``.
    Returns the maximal function on the cells and the levels, lowest first.
    """
    values = maximal_function(
        mu, weight, 1.0, grid.points, MaximalMode.DYADIC_TENT, n_max, grid
    )
    positive = values[values > 0]
    if positive.size == 0:
        return values, []
    ratios, glob = tent_ratios(mu, weight, 1.0, n_max, grid)
    tents = [tent for tent, _ in dyadic_tents(n_max, full_circle=True)]
    index = {(t.level, t.index, t.mirrored): j for j, t in enumerate(tents)}
    tent_ids, cell_ids = dyadic_tent_incidence(grid.points, n_max, full_circle=True)
    levels = []
    low = math.floor(math.log2(positive.min())) - 1
    for k in range(low, math.floor(math.log2(values.max())) + 1):
        threshold = 2.0**k
        chosen = [
            j
            for j in range(len(tents))
            if ratios[j] > threshold and _is_maximal(j, tents, index, ratios, threshold)
        ]
        upper = values > 2 * threshold
        members = []
        for j in chosen:
            cells = np.zeros(len(grid), dtype=bool)
            cells[cell_ids[tent_ids == j]] = True
            members.append(cells)
        levels.append(
            LevelSet(
                k,
                values > threshold,
                [tents[j] for j in chosen],
                members,
                [cells & ~upper for cells in members],
                glob > threshold,
            )
        )
    return values, levels
