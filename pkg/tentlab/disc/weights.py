"""Radial weights of the unit disc.

A radial weight `w` is a non-negative integrable function of the radius.
Everything about it that matters for Bergman and tent spaces is carried by
its tail ``hat(r) = int_r^1 w(s) ds``. A weight is doubling when
``hat(r) <= C hat((1 + r) / 2)``.

All radial integrals are taken in the distance to the boundary ``t = 1 - r``
and evaluated after the substitution ``t = exp(-v)``, which keeps adaptive
quadrature accurate for radii very close to 1.

>>> tail(constant, 0.5)
0.5
>>> round(region_mass(constant, Square.at(0.5)), 6)
0.059683
>>> round(region_mass(constant, Tent(0.5)), 6)
0.039789
"""

import csv
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate, special

from tentlab.checks import (
    check_exponent,
    check_finite,
    check_nonzero_point,
    check_radius,
)
from tentlab.disc.geometry import (
    DEFAULT_APERTURE,
    Annulus,
    Arc,
    Region,
    Sector,
    Square,
    Tent,
)
from tentlab.disc.grid import PolarGrid, default_grid

__all__ = [
    "DOUBLING_CAP",
    "KERNEL_BRACKET",
    "ConstantWeight",
    "DoublingReport",
    "ExponentialWeight",
    "LogWeight",
    "RadialWeight",
    "StandardWeight",
    "TableWeight",
    "TailTable",
    "WeightKind",
    "comparability",
    "constant",
    "doubling_report",
    "exponential",
    "kernel_integral",
    "log_weight",
    "omega_star",
    "radial_integral",
    "region_mass",
    "square_masses",
    "tail",
    "tent_masses",
    "weight_from_spec",
]

DOUBLING_CAP = 1e6
KERNEL_BRACKET = 10.0
LAMBDA_STEP = 0.25
LAMBDA_LIMIT = 16.0
COMPARABILITY_SAMPLES = 24


def radial_integral(
    func: Callable[[float], float], t_low: float, t_high: float
) -> float:
    """Integral of `func(t)` over ``t_low <= t <= t_high`` with ``t = 1 - r``."""
    if t_high <= t_low:
        return 0.0
    v_low = -math.log(t_high)
    v_high = math.inf if t_low <= 0 else -math.log(t_low)

    def integrand(v):
        t = math.exp(-v)
        if t == 0.0:
            # underflow; t g(t) -> 0 for an integrable g
            return 0.0
        return float(func(t)) * t

    value, _ = integrate.quad(
        integrand, v_low, v_high, epsabs=0.0, epsrel=1e-10, limit=200
    )
    return value


class TailTable:
    """Cached values of ``F(t) = int_0^t g(s) ds`` for vectorized lookups.

    Nodes are equidistant in ``v = -log t`` and `F` is interpolated linearly
    in ``log F``. The table is extended on demand when a smaller `t` is asked.
    """

    def __init__(self, integrand: Callable[[float], float], step: float = 0.025):
        self._integrand = integrand
        self._step = step
        self.reset()

    @property
    def limit(self) -> float:
        """Largest tabulated ``v = -log t``."""
        return self._limit

    def reset(self):
        """Forget every tabulated value."""
        self._limit = -1.0
        self._nodes = np.zeros(1)
        self._logs = np.zeros(1)

    def extends(self, v: float):
        if v > self.limit:
            self._calculate(max(v, 2 * self.limit, 24.0))

    def _calculate(self, v_max: float):
        logging.info(f"Recalculate tail table up to v={v_max:.1f}")
        nodes = np.arange(0.0, v_max + self._step, self._step)
        ts = np.exp(-nodes)
        values = np.empty_like(ts)
        values[-1] = radial_integral(self._integrand, 0.0, ts[-1])
        for i in range(len(ts) - 2, -1, -1):
            step = radial_integral(self._integrand, ts[i + 1], ts[i])
            values[i] = values[i + 1] + step
        check_finite(values, "tail table")
        self._nodes = nodes
        self._logs = np.log(np.maximum(values, np.finfo(float).tiny))
        self._limit = float(nodes[-1])

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        positive = t > 0
        v = -np.log(np.where(positive, np.minimum(t, 1.0), 1.0))
        self.extends(float(v.max(initial=0.0)))
        values = np.exp(np.interp(v, self._nodes, self._logs))
        return np.where(positive, values, 0.0)


class WeightKind(Enum):
    STANDARD = "standard"
    LOG = "log"
    EXPONENTIAL = "exponential"
    TABLE = "table"


class RadialWeight(ABC):
    """Radial weight given through ``defect(t) = w(1 - t)``."""

    kind: WeightKind

    def __call__(self, r):
        return self.defect(1.0 - np.asarray(r, dtype=float))

    @abstractmethod
    def defect(self, t):
        """Value of the weight at radius ``1 - t``, vectorized."""

    def hat(self, t: float) -> float:
        """Tail ``int_{1-t}^1 w(s) ds``."""
        return radial_integral(self.defect, 0.0, t)

    def annulus(self, t: float) -> float:
        """Weighted area ``int_{1-t}^1 w(s) 2s ds`` of the annulus ``|z| >= 1 - t``."""
        return radial_integral(lambda s: self.defect(s) * 2 * (1 - s), 0.0, t)

    def tent(self, t: float) -> float:
        """``int_0^t (t - s) w(1 - s) ds``, the radial part of the mass of a tent."""
        return radial_integral(lambda s: (t - s) * self.defect(s), 0.0, t)

    @cached_property
    def _hat_table(self) -> TailTable:
        return TailTable(self.defect)

    @cached_property
    def _annulus_table(self) -> TailTable:
        return TailTable(lambda s: self.defect(s) * 2 * (1 - s))

    @cached_property
    def _moment_table(self) -> TailTable:
        return TailTable(lambda s: s * self.defect(s))

    def hat_values(self, t) -> np.ndarray:
        return self._hat_table(t)

    def annulus_values(self, t) -> np.ndarray:
        return self._annulus_table(t)

    def tent_values(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.maximum(t * self._hat_table(t) - self._moment_table(t), 0.0)

    def ring_masses(self, edges: np.ndarray) -> np.ndarray:
        """Weighted areas of the rings between consecutive `edges` (decreasing t)."""
        return np.array(
            [
                radial_integral(lambda s: self.defect(s) * 2 * (1 - s), lo, hi)
                for hi, lo in zip(edges[:-1], edges[1:])
            ]
        )

    @property
    def total(self) -> float:
        """Weighted area of the whole disc."""
        return self.annulus(1.0)

    @cached_property
    def certificate(self) -> "DoublingReport":
        return doubling_report(self)

    def __repr__(self):
        return self.kind.value


class StandardWeight(RadialWeight):
    """``w(r) = (1 - r^2)^alpha`` with ``alpha > -1``."""

    kind = WeightKind.STANDARD

    def __init__(self, alpha: float = 0.0):
        if not alpha > -1:
            raise ValueError(f"Expected {alpha=} > -1")
        self.alpha = alpha

    def defect(self, t):
        t = np.asarray(t, dtype=float)
        return (t * (2 - t)) ** self.alpha

    def __repr__(self):
        return f"standard(alpha={self.alpha:g})"


class ConstantWeight(StandardWeight):
    """The weight ``w = 1``; every radial integral has a closed form."""

    def __init__(self):
        super().__init__(0.0)

    def defect(self, t):
        return np.ones_like(np.asarray(t, dtype=float))

    def hat(self, t: float) -> float:
        return float(t)

    def annulus(self, t: float) -> float:
        return float(t * (2 - t))

    def tent(self, t: float) -> float:
        return float(t * t / 2)

    def hat_values(self, t):
        return np.asarray(t, dtype=float)

    def annulus_values(self, t):
        t = np.asarray(t, dtype=float)
        return t * (2 - t)

    def tent_values(self, t):
        t = np.asarray(t, dtype=float)
        return t * t / 2

    def ring_masses(self, edges):
        return self.annulus_values(edges[:-1]) - self.annulus_values(edges[1:])

    def __repr__(self):
        return "constant"


class LogWeight(RadialWeight):
    """``w(r) = 1 / ((1 - r) log(e / (1 - r))^2)`` with ``hat(r) = 1 / log(e / (1 - r))``.

    Doubling, but ``hat(r) / (w(r) (1 - r))`` is unbounded.
    """

    kind = WeightKind.LOG

    def defect(self, t):
        t = np.asarray(t, dtype=float)
        safe = np.where(t > 0, t, 1.0)
        return np.where(t > 0, 1.0 / (safe * (1 - np.log(safe)) ** 2), np.inf)

    def hat(self, t: float) -> float:
        return 0.0 if t <= 0 else 1.0 / (1 - math.log(t))

    def hat_values(self, t):
        t = np.asarray(t, dtype=float)
        safe = np.where(t > 0, t, 1.0)
        return np.where(t > 0, 1.0 / (1 - np.log(safe)), 0.0)

    def tent_values(self, t):
        """``int_0^t hat(s) ds = e E1(1 - log t)``."""
        t = np.asarray(t, dtype=float)
        safe = np.where(t > 0, t, 1.0)
        return np.where(t > 0, math.e * special.exp1(1 - np.log(safe)), 0.0)

    def annulus_values(self, t):
        t = np.asarray(t, dtype=float)
        return 2 * (1 - t) * self.hat_values(t) + 2 * self.tent_values(t)

    def tent(self, t: float) -> float:
        return float(self.tent_values(t))

    def annulus(self, t: float) -> float:
        return float(self.annulus_values(t))

    def ring_masses(self, edges):
        return self.annulus_values(edges[:-1]) - self.annulus_values(edges[1:])


class ExponentialWeight(RadialWeight):
    """``w(r) = exp(-1 / (1 - r))``, too fast a decay to be doubling."""

    kind = WeightKind.EXPONENTIAL

    def defect(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)

    def hat(self, t: float) -> float:
        return 0.0 if t <= 0 else float(t * special.expn(2, 1.0 / t))

    def hat_values(self, t):
        t = np.asarray(t, dtype=float)
        safe = np.where(t > 0, t, 1.0)
        return np.where(t > 0, safe * special.expn(2, 1.0 / safe), 0.0)


class TableWeight(RadialWeight):
    """Piecewise linear weight through the nodes ``(r_i, w_i)``."""

    kind = WeightKind.TABLE

    def __init__(self, radii, values):
        radii = np.asarray(radii, dtype=float)
        values = np.asarray(values, dtype=float)
        if radii.ndim != 1 or radii.shape != values.shape or radii.size < 2:
            raise ValueError(f"Expected matching node lists, got {radii.shape=}")
        if not (np.all(radii >= 0) and np.all(radii < 1)):
            raise ValueError("Expected 0 <= r < 1 for every node")
        if not np.all(np.diff(radii) > 0):
            raise ValueError("Expected strictly increasing radii")
        if not np.all(values >= 0):
            raise ValueError("Expected non-negative weight values")
        self.radii = radii
        self.values = values

    @staticmethod
    def from_csv(path: str | Path) -> "TableWeight":
        radii, values = [], []
        with open(path, newline="") as stream:
            for row in csv.reader(stream):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    r, w = float(row[0]), float(row[1])
                except ValueError:
                    if radii:
                        raise
                    continue  # header line
                radii.append(r)
                values.append(w)
        return TableWeight(radii, values)

    def defect(self, t):
        return np.interp(1.0 - np.asarray(t, dtype=float), self.radii, self.values)

    def __repr__(self):
        return f"table({self.radii.size})"


constant = ConstantWeight()
log_weight = LogWeight()
exponential = ExponentialWeight()


def weight_from_spec(kind: str, **params) -> RadialWeight:
    """Build a preset weight from its name.

    >>> weight_from_spec("standard", alpha=1)
    standard(alpha=1)
    """
    match kind:
        case "constant":
            return ConstantWeight()
        case "standard":
            alpha = float(params.get("alpha", 0.0))
            return ConstantWeight() if alpha == 0 else StandardWeight(alpha)
        case "log":
            return LogWeight()
        case "exponential":
            return ExponentialWeight()
        case "table":
            return TableWeight.from_csv(params["path"])
        case _:
            raise ValueError(f"Unknown weight {kind=}")


def tail(weight: RadialWeight, r: float) -> float:
    """``hat(r) = int_r^1 w(s) ds``."""
    check_radius(r)
    return weight.hat(1.0 - r)


def _square_mass(weight: RadialWeight, length: float) -> float:
    return length / (2 * math.pi) * weight.annulus(length)


def _tent_mass(weight: RadialWeight, z: complex, alpha: float) -> float:
    return 2 * alpha / math.pi * weight.tent(1.0 - abs(z))


def region_mass(
    weight: RadialWeight, region: Region, grid: PolarGrid | None = None
) -> float:
    """Weighted area of a region.

    Squares, tents, sectors and annuli have closed radial forms; every other
    region is integrated on the grid (cell centres attribute cells).
    """
    match region:
        case Square(arc=arc):
            if arc.length >= 1:
                raise ValueError(
                    f"Expected a square with a vertex off the origin, got {region}"
                )
            return _square_mass(weight, arc.length)
        case Tent(vertex=z, aperture=alpha):
            return _tent_mass(weight, z, alpha)
        case Sector(arc=arc):
            return arc.length / (2 * math.pi) * weight.total
        case Annulus(radius=r):
            return weight.annulus(1.0 - r)
        case Arc():
            raise ValueError(f"Expected a region of the disc, got {region}")
        case _:
            grid = grid or default_grid()
            inside = region.contains(grid.points)
            return float(grid.cell_masses(weight)[inside].sum())


def square_masses(weight: RadialWeight, lengths) -> np.ndarray:
    """Masses of the squares with arcs of the given `lengths`, vectorized."""
    lengths = np.asarray(lengths, dtype=float)
    return lengths / (2 * math.pi) * weight.annulus_values(lengths)


def tent_masses(
    weight: RadialWeight, points, aperture: float = DEFAULT_APERTURE
) -> np.ndarray:
    """Masses of the tents with the given vertices, vectorized."""
    defects = 1.0 - np.abs(np.asarray(points))
    return 2 * aperture / math.pi * weight.tent_values(defects)


def omega_star(weight: RadialWeight, z: complex) -> float:
    """``int_{|z|}^1 w(s) log(s / |z|) s ds``."""
    check_nonzero_point(z)
    t_z = 1.0 - abs(z)
    log_z = math.log1p(-t_z)
    return radial_integral(
        lambda s: weight.defect(s) * (math.log1p(-s) - log_z) * (1 - s), 0.0, t_z
    )


def kernel_integral(weight: RadialWeight, zeta: complex, lam: float) -> float:
    """``int_D w(z) / |1 - conj(zeta) z|^(lam + 1) dA(z)``.

    The angular mean of the kernel is a Gauss hypergeometric function of
    ``|zeta z|^2``, so only a radial integral remains.
    """
    check_exponent(lam + 1)
    rho = abs(zeta)
    a = (lam + 1) / 2

    def integrand(s):
        mean = special.hyp2f1(a, a, 1, (rho * (1 - s)) ** 2)
        return weight.defect(s) * 2 * (1 - s) * mean

    return radial_integral(integrand, 0.0, 1.0)


@dataclass(frozen=True)
class DoublingReport:
    """Empirical doubling certificate of a weight on radii up to `r_max`."""

    member: bool
    C: float
    beta: float
    gamma: float
    lambda0: float
    kernel_spread: float
    square_tent: float
    tent_star: float
    r_max: float

    def as_dict(self) -> dict:
        return asdict(self)


def _ratio(numerator: float, denominator: float) -> float:
    if denominator > 0:
        return numerator / denominator
    return 1.0 if numerator == 0 else math.inf


def _beta(hats: np.ndarray, defects: np.ndarray, C: float) -> float:
    # pairs r < t, that is defect(r) > defect(t)
    i, j = np.triu_indices(len(defects), k=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        excess = np.log(hats[i] / (C * hats[j]))
        spread = np.log(defects[i] / defects[j])
        needed = np.where(excess > 0, excess / spread, 0.0)
    beta = float(np.nanmax(needed, initial=0.0))
    return math.ceil(beta * 64) / 64


def _gamma(weight: RadialWeight, defects: np.ndarray, C: float) -> float:
    def worst(gamma: float) -> float:
        ratios = [
            _ratio(
                radial_integral(lambda s: (t / s) ** gamma * weight.defect(s), t, 1.0),
                weight.hat(t),
            )
            for t in defects
            if t < 1
        ]
        return max(ratios, default=0.0)

    low, high = 0.0, 64.0
    if worst(low) <= C:
        return low
    if worst(high) > C:
        return math.nan
    for _ in range(30):
        middle = (low + high) / 2
        if worst(middle) <= C:
            high = middle
        else:
            low = middle
    return math.ceil(high * 64) / 64


def _lambda0(weight: RadialWeight, defects: np.ndarray) -> tuple[float, float]:
    hats = np.array([weight.hat(t) for t in defects])
    spread = math.inf
    for lam in np.arange(0.0, LAMBDA_LIMIT + LAMBDA_STEP / 2, LAMBDA_STEP):
        quotients = np.array(
            [
                kernel_integral(weight, 1.0 - t, lam) * t**lam / hat
                for t, hat in zip(defects, hats)
                if hat > 0
            ]
        )
        if quotients.size == 0:
            continue
        check_finite(quotients, f"kernel quotients at {lam=}")
        spread = float(quotients.max() / quotients.min())
        if spread <= KERNEL_BRACKET:
            return float(lam), spread
    logging.warning(f"No kernel exponent up to {LAMBDA_LIMIT} for {weight!r}")
    return math.nan, spread


def comparability(
    weight: RadialWeight, samples: int = COMPARABILITY_SAMPLES
) -> tuple[float, float]:
    """Largest two sided ratios ``w(S) : w(T)`` and ``w(T) : w*`` over ``1 - |z|`` in [0.01, 0.5].

    The radii are `samples` log spaced defects; doubling the samples minus
    one keeps the coarser scan.
    """
    square_tent, tent_star = 1.0, 1.0
    for t in np.geomspace(0.5, 0.01, samples):
        z = 1.0 - t
        square = _square_mass(weight, t)
        tent = _tent_mass(weight, z, DEFAULT_APERTURE)
        star = omega_star(weight, z)
        check_finite([square, tent, star], f"region masses at {t=:.3g}")
        if square > 0 and tent > 0 and star > 0:
            square_tent = max(square_tent, square / tent, tent / square)
            tent_star = max(tent_star, tent / star, star / tent)
    return square_tent, tent_star


def doubling_report(
    weight: RadialWeight, r_max: float = 0.99, cap: float = DOUBLING_CAP
) -> DoublingReport:
    """Empirical doubling constant and exponents of a weight.

    `C` is the largest ratio ``hat(r) / hat((1 + r) / 2)`` on the scan grid,
    `beta` and `gamma` the smallest exponents (multiples of 1/64) for which
    the two integral forms of the doubling condition hold with that `C`, and
    `lambda0` the smallest exponent (multiple of 1/4) for which the kernel
    integral stays within `KERNEL_BRACKET` of ``hat(zeta) / (1 - |zeta|)^lambda``.
    """
    check_radius(r_max)
    defects = np.geomspace(1.0, 1.0 - r_max, 200)
    hats = check_finite(np.array([weight.hat(t) for t in defects]), "tails")
    halves = check_finite(np.array([weight.hat(t / 2) for t in defects]), "tails")
    ratios = np.array([_ratio(h, g) for h, g in zip(hats, halves)])
    C = float(ratios.max())
    member = bool(np.all(hats > 0) and C <= cap)
    if member:
        beta = _beta(hats, defects, C)
        gamma = _gamma(weight, defects[::5], C)
        lambda0, spread = _lambda0(weight, np.geomspace(1.0, 1.0 - r_max, 16))
    else:
        logging.info(f"Weight {weight!r} is not doubling, ratio {C:.3g} > {cap:.3g}")
        beta = gamma = lambda0 = spread = math.nan
    square_tent, tent_star = comparability(weight)
    return DoublingReport(
        member=member,
        C=C,
        beta=beta,
        gamma=gamma,
        lambda0=lambda0,
        kernel_spread=spread,
        square_tent=square_tent,
        tent_star=tent_star,
        r_max=r_max,
    )
