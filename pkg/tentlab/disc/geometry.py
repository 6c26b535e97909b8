"""Regions of the unit disc and arcs of the unit circle.

Angles are in radians and arcs are measured by their length, so that the
Carleson square of a point ``a`` sits over an arc of length ``1 - |a|``.

The lens of aperture `alpha` at ``zeta`` is

    Gamma(zeta) = {z : |arg z - arg zeta| < alpha (1 - |z| / |zeta|)}

and the tent of ``z`` is the set of all ``zeta`` whose lens contains ``z``.
The origin belongs to every lens.

>>> 0.45 in Lens(0.9)
True
>>> 0.9 in Lens(0.9)
False
>>> round(pseudo_distance(0.5, -0.5), 12)
0.8
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from tentlab.checks import (
    check_aperture,
    check_bounds,
    check_disc_point,
    check_non_negative,
    check_nonzero_point,
    check_positive,
)

__all__ = [
    "DEFAULT_APERTURE",
    "TWO_PI",
    "Annulus",
    "Arc",
    "DyadicTent",
    "Lens",
    "PseudoDisc",
    "Region",
    "Sector",
    "Square",
    "Tent",
    "TruncatedLens",
    "angle_difference",
    "carleson_vertex",
    "closed_tent_matrix",
    "dyadic_tent_incidence",
    "dyadic_tents",
    "dyadic_vertex",
    "dyadic_vertices",
    "lens_matrix",
    "normalize_arcs",
    "pseudo_distance",
    "region_contains",
    "tent_of_arc",
    "whitney_cover",
]

DEFAULT_APERTURE = 0.5
TWO_PI = 2 * math.pi
# arcs shorter than this are not subdivided further by the Whitney covering
MIN_ARC = 1e-9


def angle_difference(a, b):
    """``a - b`` reduced to ``[-pi, pi)``."""
    return np.remainder(np.asarray(a) - np.asarray(b) + math.pi, TWO_PI) - math.pi


def pseudo_distance(a, b):
    """Pseudohyperbolic distance ``|a - b| / |1 - conj(a) b|``, vectorized."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    value = np.abs(a - b) / np.abs(1 - np.conj(a) * b)
    return float(value) if value.ndim == 0 else value


def lens_matrix(zetas, points, aperture: float = DEFAULT_APERTURE) -> np.ndarray:
    """Incidence ``[i, k] = points[k] in Gamma(zetas[i])``.

    Rows of ``zeta = 0`` are empty; the origin belongs to every other lens.
    """
    zetas = np.atleast_1d(np.asarray(zetas, dtype=complex))
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    r_zeta = np.abs(zetas)[:, None]
    r_point = np.abs(points)[None, :]
    gap = np.abs(angle_difference(np.angle(zetas)[:, None], np.angle(points)[None, :]))
    with np.errstate(divide="ignore", invalid="ignore"):
        inside = gap < aperture * (1 - r_point / r_zeta)
    inside |= (points == 0)[None, :]
    inside &= r_zeta > 0
    return inside


def closed_tent_matrix(
    vertices, points, aperture: float = DEFAULT_APERTURE
) -> np.ndarray:
    """Incidence ``[j, k] = points[k]`` lies in the closed tent of ``vertices[j]``.

    The closed tent of ``a`` contains ``a`` itself, so a point always sees
    its own tent.
    """
    vertices = np.atleast_1d(np.asarray(vertices, dtype=complex))
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    r_vertex = np.abs(vertices)[:, None]
    r_point = np.abs(points)[None, :]
    gap = np.abs(
        angle_difference(np.angle(points)[None, :], np.angle(vertices)[:, None])
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        inside = (gap <= aperture * (1 - r_vertex / r_point)) & (r_point > 0)
    inside |= vertices[:, None] == points[None, :]
    inside |= (vertices == 0)[:, None]
    return inside


@dataclass(frozen=True)
class Arc:
    """Half-open arc ``{e^{it} : start <= t < start + length}``."""

    start: float
    length: float

    def __post_init__(self):
        check_bounds(self.length, 0.0, TWO_PI)
        object.__setattr__(self, "start", float(self.start % TWO_PI))

    @property
    def end(self) -> float:
        return self.start + self.length

    @property
    def mid(self) -> float:
        return (self.start + self.length / 2) % TWO_PI

    @property
    def is_full(self) -> bool:
        return self.length >= TWO_PI

    def offset(self, theta):
        """Counterclockwise distance from `start` to the angles `theta`."""
        return np.remainder(np.asarray(theta) - self.start, TWO_PI)

    def contains_angle(self, theta):
        return self.is_full | (self.offset(theta) < self.length)

    def contains(self, z):
        """Radial projection of the points `z` lies on the arc."""
        return self.contains_angle(np.angle(np.asarray(z, dtype=complex)))

    def contains_arc(self, other: "Arc") -> bool:
        if self.is_full:
            return True
        offset = float(self.offset(other.start))
        return offset + other.length <= self.length + 1e-12

    def dilate(self, factor: float) -> "Arc":
        """Concentric arc `factor` times longer, at most the whole circle."""
        check_positive(factor)
        length = min(factor * self.length, TWO_PI)
        return Arc(self.mid - length / 2, length)

    def __contains__(self, z) -> bool:
        return bool(self.contains(np.asarray([z]))[0])


class Region(ABC):
    """Subset of the unit disc with a vectorized membership predicate."""

    @abstractmethod
    def contains(self, z) -> np.ndarray:
        pass

    def __contains__(self, z) -> bool:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return bool(np.asarray(self.contains(z))[0])


def carleson_vertex(arc: Arc) -> complex:
    """``a_I = (1 - |I|) e^{i mid(I)}``, the vertex with ``S(a_I) = S(I)``."""
    return (1 - arc.length) * np.exp(1j * arc.mid)


def dyadic_vertex(arc: Arc) -> complex:
    """``z_I = (1 - 2|I| / pi) e^{i mid(I)}``, the vertex of a dyadic tent."""
    return (1 - 2 * arc.length / math.pi) * np.exp(1j * arc.mid)


@dataclass(frozen=True)
class Square(Region):
    """Carleson square ``S(I) = {z : |z| >= 1 - |I|, z / |z| in I}`` (closed)."""

    arc: Arc

    def __post_init__(self):
        if self.arc.length > 1:
            raise ValueError(
                f"Expected a square over an arc of length <= 1, got {self.arc}"
            )

    @staticmethod
    def at(a: complex) -> "Square":
        """The square ``S(a)`` over the arc of length ``1 - |a|`` centred at ``arg a``."""
        a = check_nonzero_point(a)
        length = 1 - abs(a)
        return Square(Arc(np.angle(a) - length / 2, length))

    @property
    def vertex(self) -> complex:
        return carleson_vertex(self.arc)

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        gap = np.abs(angle_difference(np.angle(z), self.arc.mid))
        return (np.abs(z) >= 1 - self.arc.length) & (gap <= self.arc.length / 2)


@dataclass(frozen=True)
class Tent(Region):
    """``T(z) = {zeta : z in Gamma(zeta)}``."""

    vertex: complex
    aperture: float = DEFAULT_APERTURE

    def __post_init__(self):
        object.__setattr__(self, "vertex", check_disc_point(self.vertex))
        check_aperture(self.aperture)

    def contains(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        inside = lens_matrix(zeta.ravel(), self.vertex, self.aperture)[:, 0]
        return inside.reshape(zeta.shape)


@dataclass(frozen=True)
class Lens(Region):
    """``Gamma(zeta)`` of aperture `aperture`."""

    vertex: complex
    aperture: float = DEFAULT_APERTURE

    def __post_init__(self):
        object.__setattr__(self, "vertex", check_nonzero_point(self.vertex))
        check_aperture(self.aperture)

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        return lens_matrix(self.vertex, z.ravel(), self.aperture)[0].reshape(z.shape)


@dataclass(frozen=True)
class TruncatedLens(Region):
    """``Gamma^h(zeta) = Gamma(zeta) ∩ {|z| > |zeta| / (1 + h)}``.

    ``h = 0`` gives the empty set and ``h = inf`` the whole lens.
    """

    vertex: complex
    h: float
    aperture: float = DEFAULT_APERTURE

    def __post_init__(self):
        object.__setattr__(self, "vertex", check_nonzero_point(self.vertex))
        check_non_negative(self.h)
        check_aperture(self.aperture)

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        inside = Lens(self.vertex, self.aperture).contains(z)
        if self.h == math.inf:
            return inside
        return inside & (np.abs(z) > abs(self.vertex) / (1 + self.h))


@dataclass(frozen=True)
class PseudoDisc(Region):
    """``Delta(c, r) = {z : pseudo_distance(c, z) < r}``."""

    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", check_disc_point(self.center))
        if not 0 < self.radius < 1:
            raise ValueError(f"Expected 0 < {self.radius=} < 1")

    def contains(self, z):
        return np.asarray(pseudo_distance(self.center, z)) < self.radius

    @property
    def euclidean(self) -> tuple[complex, float]:
        """Euclidean centre and radius of the disc."""
        c, r = self.center, self.radius
        denominator = 1 - r * r * abs(c) ** 2
        return c * (1 - r * r) / denominator, r * (1 - abs(c) ** 2) / denominator


@dataclass(frozen=True)
class Sector(Region):
    """Open sector over an arc together with the origin, ``T(I)`` for ``|I| >= 1``."""

    arc: Arc

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        offset = self.arc.offset(np.angle(z))
        return (z == 0) | self.arc.is_full | ((offset > 0) & (offset < self.arc.length))


@dataclass(frozen=True)
class Annulus(Region):
    """``{z : |z| >= radius}``."""

    radius: float

    def contains(self, z):
        return np.abs(np.asarray(z, dtype=complex)) >= self.radius


def tent_of_arc(arc: Arc, aperture: float = DEFAULT_APERTURE) -> Region:
    """``T(I)``: the tent of the vertex ``a_I`` when ``|I| < 1``, else the sector over I."""
    if arc.length < 1:
        return Tent(carleson_vertex(arc), aperture)
    return Sector(arc)


@dataclass(frozen=True)
class DyadicTent(Region):
    """Tent over the dyadic arc ``I_{n,k} = [pi k / 2^{n+2}, pi (k+1) / 2^{n+2})``.

    Membership is the union of the vertex tents of all dyadic sub-arcs of
    ``I_{n,k}`` down to level `depth`, so that tents over nested arcs are
    nested. `mirrored` rotates the arc by ``pi``.
    """

    level: int
    index: int
    depth: int | None = None
    mirrored: bool = False
    aperture: float = field(default=DEFAULT_APERTURE, compare=False)

    def __post_init__(self):
        check_non_negative(self.level)
        check_bounds(self.index, 0, 2 ** (self.level + 2) - 1)
        if self.depth is None:
            object.__setattr__(self, "depth", self.level)
        elif self.depth < self.level:
            raise ValueError(f"Expected {self.depth=} >= {self.level=}")

    @property
    def offset(self) -> float:
        return math.pi if self.mirrored else 0.0

    @property
    def arc(self) -> Arc:
        length = math.pi / 2 ** (self.level + 2)
        return Arc(self.offset + self.index * length, length)

    @property
    def vertex(self) -> complex:
        return dyadic_vertex(self.arc)

    def children(self) -> tuple["DyadicTent", "DyadicTent"]:
        return tuple(
            DyadicTent(
                self.level + 1,
                2 * self.index + i,
                max(self.depth, self.level + 1),
                self.mirrored,
                self.aperture,
            )
            for i in (0, 1)
        )

    def contains(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        modulus = np.abs(zeta)
        # position relative to the start of the arc, in [-pi, pi)
        theta = angle_difference(np.angle(zeta), self.arc.start)
        inside = np.zeros(zeta.shape, dtype=bool)
        for m in range(self.level, self.depth + 1):
            length = math.pi / 2 ** (m + 2)
            count = 2 ** (m - self.level)
            radius = 1 - 2 * length / math.pi
            local = np.floor(theta / length)
            for shift in (-1, 0, 1):
                k = np.clip(local + shift, 0, count - 1)
                gap = np.abs(angle_difference(theta, (k + 0.5) * length))
                with np.errstate(divide="ignore", invalid="ignore"):
                    bound = self.aperture * (1 - radius / modulus)
                    inside |= (modulus > 0) & (gap < bound)
        return inside


def dyadic_tents(
    n_max: int, full_circle: bool = False
) -> list[tuple[DyadicTent, complex]]:
    """Dyadic tents of levels ``0..n_max`` with their vertices.

    The family covers the arguments ``[0, pi)``; `full_circle` adds its
    rotation by ``pi``.

    >>> len(dyadic_tents(0))
    4
    >>> round(abs(dyadic_tents(2)[0][1]), 6)
    0.875
    """
    check_non_negative(n_max)
    halves = (False, True) if full_circle else (False,)
    tents = []
    for mirrored in halves:
        for n in range(n_max + 1):
            for k in range(2 ** (n + 2)):
                tent = DyadicTent(n, k, n_max, mirrored)
                tents.append((tent, tent.vertex))
    return tents


def dyadic_vertices(n_max: int, full_circle: bool = True) -> np.ndarray:
    tents = dyadic_tents(n_max, full_circle)
    return np.array([vertex for _, vertex in tents], dtype=complex)


def dyadic_tent_incidence(
    points, n_max: int, full_circle: bool = False, aperture: float = DEFAULT_APERTURE
) -> tuple[np.ndarray, np.ndarray]:
    """Pairs ``(j, k)`` such that ``points[k]`` lies in the j-th tent of ``dyadic_tents(n_max, full_circle)``.

    A point lies in a dyadic tent when it lies in the vertex tent of one of
    its dyadic sub-arcs, so the pairs are collected from the sub-arcs next to
    every point and propagated to all their ancestors.
    """
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    modulus = np.abs(points)
    theta = np.remainder(np.angle(points), TWO_PI)
    half = 2 ** (n_max + 3) - 4
    tents, owners = [], []
    for m in range(n_max + 1):
        length = math.pi / 2 ** (m + 2)
        radius = 1 - 2 * length / math.pi
        base = np.floor(theta / length).astype(int)
        for shift in (-1, 0, 1):
            arcs = np.remainder(base + shift, 2 ** (m + 3))
            gap = np.abs(angle_difference(theta, (arcs + 0.5) * length))
            with np.errstate(divide="ignore", invalid="ignore"):
                hit = (modulus > 0) & (gap < aperture * (1 - radius / modulus))
            if not full_circle:
                hit &= arcs < 2 ** (m + 2)
            index = np.nonzero(hit)[0]
            for n in range(m + 1):
                ancestors = arcs[index] >> (m - n)
                mirrored = ancestors >= 2 ** (n + 2)
                k = ancestors - mirrored * 2 ** (n + 2)
                tents.append(mirrored * half + 2 ** (n + 2) - 4 + k)
                owners.append(index)
    if not tents:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    keys = np.unique(np.concatenate(tents) * points.size + np.concatenate(owners))
    return keys // points.size, keys % points.size


def region_contains(region: Region, z):
    """Membership of a point (bool) or of an array of points (bool array)."""
    if np.ndim(z) == 0:
        return z in region
    return region.contains(z)


def normalize_arcs(arcs: list[Arc]) -> list[Arc]:
    """Disjoint arcs with the same union; ``[Arc(0, 2 pi)]`` for the whole circle."""
    pieces = []
    for arc in arcs:
        if arc.is_full:
            return [Arc(0.0, TWO_PI)]
        if arc.length <= 0:
            continue
        if arc.end > TWO_PI:
            pieces.append([arc.start, TWO_PI])
            pieces.append([0.0, arc.end - TWO_PI])
        else:
            pieces.append([arc.start, arc.end])
    if not pieces:
        return []
    pieces.sort()
    merged = [pieces[0]]
    for start, end in pieces[1:]:
        if start <= merged[-1][1] + 1e-12:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    if len(merged) > 1 and merged[0][0] <= 1e-12 and merged[-1][1] >= TWO_PI - 1e-12:
        first = merged.pop(0)
        merged[-1][1] = TWO_PI + first[1]
    if merged[0][1] - merged[0][0] >= TWO_PI - 1e-12:
        return [Arc(0.0, TWO_PI)]
    return [Arc(start, end - start) for start, end in merged]


def _whitney_component(start: float, end: float, min_length: float) -> list[Arc]:
    """Maximal dyadic arcs J of ``(start, end)`` with ``|J| <= dist(J, complement)``."""
    arcs = []
    length = math.pi / 2
    pending = [
        (k * length, length)
        for k in range(math.floor(start / length), math.ceil(end / length))
    ]
    while pending:
        left, size = pending.pop()
        right = left + size
        if right <= start or left >= end:
            continue
        if left >= start and right <= end and size <= min(left - start, end - right):
            arcs.append(Arc(left, size))
        elif size > min_length:
            pending.append((left, size / 2))
            pending.append((left + size / 2, size / 2))
    return arcs


def _whitney_full_circle(distance: float, xi: float) -> list[Arc]:
    quarter = math.pi / 2
    arcs = [Arc(xi + quarter, quarter), Arc(xi + 2 * quarter, quarter)]
    size = quarter
    while size >= distance and size > MIN_ARC:
        size /= 2
        arcs.append(Arc(xi + size, size))
        arcs.append(Arc(xi - 2 * size, size))
    arcs.append(Arc(xi, size))
    arcs.append(Arc(xi - size, size))
    return sorted(arcs, key=lambda arc: arc.start)


def whitney_cover(
    arcs: list[Arc],
    distance: float | None = None,
    xi: float = 0.0,
    min_length: float = MIN_ARC,
) -> list[Arc]:
    """Whitney covering of an open subset of the circle.

    For a proper subset the arcs are dyadic, pairwise disjoint, and each one is
    at most as long as its distance to the complement. For the whole circle
    `distance` is the distance from the circle to the reference set and `xi` the
    argument realizing it: the circle is cut in quarters and the two arcs
    ending at `xi` are halved until they are shorter than `distance`.

    >>> whitney_cover([])
    []
    >>> cover = whitney_cover([Arc(0, 2 * math.pi)], distance=0.1)
    >>> min(arc.length for arc in cover) > 0.05
    True
    """
    components = normalize_arcs(arcs)
    if not components:
        return []
    if components[0].is_full:
        if distance is None:
            raise ValueError(
                "Expected the distance to the reference set for the whole circle"
            )
        check_positive(distance)
        return _whitney_full_circle(distance, xi)
    cover = []
    for arc in components:
        cover.extend(_whitney_component(arc.start, arc.end, min_length))
    return sorted(cover, key=lambda arc: arc.start)
