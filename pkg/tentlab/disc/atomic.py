"""Atoms, atomic decompositions and the factorization of tent spaces.

A ``T^p_inf`` atom is supported in a tent ``T(I)`` and bounded by
``w(T(I))^(-1/p)``; a ``T^p_q`` atom satisfies

    sum_{z_k in T(I)} |a(z_k)|^q w(T(z_k)) nu_k <= w(T(I))^((p - q) / p)

Tent masses are measured with the cells of the grid of the tent space.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from tentlab.checks import check_exponent, check_positive
from tentlab.disc.geometry import (
    TWO_PI,
    Arc,
    Region,
    lens_matrix,
    normalize_arcs,
    tent_of_arc,
    whitney_cover,
)
from tentlab.disc.grid import SampledFunction
from tentlab.disc.maximal import MaximalMode, maximal_operator_image, maximal_sup
from tentlab.disc.measure import DiscMeasure
from tentlab.disc.tent import NormMode, TentFunction, TentSpace, tent_norm

__all__ = [
    "Atom",
    "AtomCheck",
    "Balayage",
    "Decomposition",
    "Factorization",
    "balayage",
    "decompose_tp_infty",
    "decompose_tp_q",
    "factorize",
    "validate_atom",
]

MAX_LEVELS = 200
MAX_DILATION = 2**20
# relative slack of the atom inequalities
TOLERANCE = 1e-9


def _arc_mass(space: TentSpace, arc: Arc) -> float:
    """``w(T(I))`` by the grid cells."""
    cells = np.asarray(tent_of_arc(arc, space.aperture).contains(space.grid.points))
    return float(space.cell_weights[cells].sum())


@dataclass(frozen=True, eq=False)
class Atom:
    """Values on the support of `space` vanishing outside the tent over `arc`.

    ``q = inf`` declares a ``T^p_inf`` atom, a finite `q` a ``T^p_q`` atom.
    """

    space: TentSpace
    arc: Arc
    values: np.ndarray
    p: float
    q: float = math.inf

    def __post_init__(self):
        check_exponent(self.p)
        check_exponent(self.q, infinite=True)
        values = np.asarray(self.values)
        if values.shape != self.space.points.shape:
            raise ValueError(
                f"Expected {self.space.points.size} values, got {values.shape}"
            )
        object.__setattr__(self, "values", values)

    @cached_property
    def region(self) -> Region:
        return tent_of_arc(self.arc, self.space.aperture)

    @cached_property
    def inside(self) -> np.ndarray:
        """Support points in the tent."""
        return np.asarray(self.region.contains(self.space.points))

    @cached_property
    def tent_mass(self) -> float:
        return _arc_mass(self.space, self.arc)

    def function(self) -> TentFunction:
        return TentFunction(self.space, self.values)


@dataclass(frozen=True)
class AtomCheck:
    valid: bool
    measured: float
    bound: float


def validate_atom(atom: Atom) -> AtomCheck:
    """Evaluate the defining inequality of `atom`.

    Values outside the tent make the measured side infinite.
    """
    space = atom.space
    values = np.abs(atom.values)
    charged = space.positive & (values > 0)
    if np.any(charged & ~atom.inside):
        return AtomCheck(False, math.inf, 0.0)
    mass = atom.tent_mass
    if atom.q == math.inf:
        measured = float(values[charged].max(initial=0.0))
        bound = mass ** (-1 / atom.p) if mass > 0 else math.inf
    else:
        terms = values**atom.q * space.tent_masses * space.masses
        measured = float(terms[atom.inside].sum())
        bound = mass ** ((atom.p - atom.q) / atom.p) if mass > 0 else 0.0
    if measured == 0:
        return AtomCheck(True, 0.0, bound)
    return AtomCheck(measured <= bound * (1 + TOLERANCE), measured, bound)


@dataclass(eq=False)
class Decomposition:
    """``f = sum lambda_j a_j`` with atoms of pairwise disjoint supports."""

    space: TentSpace
    p: float
    q: float
    terms: list[tuple[float, Atom]] = field(default_factory=list)
    dilation: float = 2.0
    source_norm: float = 0.0

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([coefficient for coefficient, _ in self.terms])

    @property
    def lambda_sum(self) -> float:
        """``sum |lambda_j|^p``."""
        return float((np.abs(self.lambdas) ** self.p).sum())

    @property
    def ratio(self) -> float:
        """``sum |lambda_j|^p / ||f||^p``; 1 for the empty decomposition of zero."""
        if self.source_norm == 0:
            return 1.0 if self.lambda_sum == 0 else math.inf
        return self.lambda_sum / self.source_norm**self.p

    def reconstruct(self) -> np.ndarray:
        values = np.zeros(self.space.points.size, dtype=complex)
        for coefficient, atom in self.terms:
            values += coefficient * atom.values
        return values

    def checks(self) -> list[AtomCheck]:
        return [validate_atom(atom) for _, atom in self.terms]

    def to_json(self) -> str:
        atoms = []
        for coefficient, atom in self.terms:
            indices = np.nonzero(atom.values)[0]
            values = atom.values[indices].astype(complex)
            atoms.append(
                {
                    "arc": [atom.arc.start, atom.arc.length],
                    "lambda": float(coefficient),
                    "indices": indices.tolist(),
                    "values": [[v.real, v.imag] for v in values.tolist()],
                }
            )
        document = {
            "p": self.p,
            "q": None if self.q == math.inf else self.q,
            "dilation": self.dilation,
            "source_norm": self.source_norm,
            "atoms": atoms,
        }
        return json.dumps(document, sort_keys=True, indent=2)

    @staticmethod
    def from_json(text: str, space: TentSpace) -> "Decomposition":
        document = json.loads(text)
        q = math.inf if document["q"] is None else document["q"]
        terms = []
        for item in document["atoms"]:
            values = np.zeros(space.points.size, dtype=complex)
            pairs = np.asarray(item["values"], dtype=float).reshape(-1, 2)
            indices = np.asarray(item["indices"], dtype=int)
            values[indices] = pairs[:, 0] + 1j * pairs[:, 1]
            if not np.any(values.imag):
                values = values.real
            arc = Arc(*item["arc"])
            terms.append((item["lambda"], Atom(space, arc, values, document["p"], q)))
        return Decomposition(
            space,
            document["p"],
            q,
            terms,
            document["dilation"],
            document["source_norm"],
        )


def _closed_levels(f: TentFunction, p: float) -> np.ndarray:
    """``A_inf(f)^p`` over the closed cone of every support point."""
    space = f.space
    values = np.abs(f.values)
    charged = np.where(space.positive, values, 0.0)
    points = space.points
    nonzero = points != 0
    levels = charged.copy()
    if np.any(nonzero):
        cones = lens_matrix(points[nonzero], points, space.aperture)
        levels[nonzero] = np.maximum(
            levels[nonzero],
            np.where(cones, charged[None, :], 0.0).max(axis=1, initial=0.0),
        )
    return levels**p


def _level_arcs(space: TentSpace, cells: np.ndarray, points: np.ndarray) -> list[Arc]:
    """Radial projection of the cells and points of a level set."""
    grid = space.grid
    arcs = [
        Arc(angle - width, 2 * width)
        for angle, width in zip(grid.angles[cells], grid.half_widths[cells])
    ]
    for z in space.points[points]:
        width = (1 - abs(z)) / 2
        arcs.append(Arc(np.angle(z) - width / 2, width))
    return normalize_arcs(arcs)


def _whitney(space: TentSpace, arcs: list[Arc], cells: np.ndarray) -> list[Arc]:
    if not arcs:
        return []
    if not arcs[0].is_full:
        return whitney_cover(arcs)
    outside = ~cells
    if not np.any(outside):
        return [Arc(0.0, TWO_PI)]
    defects = np.where(outside, space.grid.defects, np.inf)
    nearest = int(np.argmin(defects))
    distance = float(defects[nearest])
    return whitney_cover(arcs, distance, float(space.grid.angles[nearest]))


def _assign(space: TentSpace, cover: list[Arc], members: np.ndarray) -> np.ndarray:
    """Index of the Whitney arc under every member point, -1 when none."""
    owners = np.full(members.size, -1)
    angles = np.angle(space.points[members])
    for j, arc in enumerate(cover):
        free = owners < 0
        owners[free & np.asarray(arc.contains_angle(angles))] = j
    return owners


def _dilation(
    space: TentSpace, covers: dict[int, tuple[list[Arc], np.ndarray, np.ndarray]]
) -> float:
    """Smallest power of two ``c >= 2`` with every piece inside the tent of ``c I``."""
    c = 2.0
    while True:
        fits = True
        for cover, members, owners in covers.values():
            for j, arc in enumerate(cover):
                chosen = space.points[members[owners == j]]
                region = tent_of_arc(arc.dilate(c), space.aperture)
                if chosen.size and not np.all(region.contains(chosen)):
                    fits = False
                    break
            if not fits:
                break
        if fits:
            return c
        if c >= MAX_DILATION:
            raise ArithmeticError(f"No dilation up to {MAX_DILATION} fits the pieces")
        c *= 2
        logging.info(f"Grow dilation constant to {c}")


def decompose_tp_infty(f: TentFunction, p: float) -> Decomposition:
    """Atomic decomposition of `f` in ``T^p_inf`` by the level sets of ``A_inf(f)^p``.

    Level ``k`` collects the support points with ``2^k < A^p <= 2^(k+1)``,
    the projection of ``{A^p > 2^k}`` is covered by Whitney arcs ``I``, and
    every point goes to the atom over ``c I`` of the arc above it.
    """
    check_exponent(p)
    space = f.space
    norm = tent_norm(f, p, math.inf, NormMode.A)
    decomposition = Decomposition(space, p, math.inf, source_norm=norm)
    levels = _closed_levels(f, p)
    support = np.nonzero((f.values != 0) & (levels > 0))[0]
    if support.size == 0:
        return decomposition
    bands = np.ceil(np.log2(levels[support])).astype(int) - 1
    low, high = int(bands.min()), int(bands.max())
    if high - low >= MAX_LEVELS:
        logging.warning(f"Truncate levels {low}..{high} to the top {MAX_LEVELS}")
        low = high - MAX_LEVELS + 1
        bands = np.maximum(bands, low)
    cell_levels = space.area_values(f, math.inf) ** p
    covers = {}
    for k in range(low, high + 1):
        members = support[bands == k]
        if members.size == 0:
            continue
        cells = cell_levels > 2.0**k
        above = np.nonzero(levels > 2.0**k)[0]
        cover = _whitney(space, _level_arcs(space, cells, above), cells)
        owners = _assign(space, cover, members)
        if np.any(owners < 0):
            raise ArithmeticError(f"Points of level {k} outside the Whitney cover")
        covers[k] = (cover, members, owners)
    c = _dilation(space, covers)
    decomposition.dilation = c
    for k, (cover, members, owners) in covers.items():
        for j, arc in enumerate(cover):
            chosen = members[owners == j]
            if chosen.size == 0:
                continue
            atom_arc = arc.dilate(c)
            mass = _arc_mass(space, atom_arc)
            if mass <= 0:
                raise ArithmeticError(f"Tent over {atom_arc} has no weighted mass")
            coefficient = 2 ** ((k + 1) / p) * mass ** (1 / p)
            values = np.zeros(space.points.size, dtype=f.values.dtype)
            values[chosen] = f.values[chosen] / coefficient
            decomposition.terms.append((coefficient, Atom(space, atom_arc, values, p)))
    logging.info(f"Decompose into {len(decomposition)} atoms with dilation {c}")
    return decomposition


@dataclass(frozen=True, eq=False)
class Factorization:
    """``f = g h`` with ``g`` in ``T^p_inf`` and ``h`` in ``T^inf_q``."""

    g: TentFunction
    h: TentFunction
    s: float
    g_ratio: float
    h_norm: float
    k3: float = 0.0


def factorize(
    f: TentFunction, p: float, q: float, s: float | None = None
) -> Factorization:
    """Factor `f` through ``g^s(z) = w(T(z))^-1 int_T(z) M_w(A_q(f)^s) w dA``.

    `g_ratio` is ``||g||_{T^p_inf} / ||f||_{T^p_q}``, `h_norm` is
    ``||h||_{T^inf_q}`` and `k3` the smallest constant with
    ``|g(z)|^-q <= k3 (S mu)(z)`` on the support of `f`, for the balayage of
    ``d mu = |f|^q w(T(z)) d nu``.
    """
    check_exponent(p)
    check_exponent(q)
    s = p / 2 if s is None else s
    if not 0 < s < p:
        raise ValueError(f"Expected 0 < {s=} < {p=}")
    space = f.space
    area = space.area_values(f, q) ** s
    image = maximal_operator_image(SampledFunction(space.grid, area), space.weight, 1.0)
    shape = (space.points.size, len(space.grid))
    averages = space.p0(np.broadcast_to(image.values, shape))
    g_values = np.maximum(averages, 0.0) ** (1 / s)
    nonzero = f.values != 0
    if np.any(nonzero & (g_values == 0)):
        bad = int(np.count_nonzero(nonzero & (g_values == 0)))
        raise ArithmeticError(f"Factor g vanishes at {bad} points where f does not")
    h_values = np.zeros(space.points.size, dtype=f.values.dtype)
    h_values[nonzero] = f.values[nonzero] / g_values[nonzero]
    g = TentFunction(space, g_values)
    h = TentFunction(space, h_values)
    norm = tent_norm(f, p, q, NormMode.A)
    g_norm = tent_norm(g, p, math.inf, NormMode.A)
    g_ratio = g_norm / norm if norm > 0 else 1.0
    k3 = _balayage_constant(space, g_values, np.abs(f.values) ** q, q)
    return Factorization(g, h, s, g_ratio, tent_norm(h, math.inf, q), k3)


def _balayage_constant(
    space: TentSpace, g_values: np.ndarray, density: np.ndarray, q: float
) -> float:
    """``max |g|^-q / (S mu)`` over the charged support, ``B_mu = A_q^q(f)``."""
    psi = density * space.tent_masses
    charged = (psi > 0) & space.positive
    if not np.any(charged):
        return 0.0
    sweep = balayage(space, psi)
    s_mu = sweep.values[charged] / (psi[charged] * space.tent_masses[charged])
    return float((g_values[charged] ** -q / s_mu).max())


def _tent_average(atom: Atom, h: TentFunction, q: float) -> float:
    space = h.space
    if atom.tent_mass <= 0:
        return 0.0
    terms = np.abs(h.values) ** q * space.tent_masses * space.masses
    return (float(terms[atom.inside].sum()) / atom.tent_mass) ** (1 / q)


def decompose_tp_q(
    f: TentFunction, p: float, q: float, s: float | None = None
) -> Decomposition:
    """Atomic decomposition in ``T^p_q`` for ``p <= q``.

    With ``f = g h`` the ``T^p_inf`` atoms ``a_j`` of `g` become ``b_j = h a_j / H``,
    ``H`` the largest of ``||h||_{T^inf_q}`` and the ``q``-averages of `h` over
    the atom tents.
    """
    check_exponent(p)
    check_exponent(q)
    if not p <= q:
        raise ValueError(f"Expected {p=} <= {q=}")
    space = f.space
    norm = tent_norm(f, p, q, NormMode.A)
    if not np.any(f.values != 0):
        return Decomposition(space, p, q, source_norm=norm)
    factors = factorize(f, p, q, s)
    inner = decompose_tp_infty(factors.g, p)
    H = max(
        [factors.h_norm]
        + [_tent_average(atom, factors.h, q) for _, atom in inner.terms]
    )
    check_positive(H)
    decomposition = Decomposition(
        space, p, q, dilation=inner.dilation, source_norm=norm
    )
    for coefficient, atom in inner.terms:
        values = factors.h.values * atom.values / H
        scaled = Atom(space, atom.arc, values, p, q)
        decomposition.terms.append((coefficient * H, scaled))
    return decomposition


@dataclass(frozen=True, eq=False)
class Balayage:
    """``(S mu)_psi`` on the support, ``B_{mu,psi}`` on the cells and ``sup M_w((S mu)_psi mu)``."""

    values: np.ndarray
    cone_values: np.ndarray
    sup: float


def balayage(space: TentSpace, psi, n_max: int = 4) -> Balayage:
    """``(S mu)_psi(z) = psi(z) int_T(z) w / B_{mu,psi} dA`` with ``B_{mu,psi}(zeta) = int_Gamma(zeta) psi dmu``."""
    psi = np.asarray(psi, dtype=float)
    if psi.shape != space.points.shape or np.any(psi < 0):
        raise ValueError("Expected non-negative values on the support")
    cone_values = space.cone @ (psi * space.masses)
    values = np.zeros(space.points.size)
    charged = (psi > 0) & space.positive
    weights = space.cell_weights
    for k in np.nonzero(charged)[0]:
        cells = space.cone[:, k] & (weights > 0)
        if np.any(cone_values[cells] == 0):
            raise ArithmeticError(
                f"Balayage integrand undefined in the tent of {space.points[k]}"
            )
        values[k] = psi[k] * float((weights[cells] / cone_values[cells]).sum())
    if not np.any(charged):
        return Balayage(values, cone_values, 0.0)
    measure = DiscMeasure(
        space.points[charged], values[charged] * space.masses[charged]
    )
    sup = maximal_sup(
        measure, space.weight, 1.0, MaximalMode.DYADIC_SQUARE, n_max, space.grid
    )
    return Balayage(values, cone_values, sup)
