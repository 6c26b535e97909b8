import math

import numpy as np


def check_bounds(x: float, lower: float, upper: float) -> float:
    if not lower <= x <= upper:
        raise ValueError(f"Expected {lower=} <= {x=} <= {upper=}")
    return x


def check_positive(x: float) -> float:
    if not x > 0:
        raise ValueError(f"Expected {x=} > 0")
    return x


def check_non_negative(x: float) -> float:
    if not x >= 0:
        raise ValueError(f"Expected {x=} >= 0")
    return x


def check_radius(r: float) -> float:
    """Radius of a point of the open unit disc."""
    if not 0 <= r < 1:
        raise ValueError(f"Expected 0 <= {r=} < 1")
    return r


def check_disc_point(z: complex) -> complex:
    if not abs(z) < 1:
        raise ValueError(f"Expected |{z=}| < 1")
    return complex(z)


def check_nonzero_point(z: complex) -> complex:
    check_disc_point(z)
    if z == 0:
        raise ValueError(f"Expected {z=} != 0")
    return complex(z)


def check_exponent(p: float, infinite: bool = False) -> float:
    """Exponent in (0, inf), or in (0, inf] when `infinite` is set."""
    if p == math.inf and infinite:
        return p
    if not 0 < p < math.inf:
        raise ValueError(f"Expected 0 < {p=} < inf")
    return p


def check_aperture(alpha: float) -> float:
    if not 0 < alpha < math.pi:
        raise ValueError(f"Expected 0 < {alpha=} < pi")
    return alpha


def check_finite(values, name: str = "value"):
    """A number or an array without NaN or infinity; ArithmeticError otherwise."""
    if not np.all(np.isfinite(values)):
        bad = np.count_nonzero(~np.isfinite(np.asarray(values)))
        raise ArithmeticError(f"Expected finite {name}, got {bad} non-finite")
    return values
