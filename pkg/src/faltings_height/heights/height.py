"""
Stable Faltings height of algebraic numbers.

For alpha with minimal polynomial of degree d and leading coefficient a

    12 h_F(alpha) = (1/d) sum_i g_hyp(alpha_i) + (1/d) log|a|

where the sum runs over the complex roots. The second term collects all
finite places by the product formula.
"""

import math
import threading
from dataclasses import dataclass
from typing import Literal

import numpy as np

from faltings_height.general.constants import (
    COR_BRACKET_DENOMINATOR,
    COR_BRACKET_HIGH,
    COR_BRACKET_LOW,
    MU_LOWER,
    MU_UPPER,
)
from faltings_height.logging.logger import get_logger
from faltings_height.modular.core import DEFAULT_ORDER
from faltings_height.modular.inversion import cached_dx_g_hyp_at_1, g_hyp_many
from faltings_height.heights.polynomials import (
    IntegerPolynomial,
    cyclotomic,
    euler_phi,
    find_roots,
    mobius,
)

logger = get_logger(__name__)

# truncation and inversion tolerance of a single g_hyp value
G_HYP_TOL = 1e-12

Classification = Literal["below", "above", "undecided"]


@dataclass(frozen=True)
class HeightResult:
    poly: str
    degree: int
    archimedean: float
    finite: float
    total: float
    error_estimate: float

    def to_dict(self) -> dict:
        return {
            "poly": self.poly,
            "degree": self.degree,
            "archimedean": self.archimedean,
            "finite": self.finite,
            "height": self.total,
            "error_estimate": self.error_estimate,
        }


def _split_conjugates(roots: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    """Upper half roots and real roots, None if the pairing is not clean"""
    thr = 1e-12 * np.maximum(1.0, np.abs(roots))
    upper = roots[roots.imag > thr]
    lower = roots[roots.imag < -thr]
    real = roots[np.abs(roots.imag) <= thr]
    if upper.size != lower.size:
        return None
    return upper, real.real.astype(np.complex128)


def archimedean_mean(roots: np.ndarray, order: int = DEFAULT_ORDER) -> float:
    """(1/d) sum g_hyp over the roots, conjugate pairs evaluated once"""
    roots = np.asarray(roots, dtype=np.complex128)
    split = _split_conjugates(roots)
    if split is None:
        return float(g_hyp_many(roots, order).mean())
    upper, real = split
    vals = g_hyp_many(np.concatenate([upper, real]), order)
    return float((2 * vals[: upper.size].sum() + vals[upper.size :].sum()) / roots.size)


def faltings_height(
    poly: "IntegerPolynomial | str | list | tuple", order: int = DEFAULT_ORDER
) -> HeightResult:
    """
    Stable Faltings height of a root of `poly`.

    Parameters
    ----------
    poly : IntegerPolynomial | str | list | tuple
        minimal polynomial, anything `IntegerPolynomial.parse` reads. For
        reducible input the result is the average over the root multiset.
    order : int
        number of q-terms in the modular forms

    Returns
    -------
    HeightResult
        archimedean and finite parts, total = (archimedean + finite) / 12
    """
    poly = IntegerPolynomial.parse(poly)
    alg = find_roots(poly)
    roots = np.array(alg.roots)
    d = poly.degree

    archimedean = archimedean_mean(roots, order)
    finite = math.log(abs(poly.leading)) / d

    # root error pushed through g_hyp along a real shift of the size |p| / |p'|
    dpoly = np.polynomial.polynomial.polyder(np.asarray(poly.coefficients, dtype=float))
    dp = np.abs(np.polynomial.polynomial.polyval(roots, dpoly))
    with np.errstate(divide="ignore"):
        shift = np.where(dp > 0, np.array(alg.residuals) / dp, 0.0)
    shift = np.maximum(shift, 1e-15 * np.maximum(1.0, np.abs(roots)))
    moved = g_hyp_many(roots + shift, order)
    base = g_hyp_many(roots, order)
    root_err = float(np.abs(moved - base).sum()) / d

    result = HeightResult(
        poly=str(poly),
        degree=d,
        archimedean=archimedean,
        finite=finite,
        total=(archimedean + finite) / 12,
        error_estimate=(root_err + G_HYP_TOL) / 12,
    )
    logger.debug(f"{result=}")
    return result


_h1_lock = threading.Lock()
_h1_cache: dict[int, float] = {}


def height_at_one(order: int = DEFAULT_ORDER) -> float:
    """h_F(1) = g_hyp(1) / 12"""
    with _h1_lock:
        if order not in _h1_cache:
            _h1_cache[order] = float(g_hyp_many(np.array([1 + 0j]), order)[0]) / 12
        return _h1_cache[order]


# ----------------------------------------------------------------------------
# roots of unity
# ----------------------------------------------------------------------------
def root_of_unity_bracket(n: int) -> tuple[float, float]:
    """Closed form bracket of h_F at a primitive n-th root of unity"""
    c = mobius(n) / (COR_BRACKET_DENOMINATOR * euler_phi(n))
    return COR_BRACKET_LOW - c, COR_BRACKET_HIGH - c


def root_of_unity_height(n: int, order: int = DEFAULT_ORDER) -> HeightResult:
    return faltings_height(cyclotomic(n), order)


def classify_root_of_unity(
    n: int, mu_upper: float = MU_UPPER, mu_lower: float = MU_LOWER
) -> Classification:
    """
    Place h_F(zeta_n) relative to the essential minimum from its bracket.

    "below" if the whole bracket is under the lower bound `mu_lower`,
    "above" if it is over the upper bound `mu_upper`, otherwise "undecided".
    """
    low, high = root_of_unity_bracket(n)
    if high < mu_lower:
        return "below"
    if low > mu_upper:
        return "above"
    return "undecided"


# ----------------------------------------------------------------------------
# integrality
# ----------------------------------------------------------------------------
def integrality_constraints(h: float, order: int = DEFAULT_ORDER) -> tuple[float, float]:
    """
    Upper bounds for (1/d) log|a| and (1/d) log|b|, a and b the leading and
    constant coefficient of the minimal polynomial of any alpha != 0 with
    h_F(alpha) <= h.

    Returns
    -------
    tuple[float, float]
        12 (h - h_F(1)) / (1 - dx g_hyp(1)) and 12 (h - h_F(1)) / dx g_hyp(1)
    """
    dx = cached_dx_g_hyp_at_1(order)
    excess = 12 * (h - height_at_one(order))
    return excess / (1 - dx), excess / dx


def minimum_non_integer_degree(
    h: float = MU_UPPER, order: int = DEFAULT_ORDER
) -> int | float:
    """Smallest degree of a non-integral alpha with h_F(alpha) <= h, |a| >= 2"""
    lead_bound, _ = integrality_constraints(h, order)
    if lead_bound <= 0:
        return math.inf
    return math.ceil(math.log(2) / lead_bound)


def max_constant_coefficient(
    h: float = MU_UPPER, degree: int = 10, order: int = DEFAULT_ORDER
) -> float:
    """Bound on |b| for integral alpha of the given degree with h_F(alpha) <= h"""
    _, const_bound = integrality_constraints(h, order)
    return math.exp(degree * const_bound)
