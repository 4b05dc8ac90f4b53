"""
Integer polynomials, their complex roots, and the arithmetic functions used
for roots of unity.

Coefficients are always stored constant term first.
"""

import math
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np
import sympy as sp

from faltings_height.general.errors import DomainError, NonConvergence
from faltings_height.logging.logger import get_logger

logger = get_logger(__name__)

Z = sp.Symbol("z")

MAX_CYCLOTOMIC_ORDER = 10**6
ABERTH_MAX_ITER = 500
ABERTH_TOL = 1e-12
POLISH_STEPS = 3
RESIDUAL_FACTOR = 1e-11


class InvalidPolynomial(DomainError):
    pass


class RepeatedRoots(InvalidPolynomial):
    """The polynomial shares a factor with its derivative"""

    pass


@dataclass(frozen=True)
class IntegerPolynomial:
    coefficients: tuple[int, ...]

    def __post_init__(self):
        coefs = []
        for c in self.coefficients:
            if isinstance(c, float) and not c.is_integer():
                raise InvalidPolynomial(f"Non-integral coefficient {c=}")
            try:
                coefs.append(int(c))
            except (TypeError, ValueError) as err:
                raise InvalidPolynomial(f"Cannot read coefficient {c=}") from err

        if len(coefs) < 2:
            raise InvalidPolynomial(f"Polynomial needs degree >= 1, got {coefs=}")
        if coefs[-1] == 0:
            raise InvalidPolynomial(f"Leading coefficient is zero in {coefs=}")
        if reduce(math.gcd, coefs) != 1:
            raise InvalidPolynomial(f"Polynomial is not primitive, {coefs=}")

        object.__setattr__(self, "coefficients", tuple(coefs))

        if not is_squarefree(self.coefficients):
            raise RepeatedRoots(f"Polynomial has repeated roots, {coefs=}")

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def leading(self) -> int:
        return self.coefficients[-1]

    @property
    def constant(self) -> int:
        return self.coefficients[0]

    def as_sympy(self) -> sp.Poly:
        return sp.Poly(list(reversed(self.coefficients)), Z)

    def reciprocal(self) -> "IntegerPolynomial":
        """z^d p(1/z), only defined for p(0) != 0"""
        if self.constant == 0:
            raise DomainError("Reciprocal of a polynomial vanishing at 0")
        return IntegerPolynomial(tuple(reversed(self.coefficients)))

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        return np.polynomial.polynomial.polyval(
            z, np.asarray(self.coefficients, dtype=float)
        )

    def __str__(self) -> str:
        return ",".join(str(c) for c in self.coefficients)

    @classmethod
    def parse(cls, value: "str | list | tuple | int | IntegerPolynomial") -> "IntegerPolynomial":
        """
        Read a polynomial from the command line formats: "c0,c1,...",
        a list or tuple of integers, or "cyclotomic:n".
        """
        if isinstance(value, IntegerPolynomial):
            return value
        if isinstance(value, (list, tuple)):
            return cls(tuple(value))
        if isinstance(value, int):
            raise InvalidPolynomial(f"A single number is not a polynomial, {value=}")

        value = str(value).strip().replace(" ", "")
        if value.startswith("cyclotomic:"):
            try:
                n = int(value.split(":", 1)[1])
            except ValueError as err:
                raise InvalidPolynomial(f"Cannot read cyclotomic order from {value=}") from err
            return cyclotomic(n)
        try:
            return cls(tuple(int(c) for c in value.strip("()[]").split(",") if c))
        except ValueError as err:
            if isinstance(err, InvalidPolynomial):
                raise
            raise InvalidPolynomial(f"Cannot read polynomial from {value=}") from err


@dataclass(frozen=True)
class AlgebraicNumberSpec:
    poly: IntegerPolynomial
    roots: tuple[complex, ...]
    residuals: tuple[float, ...]


def is_squarefree(coefficients: tuple[int, ...]) -> bool:
    p = sp.Poly(list(reversed(coefficients)), Z)
    return sp.gcd(p, p.diff(Z)).degree() == 0


def is_irreducible(poly: IntegerPolynomial) -> bool:
    return poly.as_sympy().is_irreducible


# ----------------------------------------------------------------------------
# arithmetic functions
# ----------------------------------------------------------------------------
def _check_order(n: int):
    if not (1 <= n <= MAX_CYCLOTOMIC_ORDER):
        raise DomainError(f"Order must be in [1, {MAX_CYCLOTOMIC_ORDER}], got {n=}")


def mobius(n: int) -> int:
    _check_order(n)
    exps = sp.factorint(n).values()
    if any(e > 1 for e in exps):
        return 0
    return -1 if len(exps) % 2 else 1


def euler_phi(n: int) -> int:
    _check_order(n)
    phi = n
    for p in sp.factorint(n):
        phi = phi // p * (p - 1)
    return phi


@lru_cache(maxsize=512)
def _cyclotomic_sympy(n: int) -> sp.Poly:
    num = sp.Poly(Z**n - 1, Z)
    for d in sp.divisors(n)[:-1]:
        num, rem = sp.div(num, _cyclotomic_sympy(d))
        if not rem.is_zero:
            raise ArithmeticError(f"Inexact cyclotomic division for {n=}, {d=}")
    return num


def cyclotomic(n: int) -> IntegerPolynomial:
    """n-th cyclotomic polynomial by exact division of z^n - 1"""
    _check_order(n)
    coefs = [int(c) for c in reversed(_cyclotomic_sympy(n).all_coeffs())]
    return IntegerPolynomial(tuple(coefs))


# ----------------------------------------------------------------------------
# roots
# ----------------------------------------------------------------------------
def _horner(coefs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """coefs (m, d + 1) constant first, x (m, k) -> p(x) row wise"""
    res = np.repeat(coefs[:, -1:], x.shape[1], axis=1).astype(np.complex128)
    for k in range(coefs.shape[1] - 2, -1, -1):
        res = res * x + coefs[:, k : k + 1]
    return res


def _start_points(coefs: np.ndarray) -> np.ndarray:
    """Perturbed circle start, radius from the Cauchy bound"""
    m, d1 = coefs.shape
    d = d1 - 1
    lead = np.abs(coefs[:, -1:])
    radius = 1 + np.max(np.abs(coefs[:, :-1]) / lead, axis=1)
    # clipped to the geometric mean of the root moduli
    c0 = np.abs(coefs[:, 0])
    mean_mod = np.where(c0 > 0, (c0 / lead[:, 0]) ** (1 / d), 1.0)
    radius = np.minimum(radius, np.maximum(mean_mod, 0.5))
    angles = 2 * np.pi * np.arange(d) / d + 0.4
    return radius[:, None] * np.exp(1j * angles)[None, :]


def aberth_batch(
    coefs: np.ndarray,
    max_iter: int = ABERTH_MAX_ITER,
    tol: float = ABERTH_TOL,
) -> np.ndarray:
    """
    Simultaneous Aberth-Ehrlich iteration for a batch of polynomials of the
    same degree.

    Parameters
    ----------
    coefs : np.ndarray
        (m, d + 1) real coefficients, constant term first, nonzero leading
    max_iter : int
        iteration cap
    tol : float
        relative size of the last correction at which a root is frozen

    Returns
    -------
    np.ndarray
        (m, d) complex roots, unsorted and unpolished
    """
    coefs = np.atleast_2d(np.asarray(coefs, dtype=float))
    m, d1 = coefs.shape
    d = d1 - 1
    if d == 1:
        return (-coefs[:, 0] / coefs[:, 1]).astype(np.complex128)[:, None]

    dcoefs = coefs[:, 1:] * np.arange(1, d1)[None, :]
    x = _start_points(coefs)
    active = np.ones(x.shape, dtype=bool)
    eye = np.eye(d, dtype=bool)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(max_iter):
            p = _horner(coefs, x)
            dp = _horner(dcoefs, x)
            diff = x[:, :, None] - x[:, None, :]
            inv = np.where(eye[None, :, :], 0, 1 / diff)
            s = inv.sum(axis=-1)
            delta = p / (dp - p * s)
            delta = np.where(np.isfinite(delta) & active, delta, 0)
            x = x - delta
            active &= np.abs(delta) > tol * np.maximum(1, np.abs(x))
            if not active.any():
                break
    return x


def polish_roots(coefs: np.ndarray, x: np.ndarray, steps: int = POLISH_STEPS) -> np.ndarray:
    """Newton steps, each accepted only where it does not increase |p|"""
    coefs = np.atleast_2d(np.asarray(coefs, dtype=float))
    dcoefs = coefs[:, 1:] * np.arange(1, coefs.shape[1])[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(steps):
            p = _horner(coefs, x)
            cand = x - p / _horner(dcoefs, x)
            better = np.isfinite(cand) & (np.abs(_horner(coefs, cand)) <= np.abs(p))
            x = np.where(better, cand, x)
    return x


def compensated_residual(coefficients: tuple[int, ...], root: complex) -> tuple[float, float]:
    """|p(root)| by fsum of the monomials and the scale sum |c_k| |root|^k"""
    powers = [root**k for k in range(len(coefficients))]
    terms = [c * pk for c, pk in zip(coefficients, powers)]
    value = complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))
    scale = math.fsum(abs(c) * abs(pk) for c, pk in zip(coefficients, powers))
    return abs(value), scale


def find_roots(poly: IntegerPolynomial) -> AlgebraicNumberSpec:
    """
    All complex roots of a squarefree integer polynomial.

    Parameters
    ----------
    poly : IntegerPolynomial
        primitive and squarefree

    Returns
    -------
    AlgebraicNumberSpec
        roots sorted by real then imaginary part with their residuals

    Raises
    ------
    NonConvergence
        if a residual exceeds 1e-11 times the coefficient scale
    """
    coefs = np.array([poly.coefficients], dtype=float)
    x = polish_roots(coefs, aberth_batch(coefs))[0]

    roots = []
    residuals = []
    for r in x:
        res, scale = compensated_residual(poly.coefficients, complex(r))
        if not res <= RESIDUAL_FACTOR * max(scale, 1.0):
            raise NonConvergence(
                f"Root finding failed for {poly}: {r=}, {res=}", best_residual=res
            )
        # exact zeros of the imaginary part for real roots
        if abs(r.imag) <= 1e-14 * max(1.0, abs(r)):
            r = complex(r.real, 0.0)
        roots.append(complex(r))
        residuals.append(res)

    order = sorted(range(len(roots)), key=lambda i: (roots[i].real, roots[i].imag))
    alg = AlgebraicNumberSpec(
        poly=poly,
        roots=tuple(roots[i] for i in order),
        residuals=tuple(residuals[i] for i in order),
    )
    _check_conjugation(alg)
    return alg


def _check_conjugation(alg: AlgebraicNumberSpec):
    roots = np.array(alg.roots)
    gaps = np.abs(roots[:, None] - roots.conj()[None, :]).min(axis=1)
    worst = float(gaps.max())
    if worst > 1e-10 * max(1.0, float(np.abs(roots).max())):
        raise NonConvergence(
            f"Roots of {alg.poly} are not closed under conjugation, {worst=}",
            best_residual=worst,
        )
