"""
Level one modular forms from their q-expansions.

Every function comes in two flavors. The `*_array` functions take numpy
arrays of points of the upper half-plane and return arrays, they are what the
optimizers, quadratures and scans use. The scalar functions take a `TauPoint`
(or anything `complex()` accepts) and return the documented records.

Modular quantities are evaluated at the representative in the standard
fundamental domain and transported back with the automorphy factor, so the
q-series only ever sees |q| <= exp(-pi sqrt(3)).
"""

import math
import threading
from dataclasses import dataclass
from typing import Literal

import numpy as np

from faltings_height.general.config import default_config
from faltings_height.general.errors import DomainError, NonConvergence
from faltings_height.logging.logger import get_logger

logger = get_logger(__name__)

DEFAULT_ORDER = default_config["series"]["order"]
REDUCTION_MAX_ITER = 10_000
LOG_4PI = math.log(4 * math.pi)

EisensteinKind = Literal["E2", "E4", "E6", "E2star"]

# (coefficient, divisor power, weight)
EISENSTEIN_MAP = {
    "E2": (-24.0, 1, 2),
    "E4": (240.0, 3, 4),
    "E6": (-504.0, 5, 6),
    "E2star": (-24.0, 1, 2),
}


@dataclass(frozen=True)
class TauPoint:
    re: float
    im: float

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise DomainError(f"Non-finite point {self.re=}, {self.im=}")
        if self.im <= 0:
            raise DomainError(f"Point not in the upper half-plane {self.im=}")

    @classmethod
    def from_complex(cls, z: complex) -> "TauPoint":
        z = complex(z)
        return cls(z.real, z.imag)

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    @property
    def is_reduced(self) -> bool:
        eps = 1e-12
        return abs(self.re) <= 0.5 + eps and self.re**2 + self.im**2 >= 1 - eps


@dataclass(frozen=True)
class QSeriesEval:
    value: complex
    truncation_order: int
    tail_bound: float


@dataclass(frozen=True)
class UnimodularMatrix:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise DomainError(f"Not unimodular: {self}")

    def apply(self, tau: complex) -> complex:
        return (self.a * tau + self.b) / (self.c * tau + self.d)

    def automorphy(self, tau: complex) -> complex:
        return self.c * tau + self.d

    def __matmul__(self, other: "UnimodularMatrix") -> "UnimodularMatrix":
        return UnimodularMatrix(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "UnimodularMatrix":
        return UnimodularMatrix(self.d, -self.b, -self.c, self.a)


def as_tau(tau: "TauPoint | complex") -> TauPoint:
    if isinstance(tau, TauPoint):
        return tau
    try:
        return TauPoint.from_complex(tau)
    except (TypeError, ValueError) as err:
        if isinstance(err, DomainError):
            raise
        raise DomainError(f"Cannot interpret {tau=} as a point") from err


# ----------------------------------------------------------------------------
# reduction
# ----------------------------------------------------------------------------
def reduce_to_fundamental_domain(
    tau: "TauPoint | complex",
) -> tuple[TauPoint, UnimodularMatrix]:
    """
    Move tau into the closed standard fundamental domain by alternating
    translations and the inversion -1/tau.

    Parameters
    ----------
    tau : TauPoint | complex
        point of the upper half-plane

    Returns
    -------
    tuple[TauPoint, UnimodularMatrix]
        the reduced point and the matrix M with M(reduced) == tau. On the
        boundary the representative with Re >= 0 is returned.
    """
    tau = as_tau(tau)
    z = tau.value
    a, b, c, d = 1, 0, 0, 1

    for _ in range(REDUCTION_MAX_ITER):
        n = math.floor(z.real + 0.5)
        if n != 0:
            z -= n
            b, d = a * n + b, c * n + d
        if abs(z) ** 2 < 1 - 1e-15:
            z = -1 / z
            a, b, c, d = -b, a, -d, c
            continue
        break
    else:
        raise NonConvergence(
            f"Reduction did not terminate within {REDUCTION_MAX_ITER} steps for {tau=}"
        )

    # boundary conventions: left edge -> right edge, left arc -> right arc
    if z.real < -0.5 + 1e-15:
        z += 1
        b, d = b - a, d - c
    if abs(abs(z) - 1) < 1e-13 and z.real < 0:
        z = -1 / z
        a, b, c, d = -b, a, -d, c

    return TauPoint(z.real, z.imag), UnimodularMatrix(a, b, c, d)


def reduce_array(tau: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Vectorized reduction. Returns the reduced points and the (c, d) entries
    of the matrices M with M(reduced) == tau, as floats.
    """
    z = np.array(tau, dtype=np.complex128, copy=True)
    a = np.ones(z.shape)
    b = np.zeros(z.shape)
    c = np.zeros(z.shape)
    d = np.ones(z.shape)

    for _ in range(REDUCTION_MAX_ITER):
        n = np.floor(z.real + 0.5)
        z = z - n
        b = a * n + b
        d = c * n + d
        inside = np.abs(z) ** 2 < 1 - 1e-15
        if not inside.any():
            break
        z[inside] = -1 / z[inside]
        a_i, b_i, c_i, d_i = a[inside], b[inside], c[inside], d[inside]
        a[inside], b[inside], c[inside], d[inside] = -b_i, a_i, -d_i, c_i
    else:
        raise NonConvergence("Vectorized reduction did not terminate")

    # same boundary conventions as the scalar reduction
    left = z.real < -0.5 + 1e-15
    z[left] += 1
    b[left], d[left] = b[left] - a[left], d[left] - c[left]
    arc = (np.abs(np.abs(z) - 1) < 1e-13) & (z.real < 0)
    z[arc] = -1 / z[arc]
    c[arc], d[arc] = -d[arc], c[arc]

    return z, c, d


# ----------------------------------------------------------------------------
# q-series kernels
# ----------------------------------------------------------------------------
_divisor_lock = threading.Lock()
_divisor_cache: dict[tuple[int, int], np.ndarray] = {}


def divisor_sums(k: int, order: int) -> np.ndarray:
    """sigma_k(n) for n = 1..order as float array"""
    key = (k, order)
    with _divisor_lock:
        if key not in _divisor_cache:
            sig = np.zeros(order)
            for dv in range(1, order + 1):
                sig[dv - 1 :: dv] += float(dv) ** k
            _divisor_cache[key] = sig
        return _divisor_cache[key]


def nome(tau: np.ndarray) -> np.ndarray:
    return np.exp(2j * np.pi * np.asarray(tau))


def q_powers(q: np.ndarray, order: int) -> np.ndarray:
    """q^n for n = 1..order along a new last axis"""
    q = np.asarray(q, dtype=np.complex128)
    return np.cumprod(np.repeat(q[..., None], order, axis=-1), axis=-1)


def _divisor_tail(x: float, k: int, order: int) -> float:
    # sigma_k(n) <= n^(k+1), geometric majorization of the dropped terms
    ratio = ((order + 2) / (order + 1)) ** (k + 1) * x
    if ratio >= 1:
        return math.inf
    return (order + 1) ** (k + 1) * x ** (order + 1) / (1 - ratio)


def _log_product_tail(x: float, order: int) -> float:
    # sum_{n > order} |log(1 - q^n)| <= sum |q|^n / (1 - |q|^n)
    if x >= 1:
        return math.inf
    return x ** (order + 1) / ((1 - x) * (1 - x ** (order + 1)))


def _eisenstein_series(kind: str, tau: np.ndarray, order: int) -> np.ndarray:
    coef, k, _ = EISENSTEIN_MAP[kind]
    qn = q_powers(nome(tau), order)
    val = 1 + coef * (qn @ divisor_sums(k, order))
    if kind == "E2star":
        val = val - 3 / (np.pi * np.asarray(tau).imag)
    return val


def _log_delta_product(tau: np.ndarray, order: int) -> np.ndarray:
    """sum_{n <= order} log(1 - q^n), principal branch term by term"""
    qn = q_powers(nome(tau), order)
    return np.log1p(-qn).sum(axis=-1)


# ----------------------------------------------------------------------------
# array api
# ----------------------------------------------------------------------------
def eisenstein_array(
    kind: EisensteinKind, tau: np.ndarray, order: int = DEFAULT_ORDER
) -> np.ndarray:
    """E2 is evaluated from its series as is, the modular kinds are transported"""
    tau = np.asarray(tau, dtype=np.complex128)
    if kind == "E2":
        return _eisenstein_series("E2", tau, order)
    if kind not in EISENSTEIN_MAP:
        raise DomainError(f"Unknown Eisenstein series {kind=}")

    weight = EISENSTEIN_MAP[kind][2]
    z, c, d = reduce_array(tau)
    return (c * z + d) ** weight * _eisenstein_series(kind, z, order)


def delta_array(tau: np.ndarray, order: int = DEFAULT_ORDER) -> np.ndarray:
    tau = np.asarray(tau, dtype=np.complex128)
    z, c, d = reduce_array(tau)
    log_delta = 2j * np.pi * z + 24 * _log_delta_product(z, order)
    return (c * z + d) ** 12 * np.exp(log_delta)


def log_abs_delta_array(tau: np.ndarray, order: int = DEFAULT_ORDER) -> np.ndarray:
    """log|Delta(tau)|, without overflow for points close to the real axis"""
    tau = np.asarray(tau, dtype=np.complex128)
    z, c, d = reduce_array(tau)
    return (
        -2 * np.pi * z.imag
        + 24 * _log_delta_product(z, order).real
        + 12 * np.log(np.abs(c * z + d))
    )


def j_array(tau: np.ndarray, order: int = DEFAULT_ORDER) -> np.ndarray:
    z, _, _ = reduce_array(np.asarray(tau, dtype=np.complex128))
    e4 = _eisenstein_series("E4", z, order)
    log_delta = 2j * np.pi * z + 24 * _log_delta_product(z, order)
    return e4**3 * np.exp(-log_delta)


def j_derivative_array(tau: np.ndarray, order: int = DEFAULT_ORDER) -> np.ndarray:
    """dj/dtau = -2 pi i E4^2 E6 / Delta"""
    tau = np.asarray(tau, dtype=np.complex128)
    z, c, d = reduce_array(tau)
    e4 = _eisenstein_series("E4", z, order)
    e6 = _eisenstein_series("E6", z, order)
    log_delta = 2j * np.pi * z + 24 * _log_delta_product(z, order)
    # weight 4 + 4 + 6 - 12 = 2
    return -2j * np.pi * e4**2 * e6 * np.exp(-log_delta) * (c * z + d) ** 2


def j_and_derivative_array(
    tau: np.ndarray, order: int = DEFAULT_ORDER
) -> tuple[np.ndarray, np.ndarray]:
    """j and dj/dtau sharing the series evaluations, used by the Newton solvers"""
    tau = np.asarray(tau, dtype=np.complex128)
    z, c, d = reduce_array(tau)
    e4 = _eisenstein_series("E4", z, order)
    e6 = _eisenstein_series("E6", z, order)
    inv_delta = np.exp(-(2j * np.pi * z + 24 * _log_delta_product(z, order)))
    return (
        e4**3 * inv_delta,
        -2j * np.pi * e4**2 * e6 * inv_delta * (c * z + d) ** 2,
    )


def g_infinity_array(tau: np.ndarray, order: int = DEFAULT_ORDER) -> np.ndarray:
    z, _, _ = reduce_array(np.asarray(tau, dtype=np.complex128))
    y = z.imag
    return (
        2 * np.pi * y
        - 6 * np.log(y)
        - 6 * LOG_4PI
        - 24 * _log_delta_product(z, order).real
    )


def dg_infinity_array(tau: np.ndarray, order: int = DEFAULT_ORDER) -> np.ndarray:
    return -1j * np.pi * eisenstein_array("E2star", tau, order)


# ----------------------------------------------------------------------------
# scalar api
# ----------------------------------------------------------------------------
def eisenstein(
    kind: EisensteinKind, tau: "TauPoint | complex", order: int = DEFAULT_ORDER
) -> QSeriesEval:
    """
    Evaluate an Eisenstein series.

    E2 is not modular, it is summed at tau itself and its tail bound is only
    meaningful for reduced tau. E2star (weight 2), E4 and E6 are summed at the
    reduced representative and transported with (c tau + d)^weight.

    Parameters
    ----------
    kind : str
        one of E2, E4, E6, E2star
    tau : TauPoint | complex
        point of the upper half-plane
    order : int
        number of q-terms

    Returns
    -------
    QSeriesEval
        value, truncation order and an absolute bound on the dropped terms
    """
    if kind not in EISENSTEIN_MAP:
        raise DomainError(f"Unknown Eisenstein series {kind=}")
    tau = as_tau(tau)
    coef, k, weight = EISENSTEIN_MAP[kind]

    if kind == "E2":
        value = complex(_eisenstein_series("E2", np.array([tau.value]), order)[0])
        x = math.exp(-2 * math.pi * tau.im)
        return QSeriesEval(value, order, abs(coef) * _divisor_tail(x, k, order))

    red, mat = reduce_to_fundamental_domain(tau)
    factor = complex(mat.automorphy(red.value)) ** weight
    value = factor * complex(_eisenstein_series(kind, np.array([red.value]), order)[0])
    x = math.exp(-2 * math.pi * red.im)
    tail = abs(factor) * abs(coef) * _divisor_tail(x, k, order)
    return QSeriesEval(value, order, tail)


def delta(tau: "TauPoint | complex", order: int = DEFAULT_ORDER) -> QSeriesEval:
    """Delta = q prod (1 - q^n)^24, with the tail of the product bounded"""
    tau = as_tau(tau)
    red, mat = reduce_to_fundamental_domain(tau)
    value = complex(delta_array(np.array([tau.value]), order)[0])
    x = math.exp(-2 * math.pi * red.im)
    tail = abs(value) * math.expm1(24 * _log_product_tail(x, order))
    return QSeriesEval(value, order, tail)


def j_invariant(tau: "TauPoint | complex", order: int = DEFAULT_ORDER) -> complex:
    tau = as_tau(tau)
    return complex(j_array(np.array([tau.value]), order)[0])


def j_derivative(tau: "TauPoint | complex", order: int = DEFAULT_ORDER) -> complex:
    tau = as_tau(tau)
    return complex(j_derivative_array(np.array([tau.value]), order)[0])


def g_infinity(tau: "TauPoint | complex", order: int = DEFAULT_ORDER) -> float:
    """g_inf = -log((4 pi Im tau)^6 |Delta(tau)|), SL2(Z)-invariant"""
    tau = as_tau(tau)
    return float(g_infinity_array(np.array([tau.value]), order)[0])


def dg_infinity(tau: "TauPoint | complex", order: int = DEFAULT_ORDER) -> complex:
    """
    d g_inf = -pi i E2star. The real part is half of the x-derivative, the
    imaginary part minus half of the y-derivative.
    """
    tau = as_tau(tau)
    return complex(dg_infinity_array(np.array([tau.value]), order)[0])


def cusp_approximation(tau: "TauPoint | complex") -> tuple[float, float]:
    """
    Leading behavior of g_inf at the cusp and the bound on the remainder,
    valid for Im tau >= 1 on the reduced representative.
    """
    red, _ = reduce_to_fundamental_domain(as_tau(tau))
    if red.im < 1:
        raise DomainError(f"Cusp approximation needs Im >= 1, got {red.im=}")
    y = red.im
    model = 2 * math.pi * y - 6 * math.log(y) - 6 * LOG_4PI
    return model, 24 / (math.exp(2 * math.pi) - 2)


def j_cusp_bound(tau: "TauPoint | complex") -> float:
    """|j(tau)| <= 4 exp(2 pi Im tau) for reduced tau with Im tau >= 1"""
    red, _ = reduce_to_fundamental_domain(as_tau(tau))
    return 4 * math.exp(2 * math.pi * red.im)


def j_q_expansion_coefficients(order: int) -> list[int]:
    """
    Exact integer coefficients of j = 1/q + 744 + 196884 q + ...

    Returns
    -------
    list[int]
        entry k is the coefficient of q^(k - 1), k = 0..order
    """
    n = order + 1
    # one extra term, Delta / q loses the first one
    m = n + 1
    sig3 = [0] * m
    sig5 = [0] * m
    for dv in range(1, m):
        for k in range(dv, m, dv):
            sig3[k] += dv**3
            sig5[k] += dv**5
    e4 = [1] + [240 * s for s in sig3[1:]]
    e6 = [1] + [-504 * s for s in sig5[1:]]

    def mul(x, y, size):
        out = [0] * size
        for i, xi in enumerate(x[:size]):
            if xi:
                for k in range(size - i):
                    out[i + k] += xi * y[k]
        return out

    e4_cube = mul(mul(e4, e4, m), e4, m)
    e6_sq = mul(e6, e6, m)
    # Delta = (E4^3 - E6^2) / 1728 starts at q^1
    delta_over_q = [(a - b) // 1728 for a, b in zip(e4_cube, e6_sq)][1:]
    if delta_over_q[0] != 1:
        raise NonConvergence("Unexpected normalization of Delta")

    inv = [0] * n
    inv[0] = 1
    for k in range(1, n):
        inv[k] = -sum(delta_over_q[i] * inv[k - i] for i in range(1, k + 1))

    return mul(e4_cube, inv, n)
