"""
Numerical certificates for the distortion estimates around rho.

Everything here is a spot check on finite samples, not a proof: each
`verify_*` function evaluates one family of inequalities on a deterministic
sample and returns a `CertificateReport` with the largest violation
(left side minus right side) and the sample where it occurs. A report passes
if that violation is at most the configured tolerance.

Notation: f is the holomorphic function with j_D(w) = f(w^3) on B(0, r0),
f0(z) = eps1 f(r0^3 z) its normalization on the unit disk.
"""

import inspect
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import qmc

from faltings_height.general.config import default_config
from faltings_height.general.constants import (
    F_PRIME_0,
    GAMMA_ONE_THIRD,
    GAMMA_ZERO,
    H_F_ZERO,
    MODEL_DENOMINATOR,
    R0,
    RHO,
    SMALL_DISK_RADIUS,
)
from faltings_height.general.errors import DomainError
from faltings_height.general.workers import parallel_map
from faltings_height.logging.logger import get_logger
from faltings_height.modular.core import (
    delta_array,
    eisenstein_array,
    g_infinity_array,
    j_array,
    j_cusp_bound,
)
from faltings_height.modular.inversion import (
    canonical_cube_root,
    cached_dx_g_hyp_at_1,
    g_disk_array,
    g_hyp_many,
    h_hat_array,
    invert_j,
    invert_j_many,
    j_disk_array,
    j_disk_derivative_array,
    psi_inverse_array,
)

logger = get_logger(__name__)

_cert_cfg = default_config["certificates"]

# bounds as stated for the unit circle
ZETA_W_LINEAR_BOUND = 1 / 2283
ZETA_W_LOG_BOUND = 7.7e-8
J_PRIME_LOWER = 185.0
J_PRIME_UPPER = 186.054
J_GROWTH_FACTOR = 4000.0
PROP_B_BOUND = 5e-7
SIXTH_ORDER_BOUND = 6.0**3
F_PRIME_0_RTOL = 1e-8
LOG19_OVER_PI = math.log(19) / math.pi


class CertificateFailure(RuntimeError):
    """A certificate violated its inequality beyond the tolerance"""

    def __init__(self, report: "CertificateReport"):
        super().__init__(
            f"Certificate {report.name!r} failed with {report.max_violation=}"
            f" at {report.worst_point=}"
        )
        self.report = report


@dataclass(frozen=True)
class CertificateConstants:
    r0: float
    eps1: float
    kappa1: float
    gamma0: float
    gamma1: float
    f_prime_0: float


@dataclass(frozen=True)
class RadiusBracket:
    alpha: float
    r_minus: float
    r_plus: float
    kappa_alpha: float


@dataclass(frozen=True)
class KoebeBounds:
    modulus: float
    f0_lower: float
    f0_upper: float
    df0_lower: float
    df0_upper: float
    log_derivative_upper: float
    second_order_center: float
    second_order_radius: float
    linear_deviation: float
    log_derivative_deviation: float


@dataclass
class CertificateReport:
    name: str
    samples: int
    max_violation: float
    worst_point: complex | None
    passed: bool
    checks: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        wp = self.worst_point
        return {
            "name": self.name,
            "samples": self.samples,
            "max_violation": self.max_violation,
            "worst_point": None if wp is None else [wp.real, wp.imag],
            "pass": self.passed,
        }


def require_pass(report: CertificateReport) -> CertificateReport:
    if not report.passed:
        raise CertificateFailure(report)
    return report


def _report(
    name: str,
    points: np.ndarray,
    violations: dict[str, np.ndarray],
    tolerance: float,
) -> CertificateReport:
    """Collect lhs - rhs arrays (one entry per point) into a report"""
    points = np.atleast_1d(np.asarray(points, dtype=np.complex128))
    checks = {}
    max_violation = -math.inf
    worst_point = None
    for key, viol in violations.items():
        viol = np.broadcast_to(np.asarray(viol, dtype=float), points.shape)
        # nan counts as a violation
        viol = np.where(np.isnan(viol), math.inf, viol)
        i = int(np.argmax(viol))
        checks[key] = float(viol[i])
        if viol[i] > max_violation:
            max_violation = float(viol[i])
            worst_point = complex(points[i])

    report = CertificateReport(
        name=name,
        samples=int(points.size),
        max_violation=max_violation,
        worst_point=worst_point,
        passed=bool(max_violation <= tolerance),
        checks=checks,
    )
    log = logger.info if report.passed else logger.warning
    log(f"Certificate {name}: {report.passed=}, {report.max_violation=:.3e}")
    return report


# ----------------------------------------------------------------------------
# constants and closed forms
# ----------------------------------------------------------------------------
def constants() -> CertificateConstants:
    eps1 = 1 / (R0**3 * F_PRIME_0)
    gamma0_cube = GAMMA_ZERO**3
    return CertificateConstants(
        r0=R0,
        eps1=eps1,
        kappa1=kappa(1.0, eps1),
        gamma0=GAMMA_ZERO,
        gamma1=3 * math.log(192) - 6 * math.log(gamma0_cube - 1 / gamma0_cube),
        f_prime_0=F_PRIME_0,
    )


def kappa(alpha: float, eps1: float | None = None) -> float:
    """
    Smaller solution x of 1 + x = alpha (1 + (1 + x) eps1)^2, computed as
    1 + x = 2 alpha / ((1 - 2 alpha eps1) + sqrt(1 - 4 alpha eps1)).
    """
    eps1 = 1 / (R0**3 * F_PRIME_0) if eps1 is None else eps1
    disc = 1 - 4 * alpha * eps1
    if disc < 0:
        raise DomainError(f"{alpha=} is beyond 1 / (4 eps1) = {1 / (4 * eps1)}")
    return 2 * alpha / ((1 - 2 * alpha * eps1) + math.sqrt(disc)) - 1


def radius_bracket(alpha: float) -> RadiusBracket:
    """
    Annulus containing every w in B(0, r0) with |j_D(w)| = alpha.

    Parameters
    ----------
    alpha : float
        modulus of the j-value, 0 < alpha < 1 / (4 eps1) ~ 1143

    Returns
    -------
    RadiusBracket
        r_minus <= |w| <= r_plus together with kappa(alpha)
    """
    eps1 = 1 / (R0**3 * F_PRIME_0)
    if not (0 < alpha < 1 / (4 * eps1)):
        raise DomainError(
            f"radius_bracket needs 0 < alpha < {1 / (4 * eps1):.6f}, got {alpha=}"
        )
    k = kappa(alpha, eps1)
    r_plus = ((1 + k) / F_PRIME_0) ** (1 / 3)
    r_minus = (1 - 4 * alpha * eps1) ** (1 / 3) * r_plus
    return RadiusBracket(alpha=alpha, r_minus=r_minus, r_plus=r_plus, kappa_alpha=k)


def radius_bracket_array(alpha: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (r_minus, r_plus) for 0 <= alpha < 1 / (4 eps1)"""
    eps1 = 1 / (R0**3 * F_PRIME_0)
    alpha = np.asarray(alpha, dtype=float)
    disc = 1 - 4 * alpha * eps1
    if (alpha < 0).any() or (disc < 0).any():
        raise DomainError("radius_bracket_array needs 0 <= alpha < 1 / (4 eps1)")
    one_plus_kappa = 2 * alpha / ((1 - 2 * alpha * eps1) + np.sqrt(disc))
    r_plus = np.cbrt(one_plus_kappa / F_PRIME_0)
    return np.cbrt(disc) * r_plus, r_plus


def linear_model_g_hyp(zeta: complex) -> float:
    """gamma1 - Re(zeta) / 13824, the affine model of g_hyp on the unit circle"""
    return constants().gamma1 - complex(zeta).real / MODEL_DENOMINATOR


def koebe_bounds(modulus: float) -> KoebeBounds:
    """
    Distortion bounds for a normalized univalent f0 on the unit disk at
    |w| = modulus.

    Parameters
    ----------
    modulus : float
        0 <= modulus < 1

    Returns
    -------
    KoebeBounds
        the growth bracket of |f0|, the bracket of |f0'|, the bound of
        |w f0'/f0|, the disk (center, radius) containing w f0''/f0', and the
        bounds of |f0(w) - w| and |w f0'/f0 - 1|
    """
    m = float(modulus)
    if not (0 <= m < 1):
        raise DomainError(f"koebe_bounds needs 0 <= modulus < 1, got {modulus=}")
    return KoebeBounds(
        modulus=m, **{k: float(v) for k, v in koebe_bounds_array(m).items()}
    )


# ----------------------------------------------------------------------------
# numerical helpers
# ----------------------------------------------------------------------------
def cauchy_derivative(
    func: Callable[[np.ndarray], np.ndarray],
    center: np.ndarray,
    order: int,
    radius: float = _cert_cfg["cauchy_radius"],
    nodes: int = _cert_cfg["cauchy_nodes"],
) -> np.ndarray:
    """
    k-th derivative of a holomorphic function by the trapezoid rule on the
    circle |w - center| = radius.

    `func` receives the (len(center), nodes) array of circle points.
    """
    center = np.atleast_1d(np.asarray(center, dtype=np.complex128))
    circle = np.exp(2j * np.pi * np.arange(nodes) / nodes)
    pts = center[:, None] + radius * circle[None, :]
    vals = func(pts)
    coef = (vals * circle[None, :] ** (-order)).mean(axis=1)
    return math.factorial(order) / radius**order * coef


def f_array(u: np.ndarray) -> np.ndarray:
    """f(u) = j_D(w) for any cube root w of u"""
    return j_disk_array(canonical_cube_root(u))


def f_derivative_array(u: np.ndarray) -> np.ndarray:
    w = canonical_cube_root(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(
            np.abs(w) < 1e-7, F_PRIME_0, j_disk_derivative_array(w) / (3 * w**2)
        )


def disk_samples(n: int, radius: float) -> np.ndarray:
    """n deterministic low discrepancy points of the closed disk of given radius"""
    pts = qmc.Halton(d=2, scramble=False).random(n + 1)[1:]
    return radius * np.sqrt(pts[:, 0]) * np.exp(2j * np.pi * pts[:, 1])


def circle_samples(n: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(n) / n)


def _chunked(func: Callable, points: np.ndarray, workers: int | None, size: int = 1000):
    chunks = [points[i : i + size] for i in range(0, points.size, size)]
    return np.concatenate(parallel_map(func, chunks, workers=workers))


# ----------------------------------------------------------------------------
# certificates
# ----------------------------------------------------------------------------
def verify_constants(tolerance: float = _cert_cfg["tolerance"]) -> CertificateReport:
    c = constants()
    g_d0 = float(g_disk_array(np.array([0j]))[0])
    kappa1_closed = (
        2
        * c.eps1
        * (2 + c.eps1)
        / (1 - 2 * c.eps1 - 2 * c.eps1**2 + math.sqrt(1 - 4 * c.eps1))
    )
    violations = {
        "eps1_lower": 1 / 4573 - c.eps1,
        "eps1_upper": c.eps1 - 1 / 4572,
        "kappa1_lower": 2 * c.eps1 - c.kappa1,
        "kappa1_upper": c.kappa1 - 2 * c.eps1 * (1 + 3 * c.eps1),
        "kappa1_coarse": c.kappa1 - 1 / 2284,
        "kappa1_closed_form": abs(c.kappa1 - kappa1_closed),
        "f_prime_0_lower": 237698 - c.f_prime_0,
        "f_prime_0_upper": c.f_prime_0 - 237699,
        "gamma0_power": abs(c.gamma0**9 / c.f_prime_0 - 1),
        # gamma1 is g_D(0) corrected by the unit circle radius
        "gamma1_identity": abs(
            c.gamma1 - (g_d0 - 6 * math.log1p(-F_PRIME_0 ** (-2 / 3)))
        )
        - 1e-8,
        "h_f_zero": abs(g_d0 / 12 - H_F_ZERO) - 1e-10,
    }
    return _report("constants", np.array([0j]), violations, tolerance)


def verify_f_prime_0(
    radius: float = 0.005, nodes: int = _cert_cfg["cauchy_nodes"]
) -> CertificateReport:
    approx = complex(cauchy_derivative(f_array, 0j, 1, radius, nodes)[0])
    rel = abs(approx - F_PRIME_0) / F_PRIME_0
    return _report("f_prime_0", np.array([0j]), {"relative": rel - F_PRIME_0_RTOL}, 0.0)


def verify_special_values(tolerance: float = _cert_cfg["tolerance"]) -> CertificateReport:
    """Closed forms at rho in terms of Gamma(1/3), all compared relatively"""
    g = GAMMA_ONE_THIRD
    pi = math.pi
    e6_closed = 3**3 / 2**9 * g**18 / pi**12
    delta_closed = -(3**3) / 2**24 * g**36 / pi**24
    j3_closed = -1j * pi**3 * 2**10 * 3 * e6_closed
    h_closed = -0.5 * math.log(3 / (2 * pi) ** 3 * g**6)

    rho = np.array([RHO])
    e2 = complex(eisenstein_array("E2star", rho)[0]) + 3 / (pi * RHO.imag)
    e6 = complex(eisenstein_array("E6", rho)[0])
    dl = complex(delta_array(rho)[0])
    j3 = complex(cauchy_derivative(j_array, rho, 3, radius=0.05)[0])
    h0 = float(g_infinity_array(rho)[0]) / 12

    violations = {
        "E2": abs(e2 - 2 * math.sqrt(3) / pi) / (2 * math.sqrt(3) / pi),
        "E6": abs(e6 - e6_closed) / e6_closed,
        "Delta": abs(dl - delta_closed) / abs(delta_closed),
        "j3": abs(j3 - j3_closed) / abs(j3_closed) - 1e-7,
        "h_F(0)": abs(h0 - h_closed) / abs(h_closed),
    }
    return _report("special_values", rho, violations, tolerance)


def verify_koebe(
    samples: int = _cert_cfg["samples"],
    tolerance: float = _cert_cfg["tolerance"],
) -> CertificateReport:
    """Distortion bounds for f0(z) = eps1 f(r0^3 z) on |z| <= 0.9"""
    c = constants()
    z = disk_samples(samples, 0.9)
    m = np.abs(z)
    u = R0**3 * z

    f0 = c.eps1 * f_array(u)
    df0 = f_derivative_array(u) / F_PRIME_0

    def f0_func(p):
        return c.eps1 * f_array(R0**3 * p)

    ddf0 = cauchy_derivative(f0_func, z, 2, radius=0.05)

    kb = koebe_bounds_array(m)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_der = np.where(m > 0, z * df0 / f0, 1.0)
    second = z * ddf0 / df0

    violations = {
        "f0_lower": kb["f0_lower"] - np.abs(f0),
        "f0_upper": np.abs(f0) - kb["f0_upper"],
        "df0_lower": kb["df0_lower"] - np.abs(df0),
        "df0_upper": np.abs(df0) - kb["df0_upper"],
        "log_derivative": np.abs(log_der) - kb["log_derivative_upper"],
        "second_order": np.abs(second - kb["second_order_center"])
        - kb["second_order_radius"],
        "linear_deviation": np.abs(f0 - z) - kb["linear_deviation"],
        "log_derivative_deviation": np.abs(log_der - 1)
        - kb["log_derivative_deviation"],
    }
    return _report("koebe", z, violations, tolerance)


def koebe_bounds_array(m: np.ndarray) -> dict[str, np.ndarray]:
    m = np.asarray(m, dtype=float)
    return {
        "f0_lower": m / (1 + m) ** 2,
        "f0_upper": m / (1 - m) ** 2,
        "df0_lower": (1 - m) / (1 + m) ** 3,
        "df0_upper": (1 + m) / (1 - m) ** 3,
        "log_derivative_upper": (1 + m) / (1 - m),
        "second_order_center": 2 * m**2 / (1 - m**2),
        "second_order_radius": 4 * m / (1 - m**2),
        "linear_deviation": m**2 * (2 - m) / (1 - m) ** 2,
        "log_derivative_deviation": 2 * m * (1 + m) ** 2 / (1 - m) ** 3,
    }


def verify_radius_bracket_at_one(
    tolerance: float = _cert_cfg["tolerance"],
) -> CertificateReport:
    br = radius_bracket(1.0)
    w = invert_j(1.0).w.value
    r = abs(w)
    violations = {"lower": br.r_minus - r, "upper": r - br.r_plus}
    return _report("radius_bracket_at_one", np.array([w]), violations, tolerance)


def verify_zeta_w(
    samples: int = _cert_cfg["samples"],
    tolerance: float = _cert_cfg["tolerance"],
) -> CertificateReport:
    """Linear, logarithmic and derivative statements for j_D(w) on the unit circle"""
    zeta = circle_samples(samples)
    w = invert_j_many(zeta).w
    djd = np.abs(j_disk_derivative_array(w))
    violations = {
        "linear": np.abs(zeta - F_PRIME_0 * w**3) - ZETA_W_LINEAR_BOUND,
        "log": np.abs(
            np.log1p(-np.abs(w) ** 2) - math.log1p(-F_PRIME_0 ** (-2 / 3))
        )
        - ZETA_W_LOG_BOUND,
        "j_prime_lower": J_PRIME_LOWER - djd,
        "j_prime_upper": djd - J_PRIME_UPPER,
    }
    return _report("zeta_w", zeta, violations, tolerance)


def _wj_log_derivative_array(w: np.ndarray) -> np.ndarray:
    return w * j_disk_derivative_array(w) / j_disk_array(w)


def verify_j_prime_growth(
    samples: int = _cert_cfg["samples"],
    tolerance: float = _cert_cfg["tolerance"],
) -> CertificateReport:
    """|J'(w)| <= 4000 |w|^2 for J = w j_D' / j_D"""
    w = disk_samples(samples, SMALL_DISK_RADIUS)
    dJ = cauchy_derivative(_wj_log_derivative_array, w, 1, radius=0.01)
    violations = {"growth": np.abs(dJ) - J_GROWTH_FACTOR * np.abs(w) ** 2}
    return _report("j_prime_growth", w, violations, tolerance)


def verify_prop_b(
    samples: int = _cert_cfg["prop_b_samples"],
    tolerance: float = _cert_cfg["tolerance"],
    workers: int | None = None,
) -> CertificateReport:
    """g_hyp on the unit circle against gamma1 - Re(zeta) / 13824"""
    gamma1 = constants().gamma1
    zeta = circle_samples(samples)
    g = _chunked(g_hyp_many, zeta, workers)
    err = np.abs(g - (gamma1 - zeta.real / MODEL_DENOMINATOR))
    return _report("propB", zeta, {"linear_model": err - PROP_B_BOUND}, tolerance)


def _approximation_violations(w: np.ndarray) -> np.ndarray:
    a = F_PRIME_0 / MODEL_DENOMINATOR
    m6 = np.abs(w) ** 6
    g_d0 = float(g_disk_array(np.array([0j]))[0])

    g = g_disk_array(w)
    h0 = h_hat_array(w)
    dh = cauchy_derivative(h_hat_array, w, 1)
    ddh = cauchy_derivative(h_hat_array, w, 2)
    dlog = dh / h0
    ddlog = ddh / h0 - dlog**2
    d6 = cauchy_derivative(lambda p: np.log(h_hat_array(p) / h0[:, None]), w, 6)

    return np.stack(
        [
            np.abs(g - (g_d0 - 6 * np.log1p(-np.abs(w) ** 2) - a * (w**3).real))
            - 6.0**3 * m6,
            np.abs(dlog * w - 3 * a * w**3) - 6.0**4 * m6,
            np.abs(ddlog * w**2 - 6 * a * w**3) - 5 * 6.0**4 * m6,
            np.abs(d6) / math.factorial(6) - SIXTH_ORDER_BOUND,
        ]
    )


def verify_approximation(
    sample_count: int = _cert_cfg["samples"],
    tolerance: float = _cert_cfg["tolerance"],
    workers: int | None = None,
) -> CertificateReport:
    """
    Sixth order approximation of g_D and of the first two derivatives of
    log h_hat on |w| <= 1 - pi / (2 sqrt 3), plus the bound on the sixth
    derivative of log h_hat. Derivatives come from Cauchy integrals.
    """
    if sample_count < 1:
        raise DomainError(f"verify_approximation needs {sample_count=} >= 1")
    w = np.concatenate(
        [
            np.array([0.0, 0.05, SMALL_DISK_RADIUS * np.exp(1j * np.pi / 7)]),
            disk_samples(sample_count, SMALL_DISK_RADIUS),
        ]
    )
    chunks = [w[i : i + 64] for i in range(0, w.size, 64)]
    viol = np.concatenate(
        parallel_map(_approximation_violations, chunks, workers=workers), axis=1
    )
    keys = ("g_disk", "first_log_derivative", "second_log_derivative", "sixth_derivative")
    return _report("approximation", w, dict(zip(keys, viol)), tolerance)


def verify_disk_size(
    samples: int = _cert_cfg["samples"],
    tolerance: float = _cert_cfg["tolerance"],
) -> CertificateReport:
    """|psi^-1(tau)| <= 1 - pi / (2 sqrt 3) for tau in T with Im tau <= log(19) / pi"""
    pts = qmc.Halton(d=2, scramble=False).random(samples + 1)[1:]
    x = pts[:, 0] - 0.5
    y_low = np.sqrt(1 - x**2)
    tau = x + 1j * (y_low + pts[:, 1] * (LOG19_OVER_PI - y_low))
    tau = np.concatenate([tau, [0.5 + 1j * LOG19_OVER_PI]])
    # the half with Re < 0 is translated next to rho
    moved = np.where(tau.real < 0, tau + 1, tau)
    w = np.abs(psi_inverse_array(moved))
    return _report("disk_size", tau, {"radius": w - SMALL_DISK_RADIUS}, tolerance)


def verify_j_bound_on_line(
    samples: int = _cert_cfg["samples"],
    tolerance: float = _cert_cfg["tolerance"],
) -> CertificateReport:
    """|j(x + i)| <= 1728, relative to 1728"""
    tau = np.linspace(-0.5, 0.5, samples) + 1j
    j = np.abs(j_array(tau))
    return _report("j_bound_on_line", tau, {"modulus": (j - 1728) / 1728}, tolerance)


def verify_j_cusp_bound(
    samples: int = _cert_cfg["samples"],
    tolerance: float = _cert_cfg["tolerance"],
) -> CertificateReport:
    """|j(tau)| <= 4 exp(2 pi Im tau) for reduced tau with 1 <= Im tau <= 6, relative"""
    pts = qmc.Halton(d=2, scramble=False).random(samples + 1)[1:]
    tau = (pts[:, 0] - 0.5) + 1j * (1 + 5 * pts[:, 1])
    tau = np.concatenate([tau, [1j, 0.5 + 1j]])
    bound = np.array([j_cusp_bound(t) for t in tau])
    j = np.abs(j_array(tau))
    return _report("j_cusp_bound", tau, {"modulus": (j - bound) / bound}, tolerance)


def g_one_disk_array(w: np.ndarray) -> np.ndarray:
    """g_1 o j_D"""
    w = np.asarray(w, dtype=np.complex128)
    return g_disk_array(w) - cached_dx_g_hyp_at_1() * np.log(np.abs(j_disk_array(w)))


def verify_real_minimization(
    samples: int = 500,
    tolerance: float = _cert_cfg["tolerance"],
) -> CertificateReport:
    """g_1(j_D(w)) >= g_1(j_D(|w|)) for 0 < |w| <= 1 - pi / (2 sqrt 3)"""
    w = disk_samples(samples, SMALL_DISK_RADIUS)
    w = w[np.abs(w) > 0]
    diff = g_one_disk_array(np.abs(w).astype(np.complex128)) - g_one_disk_array(w)
    return _report("real_minimization", w, {"radial": diff}, tolerance)


def verify_convexity(
    points: int = 400,
    tolerance: float = _cert_cfg["tolerance"],
) -> CertificateReport:
    """
    Second differences of V(r) = g_1(j_D(r)) on (0, 1 - pi / (2 sqrt 3)]
    are at least 0.5 h^2, and V is smallest next to r1 = |w(1)|.
    """
    r = np.linspace(SMALL_DISK_RADIUS / points, SMALL_DISK_RADIUS, points)
    h = r[1] - r[0]
    v = g_one_disk_array(r.astype(np.complex128))
    second = v[:-2] - 2 * v[1:-1] + v[2:]
    r1 = abs(invert_j(1.0).w.value)
    i_min = int(np.argmin(v))
    violations = {
        "convexity": np.concatenate([[-math.inf], 0.5 * h**2 - second, [-math.inf]]),
        "minimum_at_r1": np.where(np.arange(points) == i_min, abs(r[i_min] - r1) - h, -math.inf),
    }
    return _report("convexity", r.astype(np.complex128), violations, tolerance)


# ----------------------------------------------------------------------------
# suites
# ----------------------------------------------------------------------------
SUITES = {
    "constants": (verify_constants, verify_f_prime_0),
    "distortion": (
        verify_koebe,
        verify_radius_bracket_at_one,
        verify_zeta_w,
        verify_j_prime_growth,
        verify_approximation,
        verify_disk_size,
        verify_j_bound_on_line,
        verify_j_cusp_bound,
        verify_real_minimization,
        verify_convexity,
    ),
    "propB": (verify_prop_b,),
    "special_values": (verify_special_values,),
}

# single certificates by name, e.g. "koebe" for verify_koebe
CERTIFICATES = {
    f.__name__.removeprefix("verify_"): f for group in SUITES.values() for f in group
}


def run_suite(
    name: str,
    tolerance: float = _cert_cfg["tolerance"],
    workers: int | None = None,
) -> list[CertificateReport]:
    """
    Run a named group of certificates.

    Parameters
    ----------
    name : str
        one of constants, distortion, propB, special_values or all, or the
        name of a single certificate from `CERTIFICATES`
    tolerance : float
        largest accepted violation
    workers : int | None
        thread count for the sample batches

    Returns
    -------
    list[CertificateReport]
        one report per certificate, in a fixed order
    """
    if name == "all":
        funcs = [f for group in SUITES.values() for f in group]
    elif name in SUITES:
        funcs = list(SUITES[name])
    elif name in CERTIFICATES:
        funcs = [CERTIFICATES[name]]
    else:
        raise DomainError(
            f"Unknown certificate suite {name=}, valid: "
            f"{list(SUITES) + ['all'] + list(CERTIFICATES)}"
        )

    reports = []
    for func in funcs:
        params = inspect.signature(func).parameters
        kwargs = {}
        if "tolerance" in params:
            kwargs["tolerance"] = tolerance
        if "workers" in params:
            kwargs["workers"] = workers
        reports.append(func(**kwargs))
    return reports
