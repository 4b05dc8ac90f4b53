"""
Upper bounds for the essential minimum from circles of capacity one.

For the circle |zeta - a| = 1 the equilibrium measure is dt on
zeta = a + exp(2 pi i t), and the heights of a sequence of algebraic numbers
equidistributing on it converge to (1/12) int_0^1 g_hyp(a + e^{2 pi i t}) dt.
"""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from faltings_height.distortion.certificates import radius_bracket_array
from faltings_height.general.config import default_config
from faltings_height.general.constants import (
    F_PRIME_0,
    MODEL_DENOMINATOR,
    R0,
    ZETA_MINUS_ONE,
    ZETA_PRIME_MINUS_ONE,
)
from faltings_height.general.errors import DomainError, NonConvergence
from faltings_height.general.workers import parallel_map
from faltings_height.logging.logger import get_logger
from faltings_height.modular.core import DEFAULT_ORDER
from faltings_height.modular.inversion import (
    LOG_1728_PI6,
    g_disk_array,
    g_hyp_many,
    invert_j_many,
    log_abs_h_hat_array,
)

logger = get_logger(__name__)

_circ_cfg = default_config["circles"]

# branch points of g_hyp, where it is only Hoelder continuous
BRANCH_POINTS = (0.0, 1728.0)
GRADING_DISTANCE = 0.05
GRADING_POWER = 6
EVAL_CHUNK = 2048
GOLDEN = (1 + math.sqrt(5)) / 2


class BranchTrackingError(NonConvergence):
    """w_a(t) left the disk B(0, r0) or w_a(t)^3 jumped between nodes"""

    pass


class BoundInconsistency(RuntimeError):
    """A lower bound exceeds an upper bound"""

    pass


@dataclass
class UpperBoundReport:
    center: float
    value: float
    nodes: int
    node_doubling_delta: float
    doubling_deltas: list[float] = field(default_factory=list)
    graded: bool = False
    method: str = "quadrature"

    def to_dict(self) -> dict:
        return {
            "center": self.center,
            "value": self.value,
            "nodes": self.nodes,
            "node_doubling_delta": self.node_doubling_delta,
            "doubling_deltas": self.doubling_deltas,
            "graded": self.graded,
            "method": self.method,
        }


# ----------------------------------------------------------------------------
# quadrature on the upper half circle
# ----------------------------------------------------------------------------
def needs_grading(center: float) -> bool:
    """True if the circle passes close to a branch point of g_hyp"""
    return any(abs(abs(center - b) - 1) < GRADING_DISTANCE for b in BRANCH_POINTS)


def _grading(s: np.ndarray, graded: bool) -> tuple[np.ndarray, np.ndarray]:
    """
    Map s in [0, 1] to t = phi(s) / 2 in [0, 1/2] together with phi'(s).

    The graded map is a polynomial sigmoid whose derivatives vanish to order
    GRADING_POWER at both ends, which clusters the nodes at t = 0 and t = 1/2,
    the two points of a real centered circle closest to any real branch point.
    """
    if not graded:
        return s / 2, np.ones_like(s)
    p = GRADING_POWER
    xi = 2 * s - 1
    v = (0.5 - 1 / p) * xi**3 + xi / p + 0.5
    dv = 2 * (3 * (0.5 - 1 / p) * xi**2 + 1 / p)
    den = v**p + (1 - v) ** p
    phi = v**p / den
    dphi = p * dv * v ** (p - 1) * (1 - v) ** (p - 1) / den**2
    return phi / 2, dphi


def _eval_chunked(func: Callable, t: np.ndarray, workers: int | None) -> np.ndarray:
    chunks = [t[i : i + EVAL_CHUNK] for i in range(0, t.size, EVAL_CHUNK)]
    return np.concatenate(parallel_map(func, chunks, workers=workers))


def half_circle_quadrature(
    func: Callable[[np.ndarray], np.ndarray],
    nodes: int = _circ_cfg["nodes"],
    tol: float = _circ_cfg["tol"],
    max_nodes: int = _circ_cfg["max_nodes"],
    graded: bool = False,
    workers: int | None = None,
) -> tuple[float, int, list[float], tuple[np.ndarray, np.ndarray]]:
    """
    int_0^1 F(t) dt for F symmetric under t -> 1 - t, from F on [0, 1/2].

    The trapezoid sum is nested: doubling the node count only evaluates the
    new midpoints and adds them to the running sum.

    Parameters
    ----------
    func : Callable[[np.ndarray], np.ndarray]
        vectorized integrand in t
    nodes : int
        initial number of nodes on the full circle, even and >= 16
    tol : float
        stop once a doubling changes the value by less than this
    max_nodes : int
        cap on the number of nodes on the full circle
    graded : bool
        cluster the nodes at t = 0 and t = 1/2
    workers : int | None
        threads for the integrand evaluation

    Returns
    -------
    tuple
        value, nodes used, the changes under every doubling, and the
        evaluated (t, F(t)) arrays
    """
    if nodes < 16 or nodes % 2:
        raise DomainError(f"Need an even node count >= 16, got {nodes=}")

    m = nodes // 2
    s = np.arange(m + 1) / m
    t, dphi = _grading(s, graded)
    vals = _eval_chunked(func, t, workers)
    weights = dphi.copy()
    weights[[0, -1]] *= 0.5
    total = float(np.sum(weights * vals))
    value = total / m

    ts, fs = [t], [vals]
    deltas = []
    while 2 * m * 2 <= max_nodes:
        s_new = (2 * np.arange(m) + 1) / (2 * m)
        t_new, dphi_new = _grading(s_new, graded)
        vals_new = _eval_chunked(func, t_new, workers)
        ts.append(t_new)
        fs.append(vals_new)
        total += float(np.sum(dphi_new * vals_new))
        m *= 2
        new_value = total / m
        deltas.append(abs(new_value - value))
        value = new_value
        if deltas[-1] < tol:
            break
    else:
        if not deltas or deltas[-1] >= tol:
            logger.warning(
                f"Quadrature stopped at {2 * m} nodes with change"
                f" {deltas[-1] if deltas else math.nan:.3e} above {tol=}"
            )

    return value, 2 * m, deltas, (np.concatenate(ts), np.concatenate(fs))


# ----------------------------------------------------------------------------
# the integrals
# ----------------------------------------------------------------------------
def circle_integral(
    center: float,
    nodes: int = _circ_cfg["nodes"],
    tol: float = _circ_cfg["tol"],
    max_nodes: int = _circ_cfg["max_nodes"],
    order: int = DEFAULT_ORDER,
    workers: int | None = None,
) -> UpperBoundReport:
    """
    (1/12) int_0^1 g_hyp(center + e^{2 pi i t}) dt by the trapezoid rule on
    the upper half circle, doubled by conjugation symmetry.

    Parameters
    ----------
    center : float
        real center of the unit circle
    nodes : int
        initial number of nodes on the full circle, doubled until the value
        changes by less than `tol` or `max_nodes` is reached
    tol : float
        doubling tolerance
    max_nodes : int
        node cap
    order : int
        number of q-terms
    workers : int | None
        threads for the integrand

    Returns
    -------
    UpperBoundReport
        value, final node count and the last doubling change
    """
    center = float(center)
    graded = needs_grading(center)

    def integrand(t):
        return g_hyp_many(center + np.exp(2j * np.pi * t), order) / 12

    value, n, deltas, _ = half_circle_quadrature(
        integrand, nodes, tol, max_nodes, graded=graded, workers=workers
    )
    report = UpperBoundReport(
        center=center,
        value=value,
        nodes=n,
        node_doubling_delta=deltas[-1] if deltas else math.nan,
        doubling_deltas=deltas,
        graded=graded,
    )
    logger.debug(f"{report=}")
    return report


def _check_branch(t: np.ndarray, zeta: np.ndarray, w: np.ndarray):
    """w_a(t) stays in B(0, r0) and w_a(t)^3 = f^-1(zeta) moves continuously"""
    mod = np.abs(w)
    if not (np.isfinite(w).all() and (mod < R0).all()):
        worst = int(np.nanargmax(np.where(np.isfinite(mod), mod, np.inf)))
        raise BranchTrackingError(f"w_a(t) left B(0, r0) at t={t[worst]}, w={w[worst]}")

    idx = np.argsort(t, kind="stable")
    u = w[idx] ** 3
    du = np.abs(np.diff(u))
    dz = np.abs(np.diff(zeta[idx]))
    # |(f^-1)'| from the distortion bound of the normalized f on the unit disk
    m = float(np.abs(u).max()) / R0**3
    lipschitz = (1 + m) ** 3 / ((1 - m) * F_PRIME_0)
    bad = np.flatnonzero(du > 2 * lipschitz * dz + 1e-15)
    if bad.size:
        k = bad[np.argmax(du[bad])]
        raise BranchTrackingError(
            f"w_a(t)^3 jumps by {du[k]:.3e} between t={t[idx][k]} and t={t[idx][k + 1]}"
        )


def circle_integral_hhat(
    center: float,
    nodes: int = _circ_cfg["nodes"],
    tol: float = _circ_cfg["tol"],
    max_nodes: int = _circ_cfg["max_nodes"],
    order: int = DEFAULT_ORDER,
    workers: int | None = None,
) -> UpperBoundReport:
    """
    Same integral through the holomorphic part of g_hyp in the disk model:

        int_0^1 g_hyp dt = -log(1728 pi^6) - log|h(s_a)|
                           - 6 int_0^1 log(1 - |w_a(t)|^2) dt

    with w_a(t) the canonical preimage of a + e^{2 pi i t} and s_a the
    modulus of the canonical preimage of a. Valid for centers in (0, 2).

    Raises
    ------
    DomainError
        for centers outside (0, 2)
    BranchTrackingError
        if the disk preimages are not continuous along the circle
    """
    center = float(center)
    if not (0 < center < 2):
        raise DomainError(f"circle_integral_hhat needs 0 < center < 2, got {center=}")
    graded = needs_grading(center)

    s_a = abs(invert_j_many(np.array([complex(center)]), order=order).w[0])
    log_h = float(log_abs_h_hat_array(np.array([complex(s_a)]), order)[0])

    preimages = {}

    def integrand(t):
        w = invert_j_many(center + np.exp(2j * np.pi * t), order=order).w
        preimages.update(zip(t.tolist(), w.tolist()))
        return np.log1p(-np.abs(w) ** 2)

    value, n, deltas, (t, _) = half_circle_quadrature(
        integrand, nodes, tol, max_nodes, graded=graded, workers=workers
    )
    w = np.array([preimages[x] for x in t.tolist()])
    _check_branch(t, center + np.exp(2j * np.pi * t), w)

    report = UpperBoundReport(
        center=center,
        value=(-LOG_1728_PI6 - log_h - 6 * value) / 12,
        nodes=n,
        node_doubling_delta=deltas[-1] / 2 if deltas else math.nan,
        doubling_deltas=[d / 2 for d in deltas],
        graded=graded,
        method="hhat",
    )
    logger.debug(f"{report=}")
    return report


def analytic_upper_bound(
    center: float,
    nodes: int = _circ_cfg["nodes"],
    tol: float = _circ_cfg["tol"],
    max_nodes: int = _circ_cfg["max_nodes"],
    order: int = DEFAULT_ORDER,
) -> UpperBoundReport:
    """
    Upper bound of `circle_integral` built only from the radius bracket of
    the disk preimages:

        g_D(0) - f'(0) / 13824 r_-(a)^3 + 6^3 r_+(a)^6
               - 6 int_0^1 log(1 - r_+(|a + e^{2 pi i t}|)^2) dt

    divided by 12. Its integrand is an explicit elementary function of t.
    """
    center = float(center)
    if not (0 < center < 2):
        raise DomainError(f"analytic_upper_bound needs 0 < center < 2, got {center=}")

    r_minus, r_plus = radius_bracket_array(np.array([center]))
    g_d0 = float(g_disk_array(np.array([0j]), order)[0])

    def integrand(t):
        _, rp = radius_bracket_array(np.abs(center + np.exp(2j * np.pi * t)))
        return np.log1p(-(rp**2))

    value, n, deltas, _ = half_circle_quadrature(
        integrand, nodes, tol, max_nodes, graded=needs_grading(center), workers=1
    )
    total = (
        g_d0
        - F_PRIME_0 / MODEL_DENOMINATOR * float(r_minus[0]) ** 3
        + 6**3 * float(r_plus[0]) ** 6
        - 6 * value
    )
    return UpperBoundReport(
        center=center,
        value=total / 12,
        nodes=n,
        node_doubling_delta=deltas[-1] / 2 if deltas else math.nan,
        doubling_deltas=[d / 2 for d in deltas],
        graded=needs_grading(center),
        method="analytic",
    )


# ----------------------------------------------------------------------------
# center choice
# ----------------------------------------------------------------------------
def optimize_center(
    lo: float = _circ_cfg["sweep"][0],
    hi: float = _circ_cfg["sweep"][1],
    center_tol: float = _circ_cfg["center_tol"],
    **integral_kwargs,
) -> UpperBoundReport:
    """
    Golden section search of `circle_integral` over [lo, hi]. The end points
    are evaluated as well, so a monotone objective returns the boundary.
    """
    if not (0 <= lo < hi):
        raise DomainError(f"optimize_center needs 0 <= lo < hi, got {lo=}, {hi=}")

    cache: dict[float, UpperBoundReport] = {}

    def f(x: float) -> float:
        if x not in cache:
            cache[x] = circle_integral(x, **integral_kwargs)
        return cache[x].value

    a, b = lo, hi
    c = b - (b - a) / GOLDEN
    d = a + (b - a) / GOLDEN
    while abs(c - d) > center_tol:
        if f(c) < f(d):
            b = d
        else:
            a = c
        c = b - (b - a) / GOLDEN
        d = a + (b - a) / GOLDEN

    for x in ((a + b) / 2, lo, hi):
        f(x)
    best = min(cache.values(), key=lambda r: r.value)
    logger.info(f"Best circle center {best.center:.6f} with value {best.value:.10f}")
    return best


def sweep_centers(centers: list[float], **integral_kwargs) -> list[UpperBoundReport]:
    return [circle_integral(c, **integral_kwargs) for c in centers]


def zhang_bound() -> float:
    """6 (zeta(-1) / 2 + zeta'(-1)), half the Faltings height of the modular curve"""
    return 6 * (ZETA_MINUS_ONE / 2 + ZETA_PRIME_MINUS_ONE)


def sandwich_check(lower: "float | object", upper: "float | UpperBoundReport") -> float:
    """
    Gap upper - lower between a lower bound (a value or a report with an
    `infimum`) and an upper bound (a value or an `UpperBoundReport`).

    Raises
    ------
    BoundInconsistency
        if the lower bound exceeds the upper bound
    """
    low = float(getattr(lower, "infimum", lower))
    up = float(getattr(upper, "value", upper))
    if low > up:
        raise BoundInconsistency(f"Lower bound {low:.10f} exceeds upper bound {up:.10f}")
    return up - low
