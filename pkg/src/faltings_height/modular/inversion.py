"""
Inverse of the j-invariant and the functions living on the disk chart.

The Cayley type map psi(w) = (conj(rho) w + rho) / (w + 1) sends the unit
disk onto the upper half-plane with psi(0) = rho. Around rho, j is a cube:
j_D = j o psi satisfies j_D(w) = f(w^3) with f'(0) = F_PRIME_0, which makes
Newton in u = w^3 well conditioned even though j'(rho) = 0.

Inversion is hybrid:

    |zeta| <= disk_radius              Newton in u, canonical cube root
    disk_radius < |zeta| <= cusp_radius Newton in tau seeded from a grid on T
    |zeta| > cusp_radius               Newton in tau seeded from q ~ 1/(zeta - 744)

Every solution is re-evaluated, a residual above 1e-10 max(1, |zeta|) raises
NonConvergence instead of returning a point on the wrong sheet.
"""

import math
import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

from faltings_height.general.config import default_config
from faltings_height.general.constants import F_PRIME_0, RHO, SQRT3
from faltings_height.general.errors import DomainError, NonConvergence
from faltings_height.logging.logger import get_logger
from faltings_height.modular.core import (
    DEFAULT_ORDER,
    TauPoint,
    as_tau,
    eisenstein_array,
    g_infinity_array,
    j_and_derivative_array,
    j_array,
    j_q_expansion_coefficients,
    log_abs_delta_array,
    delta_array,
    reduce_array,
)

logger = get_logger(__name__)

RHO_BAR = RHO.conjugate()
LOG_1728_PI6 = math.log(1728 * math.pi**6)

RESIDUAL_FACTOR = 1e-10
NEWTON_TOL = 1e-14
MAX_HALVINGS = 40
SEED_GRID_YMAX = 2.0
# 1/q + 744 + 196884 q, the head of the q-expansion of j
J_HEAD = j_q_expansion_coefficients(2)

METHODS = ("disk_newton", "grid_seeded", "cusp_newton")

_inv_cfg = default_config["inversion"]


@dataclass(frozen=True)
class DiskPoint:
    value: complex

    def __post_init__(self):
        v = complex(self.value)
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise DomainError(f"Non-finite disk point {self.value=}")
        if abs(v) >= 1:
            raise DomainError(f"Disk point outside the unit disk {abs(v)=}")
        object.__setattr__(self, "value", v)


@dataclass(frozen=True)
class InversionResult:
    tau: TauPoint
    w: DiskPoint | None
    residual: float
    method: str


@dataclass
class InversionBatch:
    """Vectorized counterpart of InversionResult, w is nan where not computed"""

    zeta: np.ndarray
    tau: np.ndarray
    w: np.ndarray
    residual: np.ndarray
    method: np.ndarray  # index into METHODS

    def result(self, i: int) -> InversionResult:
        w = self.w[i]
        return InversionResult(
            tau=TauPoint.from_complex(self.tau[i]),
            w=None if np.isnan(w) else DiskPoint(complex(w)),
            residual=float(self.residual[i]),
            method=METHODS[int(self.method[i])],
        )


def as_disk(w: "DiskPoint | complex") -> DiskPoint:
    if isinstance(w, DiskPoint):
        return w
    try:
        return DiskPoint(complex(w))
    except (TypeError, ValueError) as err:
        if isinstance(err, DomainError):
            raise
        raise DomainError(f"Cannot interpret {w=} as a disk point") from err


# ----------------------------------------------------------------------------
# the map psi and its branch
# ----------------------------------------------------------------------------
def psi_array(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.complex128)
    return (RHO_BAR * w + RHO) / (w + 1)


def psi_inverse_array(tau: np.ndarray) -> np.ndarray:
    tau = np.asarray(tau, dtype=np.complex128)
    return -(tau - RHO) / (tau - RHO_BAR)


def psi_prime_array(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.complex128)
    return -1j * SQRT3 / (1 + w) ** 2


def psi(w: "DiskPoint | complex") -> TauPoint:
    return TauPoint.from_complex(psi_array(np.array([as_disk(w).value]))[0])


def psi_inverse(tau: "TauPoint | complex") -> DiskPoint:
    return DiskPoint(complex(psi_inverse_array(np.array([as_tau(tau).value]))[0]))


def canonical_branch(w: np.ndarray) -> np.ndarray:
    """
    Rotate by a cube root of unity so that arg(w) lies in [pi, 5 pi / 3).
    The rotation leaves w^3, j_D(w) and h_hat(w) unchanged.
    """
    w = np.asarray(w, dtype=np.complex128)
    beta = np.mod(np.angle(w) - np.pi, 2 * np.pi)
    sector = np.minimum(np.floor(beta * 3 / (2 * np.pi)), 2)
    k = np.mod(-sector, 3)
    return np.where(w == 0, w, w * np.exp(2j * np.pi * k / 3))


def canonical_cube_root(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=np.complex128)
    return canonical_branch(np.abs(u) ** (1 / 3) * np.exp(1j * np.angle(u) / 3))


# ----------------------------------------------------------------------------
# functions on the disk
# ----------------------------------------------------------------------------
def j_disk_array(w: np.ndarray, order: int = DEFAULT_ORDER) -> np.ndarray:
    return j_array(psi_array(w), order)


def j_disk_derivative_array(w: np.ndarray, order: int = DEFAULT_ORDER) -> np.ndarray:
    w = np.asarray(w, dtype=np.complex128)
    _, dj = j_and_derivative_array(psi_array(w), order)
    return dj * psi_prime_array(w)


def h_hat_array(w: np.ndarray, order: int = DEFAULT_ORDER) -> np.ndarray:
    w = np.asarray(w, dtype=np.complex128)
    return delta_array(psi_array(w), order) / (1 + w) ** 12


def log_abs_h_hat_array(w: np.ndarray, order: int = DEFAULT_ORDER) -> np.ndarray:
    w = np.asarray(w, dtype=np.complex128)
    return log_abs_delta_array(psi_array(w), order) - 12 * np.log(np.abs(1 + w))


def log_h_hat_derivative_array(
    w: np.ndarray, order: int = DEFAULT_ORDER
) -> np.ndarray:
    """(log h_hat)'(w) = 2 pi i E2(psi(w)) psi'(w) - 12 / (1 + w)"""
    w = np.asarray(w, dtype=np.complex128)
    tau = psi_array(w)
    # E2 = E2star + 3 / (pi Im tau), E2star is transported from the reduced point
    e2 = eisenstein_array("E2star", tau, order) + 3 / (np.pi * tau.imag)
    return 2j * np.pi * e2 * psi_prime_array(w) - 12 / (1 + w)


def g_disk_array(w: np.ndarray, order: int = DEFAULT_ORDER) -> np.ndarray:
    """g_D = -log(1728 pi^6) - 6 log(1 - |w|^2) - log|h_hat(w)| = g_inf o psi"""
    w = np.asarray(w, dtype=np.complex128)
    return (
        -LOG_1728_PI6
        - 6 * np.log1p(-np.abs(w) ** 2)
        - log_abs_h_hat_array(w, order)
    )


def j_disk(w: "DiskPoint | complex", order: int = DEFAULT_ORDER) -> complex:
    return complex(j_disk_array(np.array([as_disk(w).value]), order)[0])


def j_disk_derivative(w: "DiskPoint | complex", order: int = DEFAULT_ORDER) -> complex:
    return complex(j_disk_derivative_array(np.array([as_disk(w).value]), order)[0])


def h_hat(w: "DiskPoint | complex", order: int = DEFAULT_ORDER) -> complex:
    return complex(h_hat_array(np.array([as_disk(w).value]), order)[0])


def g_disk(w: "DiskPoint | complex", order: int = DEFAULT_ORDER) -> float:
    return float(g_disk_array(np.array([as_disk(w).value]), order)[0])


# ----------------------------------------------------------------------------
# Newton machinery
# ----------------------------------------------------------------------------
def _damped_newton(
    x0: np.ndarray,
    target: np.ndarray,
    func: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    max_iter: int,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Vectorized Newton with step halving. A step is only accepted if it lowers
    the residual, elements which stop improving are frozen.

    Returns the iterates and the residuals |func(x) - target|.
    """
    x = np.array(x0, dtype=np.complex128, copy=True)
    val, der = func(x)
    res = np.abs(val - target)
    res = np.where(np.isfinite(res), res, np.inf)
    scale = np.maximum(1.0, np.abs(target))

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(max_iter):
            active = np.flatnonzero(res > NEWTON_TOL * scale)
            if active.size == 0:
                break

            step = (val[active] - target[active]) / der[active]
            lam = np.ones(active.size)
            pending = np.isfinite(step)
            improved = False

            for _ in range(MAX_HALVINGS):
                if not pending.any():
                    break
                idx = active[pending]
                cand = x[idx] - lam[pending] * step[pending]
                v, dv = func(cand)
                r = np.abs(v - target[idx])
                good = np.isfinite(r) & (r < res[idx])

                sel = idx[good]
                x[sel], val[sel], der[sel], res[sel] = (
                    cand[good],
                    v[good],
                    dv[good],
                    r[good],
                )
                improved |= bool(good.any())

                pending_pos = np.flatnonzero(pending)
                pending[pending_pos[good]] = False
                lam[pending] /= 2

            if not improved:
                break

    return x, res


def _disk_chart_eval(order: int) -> Callable:
    """u -> (f(u), f'(u)) with j_D(w) = f(w^3) on the canonical root"""

    def func(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        w = canonical_cube_root(u)
        outside = np.abs(w) >= 0.99
        w_safe = np.where(outside, 0, w)
        tau = psi_array(w_safe)
        j, dj = j_and_derivative_array(tau, order)
        djd = dj * psi_prime_array(w_safe)
        small = np.abs(w_safe) < 1e-7
        with np.errstate(divide="ignore", invalid="ignore"):
            df = np.where(small, F_PRIME_0, djd / (3 * w_safe**2))
        j = np.where(outside, np.nan, j)
        return j, df

    return func


def _tau_eval(order: int) -> Callable:
    def func(tau: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        bad = ~(tau.imag > 0)
        safe = np.where(bad, 1j, tau)
        j, dj = j_and_derivative_array(safe, order)
        return np.where(bad, np.nan, j), dj

    return func


class _SeedGrid:
    """Values of j on a grid over the truncated fundamental domain"""

    def __init__(self):
        self._lock = threading.Lock()
        self._grids: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}

    def get(self, n: int, order: int) -> tuple[np.ndarray, np.ndarray]:
        with self._lock:
            if (n, order) not in self._grids:
                x = np.linspace(-0.5, 0.5, n)
                s = np.linspace(0.0, 1.0, n)
                xx, ss = np.meshgrid(x, s)
                y_low = np.sqrt(1 - xx**2)
                tau = xx + 1j * (y_low + ss * (SEED_GRID_YMAX - y_low))
                tau = tau.ravel()
                self._grids[(n, order)] = (tau, j_array(tau, order))
                logger.debug(f"Built j seed grid with {tau.size=}")
            return self._grids[(n, order)]


_seed_grid = _SeedGrid()


def _grid_seeds(zeta: np.ndarray, n: int, order: int) -> np.ndarray:
    tau_grid, j_grid = _seed_grid.get(n, order)
    seeds = np.empty(zeta.shape, dtype=np.complex128)
    for start in range(0, zeta.size, 1024):
        chunk = zeta[start : start + 1024]
        dist = np.abs(j_grid[None, :] - chunk[:, None])
        seeds[start : start + 1024] = tau_grid[np.argmin(dist, axis=1)]
    return seeds


def _cusp_seeds(zeta: np.ndarray) -> np.ndarray:
    """tau from the small root q of c1 q^2 + (c0 - zeta) q + 1 = 0"""
    _, c0, c1 = J_HEAD
    b = zeta - c0
    s = np.sqrt(b**2 - 4 * c1)
    s = np.where(np.abs(b + s) >= np.abs(b - s), s, -s)
    q0 = 2 / (b + s)
    return np.log(q0) / (2j * np.pi)


# ----------------------------------------------------------------------------
# inversion
# ----------------------------------------------------------------------------
def invert_j_many(
    zeta: np.ndarray,
    disk_radius: float = _inv_cfg["disk_radius"],
    cusp_radius: float = _inv_cfg["cusp_radius"],
    seed_grid: int = _inv_cfg["seed_grid"],
    max_iter: int = _inv_cfg["max_iter"],
    order: int = DEFAULT_ORDER,
) -> InversionBatch:
    """
    Invert j on an array of values.

    Parameters
    ----------
    zeta : np.ndarray
        finite complex values
    disk_radius : float
        values up to this modulus are solved in the disk chart
    cusp_radius : float
        values above this modulus are solved from the cusp seed, the disk
        coordinate w is only reported up to this modulus
    seed_grid : int
        side length of the seed grid over the fundamental domain
    max_iter : int
        Newton iteration cap per chart
    order : int
        number of q-terms

    Returns
    -------
    InversionBatch
        reduced tau, canonical w (nan above cusp_radius), residuals and the
        chart used per entry

    Raises
    ------
    NonConvergence
        if any entry misses the residual contract after the fallback
    """
    zeta = np.asarray(zeta, dtype=np.complex128).ravel()
    if not np.isfinite(zeta).all():
        raise DomainError("invert_j needs finite values")

    mod = np.abs(zeta)
    tau = np.full(zeta.shape, np.nan + 0j)
    method = np.zeros(zeta.shape, dtype=np.int8)

    w_chart = np.full(zeta.shape, np.nan + 0j)
    disk = np.flatnonzero(mod <= disk_radius)
    if disk.size:
        z = zeta[disk]
        u, _ = _damped_newton(z / F_PRIME_0, z, _disk_chart_eval(order), max_iter)
        w = canonical_cube_root(u)
        ok = np.abs(w) < 0.99
        tau[disk[ok]] = psi_array(w[ok])
        w_chart[disk[ok]] = w[ok]

    cusp = np.flatnonzero(mod > cusp_radius)
    if cusp.size:
        t, _ = _damped_newton(
            _cusp_seeds(zeta[cusp]), zeta[cusp], _tau_eval(order), max_iter
        )
        tau[cusp] = t
        method[cusp] = 2

    # middle range plus whatever the disk chart did not resolve
    tau_red = np.where(np.isnan(tau), 1j, tau)
    tau_red, _, _ = reduce_array(tau_red)
    residual = np.abs(j_array(tau_red, order) - zeta)
    residual[np.isnan(tau)] = np.inf
    scale = RESIDUAL_FACTOR * np.maximum(1.0, mod)

    retry = np.flatnonzero((residual > scale) & (mod <= cusp_radius))
    if retry.size:
        if disk.size and np.isin(retry, disk).any():
            logger.debug(f"Disk chart fallback for {np.isin(retry, disk).sum()} values")
        z = zeta[retry]
        t, _ = _damped_newton(
            _grid_seeds(z, seed_grid, order), z, _tau_eval(order), max_iter
        )
        t_red, _, _ = reduce_array(np.where(t.imag > 0, t, 1j))
        r = np.abs(j_array(t_red, order) - z)
        better = r < residual[retry]
        tau_red[retry[better]] = t_red[better]
        residual[retry[better]] = r[better]
        method[retry[better]] = 1
        w_chart[retry[better]] = np.nan

    failed = np.flatnonzero(residual > scale)
    if failed.size:
        worst = failed[np.argmax(residual[failed] / scale[failed])]
        raise NonConvergence(
            f"j inversion failed for {failed.size} values, worst {zeta[worst]=}",
            best_residual=float(residual[worst]),
        )

    w = w_chart
    near = np.flatnonzero((mod <= cusp_radius) & np.isnan(w_chart))
    if near.size:
        # move the reduced point to the domain with rho as its corner, whose
        # psi preimage is a sector of angle 2 pi / 3 at the origin
        t = tau_red[near]
        t = np.where(t.real < 0, t + 1, t)
        w[near] = canonical_branch(psi_inverse_array(t))

    return InversionBatch(zeta, tau_red, w, residual, method)


def invert_j(zeta: complex, **kwargs) -> InversionResult:
    """Scalar inversion, see `invert_j_many` for the keyword arguments"""
    zeta = complex(zeta)
    res = invert_j_many(np.array([zeta]), **kwargs).result(0)
    logger.debug(f"{zeta=}, {res.method=}, {res.residual=}")
    return res


def g_hyp_many(zeta: np.ndarray, order: int = DEFAULT_ORDER, **kwargs) -> np.ndarray:
    """g_hyp(zeta) = g_inf(tau) for j(tau) = zeta"""
    batch = invert_j_many(zeta, order=order, **kwargs)
    return g_infinity_array(batch.tau, order)


def g_hyp(zeta: complex, order: int = DEFAULT_ORDER, **kwargs) -> float:
    return float(g_hyp_many(np.array([complex(zeta)]), order, **kwargs)[0])


# ----------------------------------------------------------------------------
# derivatives at 1 and the function g_1
# ----------------------------------------------------------------------------
def dx_g_hyp_at_1(order: int = DEFAULT_ORDER) -> float:
    """
    d/dx g_hyp at zeta = 1 from the disk chart

        2 Re(d g_D)(r1) / j_D'(r1),   2 Re(d g_D)(r) = 12 r / (1 - r^2) - (log h_hat)'(r)

    where r1 in (0, r0) is the real point with j_D(r1) = 1, i.e. the modulus
    of the canonical root.
    """
    r1 = abs(invert_j(1.0, order=order).w.value)
    w = np.array([complex(r1)])
    two_dg = 12 * r1 / (1 - r1**2) - log_h_hat_derivative_array(w, order)[0].real
    djd = j_disk_derivative_array(w, order)[0].real
    return float(two_dg / djd)


def dx_g_hyp_at_1_finite_difference(h: float = 1e-4, order: int = DEFAULT_ORDER) -> float:
    vals = g_hyp_many(np.array([1 + h, 1 - h], dtype=np.complex128), order)
    return float((vals[0] - vals[1]) / (2 * h))


def dy_g_hyp_at_1(h: float = 1e-4, order: int = DEFAULT_ORDER) -> float:
    vals = g_hyp_many(np.array([1 + 1j * h, 1 - 1j * h]), order)
    return float((vals[0] - vals[1]) / (2 * h))


_dx_lock = threading.Lock()
_dx_cache: dict[int, float] = {}


def cached_dx_g_hyp_at_1(order: int = DEFAULT_ORDER) -> float:
    with _dx_lock:
        if order not in _dx_cache:
            _dx_cache[order] = dx_g_hyp_at_1(order)
        return _dx_cache[order]


def g_one_many(zeta: np.ndarray, order: int = DEFAULT_ORDER) -> np.ndarray:
    zeta = np.asarray(zeta, dtype=np.complex128)
    with np.errstate(divide="ignore"):
        return g_hyp_many(zeta, order) - cached_dx_g_hyp_at_1(order) * np.log(
            np.abs(zeta)
        )


def g_one(zeta: complex, order: int = DEFAULT_ORDER) -> float:
    """g_1(zeta) = g_hyp(zeta) - dx_g_hyp(1) log|zeta|, +inf at 0"""
    return float(g_one_many(np.array([complex(zeta)]), order)[0])
