"""
Lower bounds for the essential minimum from real sections.

A family of integer polynomials P_k with exponents a_k >= 0 defines

    G(zeta) = g_hyp(zeta) / 12 - sum_k a_k log|P_k(zeta)|

as long as the weight budget delta = 1/12 - sum_k a_k deg(P_k) stays
nonnegative. Every algebraic number which is not a root of some P_k has
height at least inf G, so the infimum is a lower bound for the essential
minimum.

The infimum is searched in tau = j^-1(zeta): a grid over the truncated
fundamental domain, Nelder-Mead refinement from the best cells, and an
explicit bound which closes the region towards the cusp.
"""

import math
import threading
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import ujson
from scipy.optimize import brentq, minimize

from faltings_height.general.config import default_config
from faltings_height.general.errors import DomainError
from faltings_height.general.workers import parallel_map
from faltings_height.heights.polynomials import IntegerPolynomial, find_roots
from faltings_height.logging.logger import get_logger
from faltings_height.modular.core import (
    DEFAULT_ORDER,
    LOG_4PI,
    g_infinity_array,
    j_array,
)
from faltings_height.modular.inversion import cached_dx_g_hyp_at_1, g_hyp_many

logger = get_logger(__name__)

_sec_cfg = default_config["sections"]

# remainder of the cusp approximation of g_inf for Im tau >= 1
CUSP_REMAINDER = 24 / (math.exp(2 * math.pi) - 2)
CUSP_MARGIN = 0.01
GRID_CHUNK = 20_000
MAX_CUSP_HEIGHT = 1e4


class BudgetViolation(DomainError):
    """The exponents exceed the weight budget 1/12"""

    pass


@dataclass(frozen=True)
class SectionFamily:
    members: tuple[tuple[IntegerPolynomial, float], ...] = ()

    def __post_init__(self):
        members = []
        for poly, a in self.members:
            a = float(a)
            if not math.isfinite(a) or a < 0:
                raise DomainError(f"Exponents must be finite and >= 0, got {a=}")
            members.append((IntegerPolynomial.parse(poly), a))
        object.__setattr__(self, "members", tuple(members))
        if self.delta_exponent < 0:
            raise BudgetViolation(
                f"Weight budget exceeded, {self.delta_exponent=:.3e} < 0"
            )

    @classmethod
    def from_lists(cls, polys: list, exponents: list[float]) -> "SectionFamily":
        if len(polys) != len(exponents):
            raise DomainError(f"{len(polys)=} polynomials but {len(exponents)=} exponents")
        return cls(tuple(zip(polys, exponents)))

    @property
    def polys(self) -> tuple[IntegerPolynomial, ...]:
        return tuple(p for p, _ in self.members)

    @property
    def exponents(self) -> np.ndarray:
        return np.array([a for _, a in self.members], dtype=float)

    @property
    def delta_exponent(self) -> float:
        return 1 / 12 - sum(a * p.degree for p, a in self.members)

    def with_exponents(self, exponents) -> "SectionFamily":
        return SectionFamily.from_lists(list(self.polys), list(exponents))

    def to_dict(self) -> dict:
        return {
            "polys": [list(p.coefficients) for p in self.polys],
            "exponents": self.exponents.tolist(),
            "delta_exponent": self.delta_exponent,
        }


@dataclass
class LowerBoundReport:
    family: SectionFamily
    infimum: float
    argmin: list[complex]
    grid_resolution: float
    refinement_iterations: int
    cusp_cutoff: float
    excluded_points: list[complex] = field(default_factory=list)
    optimizer_cycles: int = 0
    stagnated: bool = False

    def to_dict(self) -> dict:
        return {
            "family": self.family.to_dict(),
            "infimum": self.infimum,
            "argmin": [[z.real, z.imag] for z in self.argmin],
            "grid_resolution": self.grid_resolution,
            "refinement_iterations": self.refinement_iterations,
            "cusp_cutoff": self.cusp_cutoff,
            "excluded_points": [[z.real, z.imag] for z in self.excluded_points],
            "optimizer_cycles": self.optimizer_cycles,
            "stagnated": self.stagnated,
        }


# ----------------------------------------------------------------------------
# pointwise evaluation
# ----------------------------------------------------------------------------
def _log_abs_polys(polys: tuple[IntegerPolynomial, ...], zeta: np.ndarray) -> np.ndarray:
    """(len(polys), len(zeta)) array of log|P_k(zeta)|, -inf at roots"""
    out = np.empty((len(polys), zeta.size))
    with np.errstate(divide="ignore"):
        for k, p in enumerate(polys):
            out[k] = np.log(np.abs(p.evaluate(zeta)))
    return out


def _subtract_sections(val: np.ndarray, family: SectionFamily, logs: np.ndarray) -> np.ndarray:
    """val - sum a_k log|P_k|, +inf at roots of members with positive exponent"""
    val = val - family.exponents @ np.where(np.isneginf(logs), 0.0, logs)
    val[np.isneginf(logs)[family.exponents > 0].any(axis=0)] = math.inf
    return val


def section_green_many(
    family: SectionFamily, zeta: np.ndarray, order: int = DEFAULT_ORDER
) -> np.ndarray:
    zeta = np.atleast_1d(np.asarray(zeta, dtype=np.complex128))
    val = g_hyp_many(zeta, order) / 12
    if family.members:
        val = _subtract_sections(val, family, _log_abs_polys(family.polys, zeta))
    return val


def section_green(family: SectionFamily, zeta: complex, order: int = DEFAULT_ORDER) -> float:
    """G(zeta), +inf at the roots of members with positive exponent"""
    return float(section_green_many(family, np.array([complex(zeta)]), order)[0])


def _green_tau(family: SectionFamily, tau: np.ndarray, order: int) -> np.ndarray:
    """G(j(tau)) evaluated from tau directly"""
    val = g_infinity_array(tau, order) / 12
    if family.members:
        val = _subtract_sections(val, family, _log_abs_polys(family.polys, j_array(tau, order)))
    return val


# ----------------------------------------------------------------------------
# grid over the fundamental domain
# ----------------------------------------------------------------------------
@dataclass
class _GridBlock:
    tau: np.ndarray
    base: np.ndarray  # g_inf / 12
    logs: dict[tuple[int, ...], np.ndarray]
    zeta: np.ndarray
    resolution: float


def _grid_tau(n: int, y_from: float | None, y_to: float) -> tuple[np.ndarray, float]:
    x = np.linspace(-0.5, 0.5, n)
    s = np.linspace(0.0, 1.0, n)
    xx, ss = np.meshgrid(x, s)
    y_low = np.sqrt(1 - xx**2) if y_from is None else np.full_like(xx, y_from)
    yy = y_low + ss * (y_to - y_low)
    resolution = max(x[1] - x[0], (y_to - float(y_low.min())) / (n - 1))
    return (xx + 1j * yy).ravel(), resolution


class SectionGrid:
    """
    Modular data on the grid, computed once per (n, ymax, order). Changing the
    exponents only recombines the cached arrays.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._blocks: dict[tuple, _GridBlock] = {}

    def block(
        self,
        n: int,
        y_to: float,
        y_from: float | None = None,
        order: int = DEFAULT_ORDER,
        workers: int | None = None,
    ) -> _GridBlock:
        key = (n, y_from, y_to, order)
        with self._lock:
            if key not in self._blocks:
                tau, res = _grid_tau(n, y_from, y_to)
                chunks = [tau[i : i + GRID_CHUNK] for i in range(0, tau.size, GRID_CHUNK)]

                def _eval(chunk):
                    return g_infinity_array(chunk, order) / 12, j_array(chunk, order)

                parts = parallel_map(_eval, chunks, workers=workers)
                self._blocks[key] = _GridBlock(
                    tau=tau,
                    base=np.concatenate([p[0] for p in parts]),
                    logs={},
                    zeta=np.concatenate([p[1] for p in parts]),
                    resolution=res,
                )
                logger.debug(f"Section grid block {key=} with {tau.size} points")
            return self._blocks[key]

    def values(self, blk: _GridBlock, family: SectionFamily) -> np.ndarray:
        val = blk.base.copy()
        for p, a in family.members:
            if a == 0:
                continue
            with self._lock:
                if p.coefficients not in blk.logs:
                    blk.logs[p.coefficients] = _log_abs_polys((p,), blk.zeta)[0]
                logs = blk.logs[p.coefficients]
            val -= a * logs
        return val


_section_grid = SectionGrid()


def cusp_cutoff(family: SectionFamily, incumbent: float) -> float:
    """
    Height Y0 >= 1 such that G(j(tau)) >= incumbent + 0.01 whenever
    Im tau >= Y0, for tau in the fundamental domain.

    From g_inf >= 2 pi y - 6 log y - 6 log 4 pi - CUSP_REMAINDER and
    |j| <= 4 exp(2 pi y) one gets G >= 2 pi delta y - log(y) / 2 - C.
    """
    delta = family.delta_exponent
    if delta <= 0:
        raise BudgetViolation(f"Cusp cutoff needs a positive budget, {delta=}")

    const = (6 * LOG_4PI + CUSP_REMAINDER) / 12
    for p, a in family.members:
        const += a * (math.log(sum(abs(c) for c in p.coefficients)) + p.degree * math.log(4))
    target = incumbent + CUSP_MARGIN

    def excess(y):
        return 2 * math.pi * delta * y - 0.5 * math.log(y) - const - target

    y_lo = max(1.0, 1 / (4 * math.pi * delta))
    if excess(y_lo) >= 0:
        return 1.0
    y_hi = 2 * y_lo
    while excess(y_hi) < 0:
        y_hi *= 2
        if y_hi > MAX_CUSP_HEIGHT:
            raise BudgetViolation(
                f"Cusp cutoff beyond {MAX_CUSP_HEIGHT}, weight budget {delta=} is too small"
            )
    return brentq(excess, y_lo, y_hi)


# ----------------------------------------------------------------------------
# infimum
# ----------------------------------------------------------------------------
def global_infimum(
    family: SectionFamily,
    grid: int = _sec_cfg["grid"],
    ymax: float = _sec_cfg["ymax"],
    refine_top_k: int = _sec_cfg["refine_top_k"],
    xatol: float = _sec_cfg["xatol"],
    fatol: float = _sec_cfg["fatol"],
    order: int = DEFAULT_ORDER,
    workers: int | None = None,
) -> LowerBoundReport:
    """
    Infimum of the section Green function over the complex plane.

    Parameters
    ----------
    family : SectionFamily
        polynomials with exponents, strictly positive weight budget
    grid : int
        points per axis of the tau grid over the fundamental domain
    ymax : float
        top of the default grid, extended up to the cusp cutoff if needed
    refine_top_k : int
        number of best grid cells refined by Nelder-Mead
    xatol, fatol : float
        Nelder-Mead tolerances in tau and in the value
    order : int
        number of q-terms
    workers : int | None
        threads for the grid evaluation

    Returns
    -------
    LowerBoundReport
        infimum, minimizing zeta = j(tau*) and the search diagnostics

    Raises
    ------
    BudgetViolation
        if the weight budget is not positive
    """
    if family.delta_exponent <= 0:
        raise BudgetViolation(
            f"global_infimum needs a positive budget, {family.delta_exponent=}"
        )

    blk = _section_grid.block(grid, ymax, order=order, workers=workers)
    taus = [blk.tau]
    vals = [_section_grid.values(blk, family)]
    resolution = blk.resolution

    y0 = cusp_cutoff(family, float(np.min(vals[0])))
    if y0 > ymax:
        logger.info(f"Extending the section grid to the cusp cutoff {y0=:.3f}")
        ext = _section_grid.block(grid, y0, y_from=ymax, order=order, workers=workers)
        taus.append(ext.tau)
        vals.append(_section_grid.values(ext, family))
        resolution = max(resolution, ext.resolution)

    tau = np.concatenate(taus)
    val = np.concatenate(vals)
    best = np.argsort(val, kind="stable")[:refine_top_k]

    def objective(p):
        if p[1] <= 0:
            return math.inf
        return float(_green_tau(family, np.array([complex(p[0], p[1])]), order)[0])

    candidates = []
    iterations = 0
    for i in best:
        res = minimize(
            objective,
            x0=np.array([tau[i].real, tau[i].imag]),
            method="Nelder-Mead",
            options={"xatol": xatol, "fatol": fatol, "maxiter": 2000},
        )
        iterations += int(res.nit)
        if res.fun <= val[i]:
            candidates.append((float(res.fun), complex(res.x[0], res.x[1])))
        else:
            candidates.append((float(val[i]), complex(tau[i])))

    candidates.sort(key=lambda c: c[0])
    infimum = candidates[0][0]
    argmin_tau = [t for v, t in candidates if v - infimum <= 1e-9]
    zeta = j_array(np.array(argmin_tau), order)

    argmin = []
    for z in zeta:
        z = complex(z)
        if all(abs(z - a) > 1e-6 * max(1, abs(z)) for a in argmin):
            argmin.append(z)

    report = LowerBoundReport(
        family=family,
        infimum=infimum,
        argmin=argmin,
        grid_resolution=float(resolution),
        refinement_iterations=iterations,
        cusp_cutoff=float(y0),
        excluded_points=excluded_points(family),
    )
    logger.debug(f"{report.infimum=}, {report.argmin=}")
    return report


def excluded_points(family: SectionFamily) -> list[complex]:
    """Roots of the members with positive exponent, where the bound says nothing"""
    pts = []
    for p, a in family.members:
        if a > 0:
            pts.extend(find_roots(p).roots)
    return pts


# ----------------------------------------------------------------------------
# optimization over the exponents
# ----------------------------------------------------------------------------
def optimize_exponents(
    polys: list,
    init: list[float] | None = None,
    exponent_box: float = _sec_cfg["exponent_box"],
    initial_step: float = _sec_cfg["initial_step"],
    min_step: float = _sec_cfg["min_step"],
    cycle_tol: float = _sec_cfg["cycle_tol"],
    max_cycles: int = _sec_cfg["max_cycles"],
    **infimum_kwargs,
) -> LowerBoundReport:
    """
    Maximize the infimum of the section Green function over the exponents.

    The infimum is concave in the exponents. Cyclic coordinate ascent with
    step doubling on success and halving on failure runs until a full cycle
    gains less than `cycle_tol` with all steps below `min_step`, then a
    Nelder-Mead polish is accepted only if it improves the value.

    Parameters
    ----------
    polys : list
        member polynomials, anything `IntegerPolynomial.parse` reads
    init : list[float] | None
        start exponents, zeros if None
    exponent_box : float
        upper limit of every exponent
    initial_step, min_step : float
        coordinate step control
    cycle_tol : float
        convergence threshold for the gain over a full cycle
    max_cycles : int
        cap on the number of cycles, reaching it marks the report stagnated
    **infimum_kwargs
        forwarded to `global_infimum`

    Returns
    -------
    LowerBoundReport
        the inner report at the best exponents found
    """
    polys = [IntegerPolynomial.parse(p) for p in polys]
    k = len(polys)
    a = np.zeros(k) if init is None else np.array(init, dtype=float)
    if a.shape != (k,):
        raise DomainError(f"Need {k} initial exponents, got {a.shape=}")
    degrees = np.array([p.degree for p in polys])

    def feasible(x):
        return (x >= 0).all() and (x <= exponent_box).all() and 1 / 12 - x @ degrees > 0

    cache: dict[tuple, LowerBoundReport] = {}

    def evaluate(x) -> float:
        key = tuple(np.round(x, 15))
        if key not in cache:
            fam = SectionFamily.from_lists(polys, list(x))
            cache[key] = global_infimum(fam, **infimum_kwargs)
        return cache[key].infimum

    if not feasible(a):
        raise BudgetViolation(f"Initial exponents outside the feasible box, {a=}")

    val = evaluate(a)
    step = np.full(k, initial_step)
    cycles = 0
    stagnated = True
    for cycles in range(1, max_cycles + 1):
        start_val = val
        for i in range(k):
            moved = False
            for direction in (1.0, -1.0):
                while True:
                    cand = a.copy()
                    cand[i] = min(max(a[i] + direction * step[i], 0.0), exponent_box)
                    if cand[i] == a[i] or not feasible(cand):
                        break
                    v = evaluate(cand)
                    if v > val:
                        a, val = cand, v
                        step[i] *= 2
                        moved = True
                    else:
                        break
                if moved:
                    break
            if not moved:
                step[i] = max(step[i] / 2, min_step / 2)
        logger.debug(f"Exponent cycle {cycles}: {val=}, {a=}, {step=}")
        if val - start_val < cycle_tol and (step <= min_step).all():
            stagnated = False
            break

    def neg(x):
        return -evaluate(x) if feasible(x) else math.inf

    polish = minimize(
        neg,
        x0=a,
        method="Nelder-Mead",
        options={
            "initial_simplex": np.vstack([a, a + np.diag(np.full(k, 10 * min_step))]),
            "xatol": min_step,
            "fatol": cycle_tol,
            "maxfev": 30 * k,
        },
    )
    if feasible(polish.x) and -polish.fun > val:
        a, val = polish.x, -polish.fun

    report = cache[tuple(np.round(a, 15))]
    report.optimizer_cycles = cycles
    report.stagnated = stagnated
    if stagnated:
        logger.warning(f"Exponent optimization hit {max_cycles=} without converging")
    logger.info(f"Optimized exponents {a.tolist()} with infimum {val:.10f}")
    return report


# ----------------------------------------------------------------------------
# frozen families
# ----------------------------------------------------------------------------
def load_families(path: Path | str | None = None) -> list[dict]:
    """
    Read the frozen families. Without a path, or if the path does not exist,
    the copy shipped in `faltings_height/resources` is used.
    """
    if path is not None and Path(path).exists():
        content = ujson.loads(Path(path).read_text())
    else:
        name = "frozen_families.json" if path is None else Path(path).name
        res = resources.files("faltings_height.resources").joinpath(name)
        if not res.is_file():
            raise DomainError(f"No family file at {path=} or in the package resources")
        content = ujson.loads(res.read_text())
    return content["families"]


def replay_families(
    path: Path | str | None = None, **infimum_kwargs
) -> list[tuple[dict, LowerBoundReport]]:
    """
    Evaluate `global_infimum` at the published exponents of every frozen
    family. The exponents "critical" stand for dx g_hyp(1) / 12 on the
    single polynomial z, which makes zeta = 1 a critical point.
    """
    out = []
    for fam in load_families(path):
        exponents = fam["exponents"]
        if exponents == "critical":
            order = infimum_kwargs.get("order", DEFAULT_ORDER)
            exponents = [cached_dx_g_hyp_at_1(order) / 12]
        family = SectionFamily.from_lists(fam["polys"], exponents)

        report = global_infimum(family, **infimum_kwargs)
        logger.info(
            f"Replayed {fam['name']}: {report.infimum:.10f}"
            f" (published {fam.get('expected')})"
        )
        out.append((fam, report))
    return out
