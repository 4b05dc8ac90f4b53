"""
Search for algebraic numbers of small Faltings height.

Two sources of candidates: roots of unity, and all integer polynomials in a
box of degrees and coefficient sizes. The box is pruned with the integrality
bounds of `heights.height` before any root is computed, and the roots of
each chunk are screened with the cheap lower bound

    12 h(alpha) >= mean_i max(g_hyp(0), g_hyp(1) + dx log|alpha_i|)

before the full height is evaluated.
"""

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np
import ujson

from faltings_height.bounds.sections import replay_families
from faltings_height.general.config import default_config
from faltings_height.general.errors import DomainError, NonConvergence
from faltings_height.general.workers import default_workers, parallel_map
from faltings_height.heights.height import (
    HeightResult,
    faltings_height,
    height_at_one,
    integrality_constraints,
    root_of_unity_bracket,
    root_of_unity_height,
)
from faltings_height.heights.polynomials import (
    IntegerPolynomial,
    InvalidPolynomial,
    aberth_batch,
    cyclotomic,
    find_roots,
    is_irreducible,
    polish_roots,
)
from faltings_height.logging.logger import get_logger
from faltings_height.modular.core import DEFAULT_ORDER
from faltings_height.modular.inversion import cached_dx_g_hyp_at_1, g_hyp_many

logger = get_logger(__name__)

_scan_cfg = default_config["scan"]

SCREEN_MARGIN = 1e-8
ROOT_SET_GRANULARITY = 1e-9
MAX_SCAN_DEGREE = 12


class SearchSpaceOverflow(DomainError):
    """The coefficient box holds more candidates than allowed"""

    pass


@dataclass(frozen=True)
class SpectrumEntry:
    poly: IntegerPolynomial
    height: HeightResult
    label: str

    @property
    def is_unit(self) -> bool:
        return abs(self.poly.leading) == 1 and abs(self.poly.constant) == 1

    def to_row(self) -> dict:
        return {
            "label": self.label,
            "coefficients": str(self.poly),
            "degree": self.poly.degree,
            "height": self.height.total,
            "error_estimate": self.height.error_estimate,
        }


def _sort_entries(entries: list[SpectrumEntry]) -> list[SpectrumEntry]:
    return sorted(entries, key=lambda e: (e.height.total, e.poly.degree, e.label))


def root_set_key(roots) -> tuple:
    """Hashable sorted root multiset at a fixed granularity"""
    g = ROOT_SET_GRANULARITY
    return tuple(sorted((round(r.real / g), round(r.imag / g)) for r in roots))


def dedupe(entries: list[SpectrumEntry]) -> list[SpectrumEntry]:
    """One entry per root set, in first seen position, a `cyclotomic:n` label wins"""
    position = {}
    out = []
    for e in entries:
        key = root_set_key(find_roots(e.poly).roots)
        if key not in position:
            position[key] = len(out)
            out.append(e)
            continue
        kept = out[position[key]]
        if e.label.startswith("cyclotomic:") and not kept.label.startswith("cyclotomic:"):
            out[position[key]] = e
    return out


# ----------------------------------------------------------------------------
# roots of unity
# ----------------------------------------------------------------------------
def scan_cyclotomics(
    max_order: int = _scan_cfg["max_order"],
    order: int = DEFAULT_ORDER,
    workers: int | None = None,
) -> list[SpectrumEntry]:
    """
    Heights of the primitive n-th roots of unity for n <= max_order, sorted
    ascending. Every height is checked against its closed form bracket.

    Raises
    ------
    NonConvergence
        if a computed height leaves its bracket by more than its error
        estimate
    """
    if max_order < 1:
        raise DomainError(f"scan_cyclotomics needs max_order >= 1, got {max_order=}")

    def one(n: int) -> SpectrumEntry:
        res = root_of_unity_height(n, order)
        low, high = root_of_unity_bracket(n)
        slack = res.error_estimate + 1e-10
        if not (low - slack <= res.total <= high + slack):
            raise NonConvergence(
                f"h_F(zeta_{n}) = {res.total} outside its bracket [{low}, {high}]",
                best_residual=min(abs(res.total - low), abs(res.total - high)),
            )
        return SpectrumEntry(cyclotomic(n), res, f"cyclotomic:{n}")

    entries = parallel_map(one, range(1, max_order + 1), workers=workers)
    return _sort_entries(entries)


# ----------------------------------------------------------------------------
# polynomial box
# ----------------------------------------------------------------------------
@dataclass
class _Box:
    degree: int
    leads: list[int]
    consts: list[int]
    max_coeff: int

    @property
    def size(self) -> int:
        return len(self.leads) * len(self.consts) * (2 * self.max_coeff + 1) ** (self.degree - 1)

    def candidates(self) -> Iterator[tuple[int, ...]]:
        """Coefficient tuples, constant term first, in lexicographic order from the top"""
        mids = [range(-self.max_coeff, self.max_coeff + 1)] * (self.degree - 1)
        for top in itertools.product(self.leads, *mids, self.consts):
            yield tuple(reversed(top))


def coefficient_boxes(max_degree: int, max_coeff: int, threshold: float) -> list[_Box]:
    """
    Boxes per degree after the integrality pruning. Leading coefficients are
    positive, constant coefficients nonzero; multiples of z are reducible
    apart from z itself, which is handled separately.
    """
    lead_bound, const_bound = integrality_constraints(threshold)
    boxes = []
    for d in range(1, max_degree + 1):
        if lead_bound < 0 or const_bound < 0:
            break
        a_max = min(max_coeff, math.floor(math.exp(d * lead_bound) + 1e-12))
        b_max = min(max_coeff, math.floor(math.exp(d * const_bound) + 1e-12))
        if a_max < 1 or b_max < 1:
            continue
        consts = [b for b in range(-b_max, b_max + 1) if b != 0]
        boxes.append(_Box(d, list(range(1, a_max + 1)), consts, max_coeff))
    return boxes


def _screen_chunk(
    coefs: np.ndarray, threshold: float, order: int
) -> list[tuple[int, ...]]:
    """Coefficient rows whose screened lower bound does not exclude them"""
    x = polish_roots(coefs, aberth_batch(coefs))
    leads = np.abs(coefs[:, -1])
    finite = np.log(leads) / (coefs.shape[1] - 1)

    g0 = float(g_hyp_many(np.array([0j]), order)[0])
    g1 = 12 * height_at_one(order)
    dx = cached_dx_g_hyp_at_1(order)
    with np.errstate(divide="ignore"):
        per_root = np.maximum(g0, g1 + dx * np.log(np.abs(x)))
    lower = (per_root.mean(axis=1) + finite) / 12
    keep = ~(lower > threshold + SCREEN_MARGIN)
    return [tuple(int(c) for c in row) for row in coefs[keep]]


def _exact_entry(coefs: tuple[int, ...], threshold: float, order: int) -> SpectrumEntry | None:
    try:
        poly = IntegerPolynomial(coefs)
    except InvalidPolynomial:
        return None
    if not is_irreducible(poly):
        return None
    try:
        res = faltings_height(poly, order)
    except NonConvergence as err:
        logger.warning(f"Skipping {poly} after root finding failed: {err}")
        return None
    if res.total <= threshold:
        return SpectrumEntry(poly, res, str(poly))
    return None


def _read_checkpoint(path: Path | None, params: dict) -> tuple[int, list]:
    if path is None or not Path(path).exists():
        return 0, []
    content = ujson.loads(Path(path).read_text())
    if content.get("params") != params:
        logger.warning(f"Ignoring checkpoint {path} written for other parameters")
        return 0, []
    logger.info(f"Resuming scan after {content['processed']} candidates")
    return content["processed"], content["survivors"]


def _write_checkpoint(path: Path | None, params: dict, processed: int, survivors: list):
    if path is None:
        return
    Path(path).write_text(
        ujson.dumps(
            {"params": params, "processed": processed, "survivors": survivors},
            sort_keys=True,
        )
    )


def scan_polynomials(
    max_degree: int = _scan_cfg["max_degree"],
    max_coeff: int = _scan_cfg["max_coeff"],
    threshold: float = _scan_cfg["threshold"],
    chunk_size: int = _scan_cfg["chunk_size"],
    checkpoint_every: int = _scan_cfg["checkpoint_every"],
    max_candidates: int = _scan_cfg["max_candidates"],
    checkpoint: Path | str | None = None,
    order: int = DEFAULT_ORDER,
    workers: int | None = None,
) -> list[SpectrumEntry]:
    """
    All irreducible integer polynomials in the box whose roots have Faltings
    height at most `threshold`.

    Parameters
    ----------
    max_degree : int
        largest degree, at most 12
    max_coeff : int
        bound on the absolute value of every coefficient
    threshold : float
        height threshold
    chunk_size : int
        candidates per work chunk
    checkpoint_every : int
        write the checkpoint after at least this many new candidates
    max_candidates : int
        overflow guard on the pruned box size
    checkpoint : Path | str | None
        json file to resume from and to write progress to
    order : int
        number of q-terms
    workers : int | None
        threads for the chunk screening

    Returns
    -------
    list[SpectrumEntry]
        deduplicated by root set, sorted by height. The class of j = 0, the
        polynomial z, is included when h_F(0) <= threshold.

    Raises
    ------
    SearchSpaceOverflow
        if the pruned box exceeds `max_candidates`
    """
    if not (1 <= max_degree <= MAX_SCAN_DEGREE):
        raise DomainError(f"max_degree must be in [1, {MAX_SCAN_DEGREE}], got {max_degree=}")
    if max_coeff < 1:
        raise DomainError(f"max_coeff must be >= 1, got {max_coeff=}")

    boxes = coefficient_boxes(max_degree, max_coeff, threshold)
    total = sum(b.size for b in boxes)
    if total > max_candidates:
        raise SearchSpaceOverflow(
            f"Pruned box holds {total} candidates, more than {max_candidates=}"
        )
    logger.info(f"Scanning {total} candidates up to degree {max_degree}")

    params = {
        "max_degree": max_degree,
        "max_coeff": max_coeff,
        "threshold": threshold,
        "chunk_size": chunk_size,
        "order": order,
    }
    skip, survivors = _read_checkpoint(checkpoint, params)

    def chunks() -> Iterator[np.ndarray]:
        for box in boxes:
            it = box.candidates()
            while True:
                rows = list(itertools.islice(it, chunk_size))
                if not rows:
                    break
                yield np.array(rows, dtype=float)

    def screen(c: np.ndarray) -> list:
        return _screen_chunk(c, threshold, order)

    stream = chunks()
    processed = 0
    while processed < skip:
        c = next(stream, None)
        if c is None:
            break
        processed += len(c)

    last_checkpoint = processed
    group_size = workers or default_workers()
    while True:
        group = list(itertools.islice(stream, group_size))
        if not group:
            break
        sizes = [len(c) for c in group]
        for kept in parallel_map(screen, group, workers=workers):
            survivors.extend(list(k) for k in kept)
        processed += sum(sizes)
        if processed - last_checkpoint >= checkpoint_every:
            _write_checkpoint(checkpoint, params, processed, survivors)
            last_checkpoint = processed
            logger.info(f"Scan progress {processed}/{total}, {len(survivors)} survivors")
    _write_checkpoint(checkpoint, params, processed, survivors)

    logger.info(f"{len(survivors)} candidates passed the screening")
    entries = [e for c in survivors if (e := _exact_entry(tuple(c), threshold, order))]

    zero = faltings_height(IntegerPolynomial((0, 1)), order)
    if zero.total <= threshold:
        entries.append(SpectrumEntry(IntegerPolynomial((0, 1)), zero, "j=0"))

    return dedupe(_sort_entries(entries))


# ----------------------------------------------------------------------------
# report
# ----------------------------------------------------------------------------
@dataclass
class SpectrumReport:
    upper_bound: float
    lower_bound: float
    isolated: list[SpectrumEntry] = field(default_factory=list)
    pending: list[SpectrumEntry] = field(default_factory=list)

    @property
    def density_interval_start(self) -> float:
        return self.upper_bound

    def to_dict(self) -> dict:
        return {
            "upper_bound": self.upper_bound,
            "lower_bound": self.lower_bound,
            "density_interval_start": self.density_interval_start,
            "isolated": [e.to_row() for e in self.isolated],
            "pending": [e.to_row() for e in self.pending],
        }


def spectrum_report(
    upper_bound: float,
    lower_bound: float | None = None,
    entries: list[SpectrumEntry] | None = None,
    families: Path | str | None = None,
    **scan_kwargs,
) -> SpectrumReport:
    """
    Isolated heights strictly below min(lower_bound, upper_bound) and the
    pending ones between the lower and the upper bound.

    Without `entries` the cyclotomic and the polynomial scans are run, the
    latter with its threshold raised to `upper_bound`. Without
    `lower_bound` the frozen section families are replayed and the best of
    their infima is used.
    """
    if lower_bound is None:
        lower_bound = max(rep.infimum for _, rep in replay_families(families))

    if entries is None:
        scan_kwargs.setdefault("threshold", upper_bound)
        entries = scan_cyclotomics() + scan_polynomials(**scan_kwargs)
    entries = _sort_entries(dedupe(entries))

    cut = min(lower_bound, upper_bound)
    isolated = [e for e in entries if e.height.total < cut]
    pending = [e for e in entries if cut <= e.height.total < upper_bound]

    for e in isolated + pending:
        if not e.is_unit and e.poly.coefficients != (0, 1):
            logger.warning(f"Entry {e.label} below the upper bound is not a unit")

    report = SpectrumReport(upper_bound, lower_bound, isolated, pending)
    logger.info(
        f"{len(isolated)} isolated values below {cut:.10f}, {len(pending)} pending"
    )
    return report
