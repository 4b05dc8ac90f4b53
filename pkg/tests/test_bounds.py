import math

import mpmath
import numpy as np
import pytest

from faltings_height.bounds.circles import (
    BoundInconsistency,
    analytic_upper_bound,
    circle_integral,
    circle_integral_hhat,
    half_circle_quadrature,
    needs_grading,
    optimize_center,
    sandwich_check,
    sweep_centers,
    zhang_bound,
)
from faltings_height.bounds.sections import (
    BudgetViolation,
    SectionFamily,
    cusp_cutoff,
    global_infimum,
    load_families,
    optimize_exponents,
    replay_families,
    section_green,
)
from faltings_height.distortion.certificates import constants
from faltings_height.general.constants import (
    H_F_ZERO,
    MU_LOWER,
    MU_UPPER,
    ZETA_MINUS_ONE,
    ZETA_PRIME_MINUS_ONE_STR,
)
from faltings_height.general.errors import DomainError
from faltings_height.heights.height import height_at_one
from faltings_height.modular.core import g_infinity
from faltings_height.modular.inversion import cached_dx_g_hyp_at_1, g_hyp

A2 = [0.0000808846, 0.000006017184]
ZERO_ONE = [[0, 1], [-1, 1]]


@pytest.fixture
def fast():
    return {"grid": 120, "refine_top_k": 4}


# ----------------------------------------------------------------------------
# section families
# ----------------------------------------------------------------------------
def test_family_validation():
    with pytest.raises(BudgetViolation):
        SectionFamily.from_lists([[0, 1]], [0.1])
    with pytest.raises(DomainError):
        SectionFamily.from_lists([[0, 1]], [-1e-6])
    with pytest.raises(DomainError):
        SectionFamily.from_lists([[0, 1]], [1e-5, 1e-5])
    fam = SectionFamily.from_lists(ZERO_ONE, A2)
    assert fam.delta_exponent == pytest.approx(1 / 12 - sum(A2))
    assert fam.with_exponents([0, 0]).delta_exponent == pytest.approx(1 / 12)


def test_section_green_values():
    fam = SectionFamily.from_lists(ZERO_ONE, A2)
    zeta = 0.3 + 0.4j
    expected = g_hyp(zeta) / 12 - A2[0] * math.log(abs(zeta)) - A2[1] * math.log(abs(zeta - 1))
    assert section_green(fam, zeta) == pytest.approx(expected, abs=1e-13)
    assert math.isinf(section_green(fam, 0.0))
    # a zero exponent does not exclude the roots of its polynomial
    zero_weight = SectionFamily.from_lists(ZERO_ONE, [A2[0], 0.0])
    assert section_green(zero_weight, 1.0) == pytest.approx(height_at_one(), abs=1e-13)


def test_cusp_cutoff_closes_the_cusp():
    fam = SectionFamily()
    incumbent = H_F_ZERO
    y0 = cusp_cutoff(fam, incumbent)
    assert y0 >= 1
    for x in (0.0, 0.25, 0.5):
        assert g_infinity(complex(x, y0)) / 12 >= incumbent + 0.01 - 1e-12


def test_cusp_cutoff_budget_too_small():
    fam = SectionFamily.from_lists([[0, 1]], [1 / 12 - 1e-9])
    with pytest.raises(BudgetViolation):
        cusp_cutoff(fam, -0.7)


def test_infimum_without_sections(fast):
    report = global_infimum(SectionFamily(), **fast)
    assert report.infimum == pytest.approx(H_F_ZERO, abs=1e-9)
    assert len(report.argmin) >= 1
    assert abs(report.argmin[0]) < 1e-3
    assert report.excluded_points == []


def test_infimum_at_critical_exponent(fast):
    fam = SectionFamily.from_lists([[0, 1]], [cached_dx_g_hyp_at_1() / 12])
    report = global_infimum(fam, **fast)
    assert report.infimum == pytest.approx(-0.74862817, abs=1e-6)
    assert report.excluded_points == [0j]


def test_optimize_single_exponent(fast):
    report = optimize_exponents([[0, 1]], [0.0], **fast)
    assert not report.stagnated
    assert report.optimizer_cycles >= 1
    assert report.infimum == pytest.approx(height_at_one(), abs=1e-8)
    assert report.family.exponents[0] == pytest.approx(cached_dx_g_hyp_at_1() / 12, rel=0.2)


def test_optimize_rejects_infeasible_start():
    with pytest.raises(BudgetViolation):
        optimize_exponents([[0, 1]], [0.5])


def test_frozen_families_resource():
    names = [fam["name"] for fam in load_families()]
    assert names == ["delta", "zero", "zero_one", "zero_one_sixth", "zero_one_sixth_tenth"]


def test_replay_published_families():
    results = replay_families()
    for fam, report in results:
        assert report.infimum == pytest.approx(fam["expected"], abs=1e-6), fam["name"]
    best = max(report.infimum for _, report in results)
    assert best == pytest.approx(MU_LOWER, abs=1e-6)


# ----------------------------------------------------------------------------
# circle integrals
# ----------------------------------------------------------------------------
def test_half_circle_quadrature_smooth_integrand():
    def func(t):
        return np.cos(2 * np.pi * t) ** 2

    value, nodes, deltas, (t, f) = half_circle_quadrature(func, nodes=16, tol=1e-13)
    assert value == pytest.approx(0.5, abs=1e-14)
    assert t.size == f.size
    graded, _, _, _ = half_circle_quadrature(func, nodes=16, tol=1e-12, graded=True)
    assert graded == pytest.approx(0.5, abs=1e-10)
    with pytest.raises(DomainError):
        half_circle_quadrature(func, nodes=15)


def test_grading_near_branch_points():
    assert needs_grading(1.0)
    assert needs_grading(1729.0)
    assert not needs_grading(0.205)


def test_circle_integral_at_best_center():
    report = circle_integral(0.205)
    assert report.value <= MU_UPPER + 1e-9
    assert report.value == pytest.approx(-0.748622751, abs=1e-8)
    assert report.node_doubling_delta < 1e-10
    assert not report.graded


def test_hhat_integral_agrees():
    direct = circle_integral(0.205)
    hhat = circle_integral_hhat(0.205)
    assert hhat.method == "hhat"
    assert hhat.value == pytest.approx(direct.value, abs=1e-9)
    with pytest.raises(DomainError):
        circle_integral_hhat(2.5)


def test_analytic_bound_majorizes_the_integral():
    direct = circle_integral(0.205)
    analytic = analytic_upper_bound(0.205)
    assert analytic.method == "analytic"
    assert analytic.value >= direct.value - 1e-9
    with pytest.raises(DomainError):
        analytic_upper_bound(-0.5)


def test_optimize_center():
    best = optimize_center(0.0, 1.0, center_tol=1e-3, nodes=1024, tol=1e-9)
    assert best.center == pytest.approx(0.205, abs=0.01)
    # monotone on the interval, the end point is returned
    edge = optimize_center(0.9, 1.1, center_tol=1e-3, nodes=1024, tol=1e-9)
    assert edge.center == pytest.approx(0.9, abs=1e-2)
    with pytest.raises(DomainError):
        optimize_center(1.0, 0.5)


def test_zhang_bound():
    assert zhang_bound() == pytest.approx(-1.2425268622, abs=1e-9)


def test_sandwich_check():
    assert sandwich_check(MU_LOWER, MU_UPPER) == pytest.approx(MU_UPPER - MU_LOWER)
    with pytest.raises(BoundInconsistency):
        sandwich_check(MU_UPPER, MU_LOWER)


def test_zeta_constants_against_mpmath():
    with mpmath.workdps(40):
        zp = mpmath.zeta(-1, derivative=1)
        assert abs(zp - mpmath.mpf(ZETA_PRIME_MINUS_ONE_STR)) < mpmath.mpf("1e-28")
        assert float(mpmath.zeta(-1)) == pytest.approx(ZETA_MINUS_ONE, abs=1e-15)
        expected = float(6 * (mpmath.zeta(-1) / 2 + zp))
    assert zhang_bound() == pytest.approx(expected, abs=1e-14)


# ----------------------------------------------------------------------------
# optimized families and the sandwich
# ----------------------------------------------------------------------------
@pytest.fixture(scope="module")
def optimized_families():
    kwargs = {"grid": 200, "refine_top_k": 8, "max_cycles": 2}
    out = []
    for fam in load_families():
        if fam["name"] not in ("zero_one", "zero_one_sixth_tenth"):
            continue
        report = optimize_exponents(fam["polys"], fam["exponents"], **kwargs)
        out.append((fam, report))
    return out


def test_optimizer_does_not_lose_the_published_values(optimized_families):
    assert [fam["name"] for fam, _ in optimized_families] == [
        "zero_one",
        "zero_one_sixth_tenth",
    ]
    for fam, report in optimized_families:
        assert report.infimum >= fam["expected"] - 1e-6, fam["name"]
        assert report.infimum <= MU_UPPER
        assert sandwich_check(report, MU_UPPER) >= 0


def test_lower_bounds_stay_below_the_circle_bound(optimized_families):
    upper = circle_integral(0.205)
    for _, report in optimized_families:
        assert sandwich_check(report, upper) == pytest.approx(upper.value - report.infimum)
        assert report.infimum <= upper.value


def test_argmin_reproduces_the_infimum():
    fam = SectionFamily.from_lists(ZERO_ONE, A2)
    report = global_infimum(fam, grid=200, refine_top_k=8)
    assert report.infimum == pytest.approx(-0.74862517, abs=1e-6)
    for zeta in report.argmin:
        assert section_green(fam, zeta) == pytest.approx(report.infimum, abs=1e-10)


@pytest.mark.parametrize("center", [0.5, 1.0, 1.5])
def test_hhat_integral_agrees_off_the_best_center(center):
    direct = circle_integral(center)
    hhat = circle_integral_hhat(center)
    assert hhat.value == pytest.approx(direct.value, abs=1e-9)


def test_node_doubling_converges_geometrically():
    report = circle_integral(0.5, nodes=32, tol=1e-12)
    deltas = [d for d in report.doubling_deltas if d > 1e-12]
    assert len(report.doubling_deltas) >= 3
    assert all(b < a for a, b in zip(deltas, deltas[1:]))
    assert report.node_doubling_delta <= 1e-12


def test_unit_circle_mean_is_the_affine_constant():
    report = circle_integral(0.0)
    assert report.value == pytest.approx(constants().gamma1 / 12, abs=5e-7 / 12 + 1e-10)


def test_sweep_centers():
    reports = sweep_centers([0.205, 0.5], nodes=1024, tol=1e-9)
    assert [r.center for r in reports] == [0.205, 0.5]
    assert reports[0].value < reports[1].value
