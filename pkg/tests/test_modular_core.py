import math

import mpmath
import numpy as np
import pytest

from faltings_height.general.constants import H_F_ZERO, RHO
from faltings_height.general.errors import DomainError
from faltings_height.modular.core import (
    TauPoint,
    UnimodularMatrix,
    cusp_approximation,
    delta,
    dg_infinity,
    eisenstein,
    g_infinity,
    g_infinity_array,
    j_cusp_bound,
    j_derivative,
    j_invariant,
    j_q_expansion_coefficients,
    reduce_array,
    reduce_to_fundamental_domain,
)


@pytest.fixture
def taus(rng):
    x = rng.uniform(-2, 2, 50)
    y = rng.uniform(0.05, 2, 50)
    return x + 1j * y


def test_tau_point_rejects_lower_half_plane():
    with pytest.raises(DomainError):
        TauPoint(0.3, 0.0)
    with pytest.raises(DomainError):
        TauPoint(0.3, -1.0)


def test_unimodular_matrix_determinant():
    with pytest.raises(DomainError):
        UnimodularMatrix(1, 1, 1, 1)
    m = UnimodularMatrix(2, 1, 1, 1)
    assert m @ m.inverse() == UnimodularMatrix(1, 0, 0, 1)


@pytest.mark.parametrize("tau", [0.3 + 0.1j, -1.7 + 0.02j, 0.49 + 0.9j, 5 + 3j])
def test_reduction_lands_in_fundamental_domain(tau):
    red, mat = reduce_to_fundamental_domain(tau)
    assert red.is_reduced
    assert abs(mat.apply(red.value) - tau) < 1e-10 * max(1, abs(tau))


def test_reduction_boundary_conventions():
    red, _ = reduce_to_fundamental_domain(-0.5 + 2j)
    assert red.re == pytest.approx(0.5)
    # the left arc is sent to the right arc
    left = complex(-0.3, math.sqrt(1 - 0.09))
    red, _ = reduce_to_fundamental_domain(left)
    assert red.re == pytest.approx(0.3)


def test_vectorized_reduction_matches_scalar(taus):
    z, c, d = reduce_array(taus)
    for tau, zi in zip(taus, z):
        red, _ = reduce_to_fundamental_domain(tau)
        assert abs(red.value - zi) < 1e-9


def test_j_modular_invariance(taus):
    for tau in taus[:10]:
        j0 = j_invariant(tau)
        scale = max(1.0, abs(j0))
        assert abs(j_invariant(tau + 1) - j0) <= 1e-9 * scale
        assert abs(j_invariant(-1 / tau) - j0) <= 1e-9 * scale


def test_j_special_values():
    assert j_invariant(1j) == pytest.approx(1728, rel=1e-12)
    assert abs(j_invariant(RHO)) < 1e-8


def test_j_q_expansion_coefficients():
    assert j_q_expansion_coefficients(3) == [1, 744, 196884, 21493760]


def test_j_derivative_against_finite_difference():
    tau = 0.1 + 1.2j
    h = 1e-5
    fd = (j_invariant(tau + h) - j_invariant(tau - h)) / (2 * h)
    assert abs(j_derivative(tau) - fd) < 1e-6 * abs(fd)


def test_eisenstein_values_at_i():
    assert eisenstein("E2", 1j).value == pytest.approx(3 / math.pi, abs=1e-12)
    assert abs(eisenstein("E2star", 1j).value) < 1e-12
    assert abs(eisenstein("E6", 1j).value) < 1e-12


def test_eisenstein_tail_bound_small_on_reduced_points():
    for kind in ("E2", "E4", "E6", "E2star"):
        res = eisenstein(kind, RHO)
        assert res.tail_bound <= 1e-14


def test_unknown_eisenstein_kind():
    with pytest.raises(DomainError):
        eisenstein("E8", 1j)


def test_delta_at_i_against_mpmath():
    mpmath.mp.dps = 30
    expected = float(mpmath.gamma(0.25) ** 24 / (2**24 * mpmath.pi**18))
    res = delta(1j)
    assert res.value.real == pytest.approx(expected, rel=1e-12)
    assert abs(res.value.imag) < 1e-12 * expected


@pytest.mark.parametrize("tau", [0.2 + 1.1j, -0.4 + 0.95j])
def test_ramanujan_identity_for_e4(tau):
    # d E4 / d tau = 2 pi i (E2 E4 - E6) / 3
    h = 1e-5
    e4 = eisenstein("E4", tau).value
    fd = (eisenstein("E4", tau + h).value - eisenstein("E4", tau - h).value) / (2 * h)
    rhs = 2j * math.pi * (eisenstein("E2", tau).value * e4 - eisenstein("E6", tau).value) / 3
    assert abs(fd - rhs) <= 1e-6 * abs(rhs)


def test_g_infinity_invariance_and_minimum(taus):
    vals = g_infinity_array(taus)
    assert np.allclose(vals, g_infinity_array(-1 / taus), atol=1e-9)
    assert np.allclose(vals, g_infinity_array(taus + 3), atol=1e-9)
    assert g_infinity(RHO) / 12 == pytest.approx(H_F_ZERO, abs=1e-12)
    assert (vals >= 12 * H_F_ZERO - 1e-12).all()


def test_g_infinity_increases_on_the_right_edge():
    t = np.linspace(math.sqrt(3) / 2, 10, 200)
    vals = g_infinity_array(0.5 + 1j * t)
    assert (np.diff(vals) > 0).all()


def test_dg_infinity_against_finite_differences():
    tau = 0.15 + 1.3j
    h = 1e-5
    dx = (g_infinity(tau + h) - g_infinity(tau - h)) / (2 * h)
    dy = (g_infinity(tau + 1j * h) - g_infinity(tau - 1j * h)) / (2 * h)
    dg = dg_infinity(tau)
    assert dg.real == pytest.approx(dx / 2, abs=1e-6)
    assert dg.imag == pytest.approx(-dy / 2, abs=1e-6)


def test_cusp_approximation_remainder():
    for tau in (0.1 + 1.0j, 0.5 + 1.5j, 4j):
        model, bound = cusp_approximation(tau)
        assert abs(g_infinity(tau) - model) <= bound
    with pytest.raises(DomainError):
        cusp_approximation(0.5 + 0.9j)


S = UnimodularMatrix(0, -1, 1, 0)
T = UnimodularMatrix(1, 1, 0, 1)


@pytest.fixture
def random_matrices(rng):
    generators = [S, T, T.inverse()]
    out = []
    while len(out) < 20:
        m = UnimodularMatrix(1, 0, 0, 1)
        for g in rng.integers(0, 3, 8):
            m = m @ generators[g]
        if max(abs(m.c), abs(m.d)) <= 30 and m.c != 0:
            out.append(m)
    return out


def test_invariance_under_random_matrices(random_matrices):
    tau = 0.13 + 1.17j
    j0 = j_invariant(tau)
    e4 = eisenstein("E4", tau).value
    g0 = g_infinity(tau)
    for m in random_matrices:
        moved = m.apply(tau)
        factor = m.automorphy(tau)
        assert abs(j_invariant(moved) - j0) <= 1e-9 * abs(j0), m
        assert abs(eisenstein("E4", moved).value - factor**4 * e4) <= 1e-9 * abs(factor**4 * e4)
        assert g_infinity(moved) == pytest.approx(g0, abs=1e-9)


@pytest.mark.parametrize("tau", [0.2 + 1.1j, -0.4 + 0.95j, 0.5 + 2j])
def test_ramanujan_identity_for_e2(tau):
    # d E2 / d tau = pi i (E2^2 - E4) / 6
    h = 1e-5
    fd = (eisenstein("E2", tau + h).value - eisenstein("E2", tau - h).value) / (2 * h)
    rhs = 1j * math.pi * (eisenstein("E2", tau).value ** 2 - eisenstein("E4", tau).value) / 6
    assert abs(fd - rhs) <= 1e-6 * abs(rhs)


@pytest.mark.parametrize("t", [0.3, 0.6, math.sqrt(3) / 2, 1.0, 2.0, 4.0])
def test_e2star_is_real_on_the_right_edge(t):
    value = eisenstein("E2star", complex(0.5, t)).value
    assert abs(value.imag) <= 1e-10 * max(1.0, abs(value))


@pytest.mark.parametrize("t", [math.sqrt(3) / 2, 1.0, 1.5, 3.0])
def test_g_infinity_is_smallest_on_the_right_edge(t):
    x = np.linspace(-0.5, 0.5, 101)
    vals = g_infinity_array(x + 1j * t)
    assert (vals >= g_infinity(complex(0.5, t)) - 1e-12).all()


def test_j_cusp_bound(taus):
    for tau in list(taus) + [1j, RHO, 0.5 + 3j, 0.2 + 6j]:
        red, _ = reduce_to_fundamental_domain(tau)
        if red.im >= 1:
            assert abs(j_invariant(tau)) <= j_cusp_bound(tau)
    assert j_cusp_bound(2j) == pytest.approx(4 * math.exp(4 * math.pi))


def test_reduction_of_known_points():
    red, mat = reduce_to_fundamental_domain(0.5j)
    assert red.value == pytest.approx(2j)
    assert mat in (S, UnimodularMatrix(0, 1, -1, 0))

    red, mat = reduce_to_fundamental_domain(RHO + 7)
    assert red.value == pytest.approx(RHO)
    assert mat == UnimodularMatrix(1, 7, 0, 1)
    assert mat.inverse() == UnimodularMatrix(1, -7, 0, 1)


def _reduced_images(tau: complex, depth: int) -> list[complex]:
    """Every word of length <= depth in S, T, T^-1 applied to tau, kept when reduced"""
    moves = [lambda z: -1 / z, lambda z: z + 1, lambda z: z - 1]
    frontier, found = [tau], []
    for _ in range(depth + 1):
        found += [z for z in frontier if abs(z.real) <= 0.5 + 1e-12 and abs(z) >= 1 - 1e-12]
        frontier = [m(z) for z in frontier for m in moves]
    return found


@pytest.mark.parametrize("tau", [0.3 + 0.1j, 2.4 + 0.5j, -1.3 + 0.7j, 0.1 + 0.6j])
def test_reduction_against_word_search(tau):
    red, _ = reduce_to_fundamental_domain(tau)
    images = _reduced_images(tau, 6)
    assert images
    assert min(abs(z - red.value) for z in images) < 1e-9
    assert all(abs(z.imag - red.im) < 1e-9 for z in images)
