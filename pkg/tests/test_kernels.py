import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from zosmooth.kernels import (build_legendre_kernel, check_kernel, compute_constants, evaluate,
                              kernel_order, moment, moment_table)

BETAS = [2.0, 2.5, 3.0, 4.0, 5.0, 6.0]


@pytest.mark.parametrize("beta,ell", [(2, 1), (2.5, 2), (3, 2), (4, 3), (4.5, 4), (6, 5)])
def test_kernel_order(beta, ell):
    assert kernel_order(beta) == ell


@pytest.mark.parametrize("beta", [1.0, 0.5, -2.0])
def test_kernel_order_rejects_small_beta(beta):
    with pytest.raises(ValueError):
        build_legendre_kernel(beta)


@pytest.mark.parametrize("beta", BETAS)
def test_moment_conditions(beta):
    k = build_legendre_kernel(beta)
    assert abs(moment(k, 0)) <= 1e-10
    assert abs(moment(k, 1) - 1.0) <= 1e-10
    for j in range(2, k.ell + 1):
        assert abs(moment(k, j)) <= 1e-10
    assert check_kernel(k)


def test_beta2_kernel_is_3u():
    k = build_legendre_kernel(2)
    assert k.coeffs == pytest.approx((0.0, 3.0))
    assert k.kappa == pytest.approx(3.0)
    assert k.kappa_beta == pytest.approx(0.75)


def test_beta4_kernel():
    k = build_legendre_kernel(4)
    np.testing.assert_allclose(k.coeffs, [0.0, 75 / 4, 0.0, -105 / 4], atol=1e-12)
    assert k.kappa == pytest.approx(18.75)


def _oracle_constants(k, beta):
    # adaptive quadrature over the probability measure on [-1, 1]
    kappa = integrate.quad(lambda u: 0.5 * evaluate(k, u) ** 2, -1, 1, epsabs=1e-13, epsrel=1e-13)[0]
    roots = [x for x in np.roots(k.coeffs[::-1]).real if 0 < x < 1] if k.degree > 1 else []
    kb = integrate.quad(lambda u: abs(u) ** beta * abs(evaluate(k, u)), 0, 1,
                        points=roots or None, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return kappa, kb


@pytest.mark.parametrize("beta", BETAS)
def test_constants_match_independent_quadrature(beta):
    k = build_legendre_kernel(beta)
    kappa, kb = _oracle_constants(k, beta)
    assert k.kappa == pytest.approx(kappa, rel=1e-8)
    assert k.kappa_beta == pytest.approx(kb, rel=1e-8)
    assert compute_constants(k, nodes=4096) == pytest.approx((k.kappa, k.kappa_beta), rel=1e-8)


@pytest.mark.parametrize("beta", BETAS + [3.7, 7.0])
def test_kappa_beta_bound(beta):
    k = build_legendre_kernel(beta)
    assert k.kappa_beta <= 2 * math.sqrt(2) * beta


@settings(max_examples=50, deadline=None)
@given(beta=st.sampled_from(BETAS), u=st.floats(-1, 1))
def test_kernel_is_odd(beta, u):
    k = build_legendre_kernel(beta)
    assert evaluate(k, -u) == pytest.approx(-evaluate(k, u), abs=1e-12)


def test_kernel_odd_on_random_grid():
    u = np.random.default_rng(0).uniform(-1, 1, 1000)
    for beta in BETAS:
        k = build_legendre_kernel(beta)
        np.testing.assert_allclose(k(-u), -k(u), atol=1e-12)


def test_moment_table_targets():
    k = build_legendre_kernel(4)
    tab = moment_table(k)
    assert [row["j"] for row in tab] == list(range(k.ell + 2))
    for row in tab[: k.ell + 1]:
        assert abs(row["moment"] - row["target"]) <= 1e-10
