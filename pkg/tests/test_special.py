from math import gamma, pi, sin, sqrt, tan

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rieszgas.errors import DomainError, SingularityError
from rieszgas.special import (
    ModelParams,
    build_kernel_table,
    hurwitz_zeta,
    kernel_g,
    kernel_g_deriv,
    kernel_g_deriv_direct,
    kernel_g_direct,
    riesz_constants,
)

mpmath.mp.dps = 30


def mp_zeta(w, a):
    return float(mpmath.zeta(mpmath.mpf(w), mpmath.mpf(a)))


# -- Hurwitz zeta -------------------------------------------------------------


@pytest.mark.parametrize("w", [-0.9, -0.5, -0.3, 0.0, 0.3, 0.5, 0.99, 1.01, 1.5, 2.0, 3.7])
@pytest.mark.parametrize("a", [1e-3, 0.05, 0.5, 1.0, 2.5, 10.0])
def test_hurwitz_matches_mpmath(w, a):
    ref = mp_zeta(w, a)
    assert hurwitz_zeta(w, a) == pytest.approx(ref, rel=1e-10, abs=1e-14)


def test_riemann_zeta_special_values():
    assert hurwitz_zeta(2.0, 1.0) == pytest.approx(pi ** 2 / 6, rel=1e-13)
    assert hurwitz_zeta(0.0, 0.3) == pytest.approx(0.5 - 0.3, abs=1e-13)
    assert hurwitz_zeta(-0.5, 1.0) == pytest.approx(float(mpmath.zeta(-0.5)), rel=1e-12)


@given(st.floats(-0.9, 3.5).filter(lambda w: abs(w - 1.0) > 1e-2), st.floats(0.01, 5.0))
def test_hurwitz_recurrence(w, a):
    lhs = hurwitz_zeta(w, a) - hurwitz_zeta(w, a + 1.0)
    assert lhs == pytest.approx(a ** -w, rel=1e-10, abs=1e-12)


def test_hurwitz_broadcasts():
    out = hurwitz_zeta(np.array([0.5, 2.0])[:, None], np.array([0.2, 0.7, 1.3]))
    assert out.shape == (2, 3)
    assert out[1, 2] == pytest.approx(mp_zeta(2.0, 1.3), rel=1e-12)


@pytest.mark.parametrize("w,a", [(1.0, 0.5), (-1.0, 0.5), (-2.0, 0.5), (0.5, 0.0), (0.5, -1.0),
                                 (float("nan"), 0.5)])
def test_hurwitz_domain(w, a):
    with pytest.raises(DomainError):
        hurwitz_zeta(w, a)


@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_zeta_small_argument_limit(s):
    # zeta(-s, a) = zeta(-s) + a^s + s zeta(1-s) a + O(a^2): the a^s growth sits on top of zeta(-s).
    zeta_1ms = hurwitz_zeta(1.0 - s, 1.0)
    for a in (1e-3, 1e-4, 1e-6):
        ratio = (hurwitz_zeta(-s, a) - hurwitz_zeta(-s, 1.0)) / a ** s
        assert ratio - 1.0 == pytest.approx(s * zeta_1ms * a ** (1.0 - s), rel=0.05)


@pytest.mark.xfail(strict=True, reason="zeta(-s, a) tends to zeta(-s), not to a^s, as a -> 0")
def test_zeta_over_power_literal_limit():
    s = 0.5
    assert hurwitz_zeta(-s, 1e-6) / 1e-6 ** s == pytest.approx(1.0, rel=0.05)


# -- constants ----------------------------------------------------------------


@pytest.mark.parametrize("s", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_riesz_constants(s):
    c_s, c_sp = riesz_constants(s)
    assert c_s == pytest.approx(2.0 * gamma(1.0 - s) * sin(pi * s / 2.0), rel=1e-13)
    assert c_sp / c_s == pytest.approx((1.0 - s) / (2.0 * pi * tan(pi * s / 2.0)), rel=1e-13)


def test_riesz_constant_half():
    c_s, c_sp = riesz_constants(0.5)
    assert c_s == pytest.approx(sqrt(2.0 * pi), rel=1e-14)
    assert c_sp / c_s == pytest.approx(1.0 / (4.0 * pi), rel=1e-14)


@pytest.mark.parametrize("s,k", [(0.5, 1), (0.5, 3), (0.3, 2)])
def test_kernel_fourier_coefficient(s, k):
    # int_0^1 g(x) cos(2 pi k x) dx = c_s / (2 pi k)^(1-s)
    c_s, _ = riesz_constants(s)
    val = 2.0 * mpmath.quad(lambda x: mpmath.zeta(s, x) * mpmath.cos(2 * mpmath.pi * k * x),
                            np.linspace(0.0, 1.0, 2 * k + 1).tolist())
    assert float(val) == pytest.approx(c_s / (2.0 * pi * k) ** (1.0 - s), rel=1e-9)


def test_model_params_validation():
    with pytest.raises(DomainError):
        ModelParams(1.5, 1.0, 4)
    with pytest.raises(DomainError):
        ModelParams(0.5, 0.0, 4)
    with pytest.raises(DomainError):
        ModelParams(0.5, 1.0, 1)
    assert ModelParams(0.5, 1.0, 4.0).n == 4


# -- kernel -------------------------------------------------------------------


def test_kernel_value_half():
    assert kernel_g_direct(0.5, 0.5) == pytest.approx(-1.2097972868, abs=1e-9)
    # g(1/2) = 2 zeta(s, 1/2) = 2 (2^s - 1) zeta(s)
    assert kernel_g_direct(0.5, 0.5) == pytest.approx(2.0 * (sqrt(2.0) - 1.0) * mp_zeta(0.5, 1.0), rel=1e-12)


@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_kernel_table_matches_direct(kernel_cache, s):
    model = kernel_cache(s)
    x = np.linspace(1e-3, 1 - 1e-3, 1001)
    for p, got in ((0, model.g(x)), (1, model.g1(x)), (2, model.g2(x))):
        want = kernel_g_direct(x, s) if p == 0 else kernel_g_deriv_direct(x, p, s)
        assert np.max(np.abs(got - want) / np.maximum(np.abs(want), 1.0)) < 1e-10


def test_kernel_symmetry_and_periodicity(model_half):
    x = np.linspace(0.01, 0.99, 50)
    assert np.allclose(kernel_g(x, model_half), kernel_g(1.0 - x, model_half), rtol=1e-13)
    assert np.allclose(kernel_g(x + 3.0, model_half), kernel_g(x, model_half), rtol=1e-12)
    assert kernel_g_deriv(0.5, 1, model_half) == pytest.approx(0.0, abs=1e-12)
    assert np.all(kernel_g_deriv(x, 2, model_half) > 0)


@given(st.floats(0.02, 0.98))
def test_kernel_derivative_finite_difference(x):
    s, h = 0.5, 1e-5
    fd = (kernel_g_direct(x + h, s) - kernel_g_direct(x - h, s)) / (2 * h)
    assert kernel_g_deriv_direct(x, 1, s) == pytest.approx(fd, rel=1e-6, abs=1e-6)


def test_kernel_singularity(model_half):
    with pytest.raises(SingularityError):
        kernel_g(0.0, model_half)
    with pytest.raises(SingularityError):
        kernel_g_direct(2.0, 0.5)


def test_table_errors_and_sharing():
    params = ModelParams(0.5, 1.0, 8)
    with pytest.raises(DomainError):
        build_kernel_table(params, resolution=512)
    model = build_kernel_table(params, resolution=1024)
    other = model.with_params(ModelParams(0.5, 3.0, 32))
    assert other.table is model.table and other.params.n == 32
    with pytest.raises(DomainError):
        model.with_params(ModelParams(0.3, 1.0, 8))
    with pytest.raises(ValueError):
        model.table[0, 0] = 1.0
    with pytest.raises(DomainError):
        kernel_g_deriv(0.3, 3, model)
