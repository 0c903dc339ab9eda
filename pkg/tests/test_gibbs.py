import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rieszgas.errors import DomainError, SingularityError
from rieszgas.gibbs import (
    Configuration,
    LoopOperator,
    block_average,
    count_in,
    energy,
    energy_delta,
    fluct,
    gap,
    gaps,
    gradient,
    hessian,
    loop_term_A,
    loop_term_B,
)
from rieszgas.transforms import TestFunction, riesz_inverse_spectral, smooth


def test_configuration_validation():
    with pytest.raises(DomainError):
        Configuration([0.5])
    with pytest.raises(DomainError):
        Configuration([0.1, 0.1, 0.3])
    with pytest.raises(DomainError):
        Configuration([0.1, 0.3, 0.2])
    # rotations of sorted arrays are valid cyclic orders
    assert Configuration([0.7, 0.9, 0.1, 0.3]).n == 4
    c = Configuration.lattice(8, 0.95)
    assert np.all((c.positions >= 0) & (c.positions < 1))
    assert np.allclose(c.spacings(), 1.0)


def test_two_point_energy(kernel_cache):
    model = kernel_cache(0.5, 1.0, 2)
    assert energy(Configuration([0.0, 0.5]), model) == pytest.approx(-1.7109, abs=1e-4)
    assert energy(Configuration([0.0, 0.5]), model) == pytest.approx(2 * 2 ** -0.5 * model.g(0.5), rel=1e-14)


@given(c=st.floats(0, 1))
def test_energy_translation_invariance(model_half, c):
    model = model_half
    conf = Configuration.jittered(16, np.random.default_rng(1), 0.3)
    assert energy(conf.shifted(c), model) == pytest.approx(energy(conf, model), rel=1e-12, abs=1e-12)


def test_lattice_is_critical(model_half):
    assert np.max(np.abs(gradient(Configuration.lattice(16, 0.3), model_half))) <= 1e-10


def test_energy_delta_matches_recomputation(model_half, rng):
    conf = Configuration.jittered(16, rng, 0.3)
    x = conf.positions
    for i in range(16):
        lo, hi = x[i - 1], x[(i + 1) % 16]
        new = lo + np.mod(hi - lo, 1.0) * rng.uniform(0.1, 0.9)
        moved = conf.moved(i, new)
        want = energy(moved, model_half) - energy(conf, model_half)
        assert energy_delta(conf, i, new, model_half) == pytest.approx(want, abs=1e-11)


def test_energy_delta_is_additive(model_half, rng):
    conf = Configuration.lattice(16)
    a, b = 0.5 / 16 + 0.01, 0.5 / 16 + 0.02
    step1 = energy_delta(conf, 0, a, model_half)
    step2 = energy_delta(conf.moved(0, a), 0, b, model_half)
    assert step1 + step2 == pytest.approx(energy_delta(conf, 0, b, model_half), abs=1e-12)


def test_collision_is_singular(model_half):
    conf = Configuration.lattice(16)
    with pytest.raises(SingularityError):
        energy_delta(conf, 0, 1 / 16, model_half)


def test_gradient_finite_difference(model_half, rng):
    conf = Configuration.jittered(16, rng, 0.3)
    grad = gradient(conf, model_half)
    h = 1e-6
    for i in (0, 5, 11):
        fd = (energy_delta(conf, i, conf.positions[i] + h, model_half)
              - energy_delta(conf, i, conf.positions[i] - h, model_half)) / (2 * h)
        assert grad[i] == pytest.approx(fd, rel=1e-6, abs=1e-8)
    assert abs(grad.sum()) < 1e-10


def test_hessian_structure(model_half, rng):
    conf = Configuration.jittered(16, rng, 0.3)
    H = hessian(conf, model_half)
    assert np.allclose(H, H.T, atol=1e-12)
    assert np.max(np.abs(H.sum(axis=1))) < 1e-9 * np.abs(H).max()
    off = H[~np.eye(16, dtype=bool)]
    assert np.all(off <= 0)
    assert np.linalg.eigvalsh(H).min() >= -1e-9 * np.abs(H).max()
    h = 1e-6
    x = conf.positions
    for i in (0, 7):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        fd = (gradient(Configuration(xp), model_half) - gradient(Configuration(xm), model_half)) / (2 * h)
        assert np.allclose(H[:, i], fd, rtol=1e-5, atol=1e-6 * np.abs(H).max())


def test_fluct_brute_force(rng):
    conf = Configuration.uniform(32, rng)
    xi = TestFunction.cosine(3)
    assert fluct(conf, xi) == pytest.approx(np.sum(np.cos(2 * np.pi * 3 * conf.positions)), abs=1e-12)
    ind = TestFunction.indicator(0.1)
    assert fluct(conf, ind) == pytest.approx(count_in(conf, 0.0, 0.1) - 32 * 0.2, abs=1e-12)


@given(st.floats(0, 1))
def test_lattice_indicator_fluctuation_bounded(offset):
    conf = Configuration.lattice(64, offset)
    for a in (0.05, 0.125, 0.3):
        assert abs(fluct(conf, TestFunction.indicator(a))) <= 1.0 + 1e-12


def test_gap_observables(rng):
    lat = Configuration.lattice(32, 0.9)
    for k in (0, 1, 5, 16):
        assert np.allclose(gaps(lat, k), k)
        assert gap(lat, 31, k) == pytest.approx(k)
    conf = Configuration.uniform(32, rng)
    assert gaps(conf, 1).sum() == pytest.approx(32)
    assert np.allclose(gaps(conf, 3), [gap(conf, i, 3) for i in range(32)])
    with pytest.raises(IndexError):
        gap(conf, 0, 17)


def test_block_average():
    conf = Configuration([0.95, 0.0, 0.05, 0.5])
    assert block_average(conf, 1, 0) == pytest.approx(0.0)
    assert min(block_average(conf, 1, 1), 1 - block_average(conf, 1, 1)) == pytest.approx(0.0, abs=1e-15)
    lat = Configuration.lattice(16)
    assert block_average(lat, 3, 4) == pytest.approx(3 / 16)


# -- loop terms ------------------------------------------------------------------------


@pytest.mark.parametrize("n", [4, 8, 16])
@pytest.mark.parametrize("kind", ["cosine", "indicator"])
def test_loop_term_two_paths_agree(kernel_cache, rng, n, kind):
    # The indicator is paired with its smoothed transport so both paths see
    # the same band-limited test function.
    model = kernel_cache(0.5, 2.0, n)
    if kind == "cosine":
        xi = TestFunction.cosine(1)
        psi = riesz_inverse_spectral(xi, s=0.5)
    else:
        xi = TestFunction.indicator(0.125)
        psi = smooth(riesz_inverse_spectral(xi, s=0.5), 1 / 64)
    op = LoopOperator(model, xi, psi)
    for _ in range(5):
        diag = op.evaluate(Configuration.jittered(n, rng, 0.4))
        assert diag.a_pair_sum == pytest.approx(diag.a_transport, rel=1e-8, abs=1e-8)


def test_loop_term_constant_function(model_half, rng):
    xi = TestFunction.from_grid(np.full(1024, 2.5))
    psi = riesz_inverse_spectral(xi, 1024, s=0.5)
    conf = Configuration.jittered(16, rng, 0.3)
    diag = loop_term_A(conf, xi, psi, model_half)
    assert diag.a_value == 0.0
    assert loop_term_B(conf, xi, psi, model_half) == 0.0


def test_loop_term_b_pair_part_nonnegative(model_half, rng):
    xi = TestFunction.cosine(2)
    psi = riesz_inverse_spectral(xi, s=0.5)
    op = LoopOperator(model_half, xi, psi)
    for _ in range(10):
        diag = op.evaluate(Configuration.uniform(16, rng), check=False)
        assert diag.b_pair >= 0.0
        assert diag.b_constant > 0.0


def test_loop_term_a_vanishes_on_lattice_for_cosine(kernel_cache):
    model = kernel_cache(0.5, 2.0, 16)
    xi = TestFunction.cosine(1)
    psi = riesz_inverse_spectral(xi, s=0.5)
    diag = loop_term_A(Configuration.lattice(16, 0.1), xi, psi, model)
    assert abs(diag.a_value) < 1e-9


def test_transport_and_kernel_exponent_must_match(model_half):
    psi = riesz_inverse_spectral(TestFunction.cosine(1), s=0.3)
    with pytest.raises(DomainError):
        LoopOperator(model_half, TestFunction.cosine(1), psi)
