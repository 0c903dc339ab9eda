from math import pi, sqrt

import numpy as np
import pytest

from rieszgas.errors import DegenerateSeriesError, InsufficientESSError, ViolationError
from rieszgas.estimators import (
    bl_solve,
    bl_solve_dense,
    brascamp_lieb_check,
    clt_test,
    count_prediction,
    fit_power_law,
    loop_statistics,
    mean_with_error,
    rigidity_tails,
    sub_poisson_check,
    total_ess,
    variance_with_error,
    wasserstein_to_gaussian,
)
from rieszgas.gibbs import Configuration, hessian
from rieszgas.sampler import SamplerConfig, run_chains
from rieszgas.transforms import TestFunction


def _ar1(rng, n, rho, sigma=1.0):
    e = rng.standard_normal(n) * sigma * sqrt(1 - rho ** 2)
    x = np.empty(n)
    x[0] = rng.standard_normal() * sigma
    for t in range(1, n):
        x[t] = rho * x[t - 1] + e[t]
    return x


# -- basic estimates ------------------------------------------------------------


def test_iid_mean_and_variance():
    rng = np.random.default_rng(0)
    chains = [rng.normal(1.0, 2.0, 10000) for _ in range(3)]
    m, se = mean_with_error(chains)
    assert abs(m - 1.0) <= 4 * se
    assert se == pytest.approx(2.0 / sqrt(30000), rel=0.3)
    v, vse = variance_with_error(chains)
    assert abs(v - 4.0) <= 4 * vse
    v0, _ = variance_with_error(chains, mean=1.0)
    assert v0 == pytest.approx(v, rel=0.01)
    assert total_ess(chains) == pytest.approx(30000, rel=0.2)


def test_batch_means_error_covers_correlated_mean():
    rng = np.random.default_rng(1)
    z = []
    for _ in range(40):
        m, se = mean_with_error(_ar1(rng, 20000, 0.9))
        z.append(m / se)
    z = np.array(z)
    assert np.mean(np.abs(z) <= 2) >= 0.8
    assert 0.6 <= np.std(z) <= 1.6


def test_frozen_chain():
    assert mean_with_error(np.full(500, 3.0)) == (3.0, 0.0)
    with pytest.raises(DegenerateSeriesError):
        variance_with_error(np.full(500, 3.0))


def test_ess_gate():
    rng = np.random.default_rng(2)
    with pytest.raises(InsufficientESSError):
        mean_with_error(_ar1(rng, 2000, 0.999), min_ess=200)


def test_fit_power_law_exact_and_noisy():
    x = np.array([4.0, 8.0, 16.0, 32.0])
    fit = fit_power_law(x, 3.0 * x ** 0.5)
    assert fit.exponent == pytest.approx(0.5, abs=1e-12)
    assert np.exp(fit.intercept) == pytest.approx(3.0)
    rng = np.random.default_rng(3)
    y = 2.0 * x ** 0.3 * (1 + 0.02 * rng.standard_normal(4))
    fit = fit_power_law(x, y, 0.02 * y)
    assert fit.ci[0] <= 0.3 <= fit.ci[1]
    assert np.isnan(fit_power_law([1.0], [1.0]).exponent)


# -- CLT ---------------------------------------------------------------------------


def test_w1_oracles():
    assert wasserstein_to_gaussian(np.zeros(1000), 2.0) == pytest.approx(2.0 * sqrt(2 / pi), rel=1e-12)
    rng = np.random.default_rng(4)
    assert wasserstein_to_gaussian(rng.normal(0, 1.5, 20000), 1.5) < 0.03
    shifted = rng.normal(0.5, 1.0, 20000)
    assert wasserstein_to_gaussian(shifted, 1.0) == pytest.approx(0.5, abs=0.03)


def test_clt_synthetic():
    rng = np.random.default_rng(5)
    good = clt_test([_ar1(rng, 20000, 0.5, 0.7) for _ in range(2)], 0.49)
    assert good.ks_pvalue > 0.001
    assert good.variance_ratio == pytest.approx(1.0, abs=0.1)
    bad = clt_test(rng.uniform(-1.2, 1.2, 5000), 0.48)
    assert bad.ks_pvalue < 1e-6
    assert bad.excess_kurtosis == pytest.approx(-1.2, abs=0.2)
    with pytest.raises(InsufficientESSError):
        clt_test(_ar1(rng, 2000, 0.99), 1.0)


def test_count_prediction_values(kernel_cache):
    model = kernel_cache(0.5, 2.0, 256)
    exact = count_prediction(model, 0.125, exact=True)
    assert exact.sigma2 == pytest.approx(0.0730246, rel=1e-5)
    assert exact.normalizer == pytest.approx(16.0)
    asym = count_prediction(model, 0.125)
    assert asym.sigma2 == pytest.approx(2 / pi, rel=1e-12)


# -- inequalities ---------------------------------------------------------------------


def test_cg_matches_dense(kernel_cache):
    model = kernel_cache(0.5, 2.0, 8)
    rng = np.random.default_rng(6)
    for _ in range(10):
        H = 2.0 * hessian(Configuration.jittered(8, rng, 0.4), model)
        b = rng.standard_normal(8)
        b -= b.mean()
        y1, y2 = bl_solve(H, b), bl_solve_dense(H, b)
        assert np.max(np.abs(y1 - y2)) <= 1e-8 * np.max(np.abs(y2))
        assert abs(y1.sum()) <= 1e-10 * np.abs(y1).max()
        assert np.allclose(H @ y1, b, atol=1e-7 * np.abs(b).max())


def test_sub_poisson_check():
    xi = TestFunction.indicator(0.1)
    bound = 100 * 0.2 * 0.8
    var, b, margin = sub_poisson_check(np.zeros(300), xi, 100)
    assert (var, margin) == (0.0, pytest.approx(bound, rel=1e-3))
    assert b == pytest.approx(bound, rel=1e-3)
    rng = np.random.default_rng(7)
    with pytest.raises(ViolationError):
        sub_poisson_check(rng.normal(0, 10, 5000), xi, 100)
    _, _, m = sub_poisson_check(rng.normal(0, 10, 5000), xi, 100, raise_on_violation=False)
    assert m < 0


def test_brascamp_lieb_on_short_run(kernel_cache):
    model = kernel_cache(0.5, 2.0, 16)
    run = run_chains(model, SamplerConfig(sweeps=12000, burn_in=1000, thin=10, seed=2), ["gap:2"],
                     chains=2, snapshot_every=20)
    snaps = np.concatenate(run.snapshots)
    var, bound, margin = brascamp_lieb_check(snaps, run.series["gap:2"], model, 2)
    assert 0 < var <= bound + margin
    assert margin > 0


def test_rigidity_tails_monotone(rng):
    snaps = [Configuration.jittered(64, rng, 0.45).positions for _ in range(20)]
    rows, nn = rigidity_tails(snaps, 8, 0.5, [0.0, 0.1, 0.2], [0.2, 0.5, 1.0])
    fr = [r[1] for r in rows]
    assert fr[0] >= fr[1] >= fr[2]
    assert [r[1] for r in nn] == sorted(r[1] for r in nn)
    for _, p, (lo, hi) in rows + nn:
        assert lo <= p <= hi


def test_loop_statistics():
    rng = np.random.default_rng(8)
    series = {64: [np.zeros(500)], 128: [rng.normal(0, 1, 4000)], 256: [rng.normal(0, 2, 4000)]}
    rows, fit = loop_statistics(series)
    assert rows[0].var == 0.0 and rows[0].mean == 0.0
    assert fit is None
    rows, fit = loop_statistics({64: [rng.normal(0, 1, 4000)], 256: [rng.normal(0, 2, 4000)]})
    assert fit.exponent == pytest.approx(1.0, abs=0.15)
