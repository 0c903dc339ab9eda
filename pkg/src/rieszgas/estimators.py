"""Estimators turning chain output into variance, scaling and CLT checks.

Every estimate carries a batch-means standard error. Inputs are either a
plain array, a list of per-chain arrays or a list of
:class:`~rieszgas.sampler.ObservableSeries`; chains are never concatenated
before batching, so a batch never straddles two chains.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil, pi, tan

import numpy as np
from scipy import stats
from scipy.sparse.linalg import LinearOperator, cg

from .errors import (
    ConvergenceError,
    DegenerateSeriesError,
    DomainError,
    InsufficientESSError,
    ViolationError,
)
from .gibbs import hessian
from .sampler import ess
from .special import KernelModel, hurwitz_zeta
from .transforms import TestFunction, riesz_inverse_spectral, sigma_xi_squared

__all__ = [
    "Prediction",
    "CLTReport",
    "ProfileRow",
    "ScalingFit",
    "mean_with_error",
    "total_ess",
    "variance_with_error",
    "gap_variance_profile",
    "fit_power_law",
    "count_prediction",
    "number_variance",
    "clt_test",
    "wasserstein_to_gaussian",
    "sub_poisson_check",
    "bl_solve",
    "bl_solve_dense",
    "brascamp_lieb_check",
    "rigidity_tails",
    "loop_statistics",
    "LoopSummary",
]

MIN_ESS = 50
GATE_ESS = 200
CG_RTOL = 1e-8


@dataclass(frozen=True)
class Prediction:
    """Predicted variance ``sigma2``, growth exponent and normalizer of a statistic."""

    sigma2: float
    scale_power: float
    normalizer: float = 1.0

    def __post_init__(self):
        if not self.sigma2 >= 0.0:
            raise DomainError("predicted variance must be non-negative")


@dataclass(frozen=True)
class CLTReport:
    n_effective: int
    ks_stat: float
    ks_pvalue: float
    w1_to_gaussian: float
    skewness: float
    excess_kurtosis: float
    variance_ratio: float


@dataclass(frozen=True)
class ProfileRow:
    key: float
    value: float
    stderr: float
    ratio: float = float("nan")
    ratio_stderr: float = float("nan")


@dataclass(frozen=True)
class ScalingFit:
    """Weighted log-log fit ``log y = log c + exponent log x``."""

    exponent: float
    stderr: float
    ci: tuple[float, float]
    intercept: float


# ---------------------------------------------------------------------------
# Basic estimates
# ---------------------------------------------------------------------------


def _as_chains(series) -> list[np.ndarray]:
    if isinstance(series, np.ndarray) and series.ndim == 1:
        return [series.astype(float)]
    out = []
    for item in series:
        vals = getattr(item, "values", item)
        out.append(np.asarray(vals, dtype=float).ravel())
    if not out:
        raise InsufficientESSError("no records")
    if all(np.ndim(v) == 0 for v in out):
        return [np.array(out, dtype=float)]
    return out


def total_ess(series) -> float:
    """Sum of per-chain effective sample sizes."""
    return float(sum(ess(c)[0] for c in _as_chains(series)))


def _gate(chains, min_ess):
    if min_ess <= 0:
        return float("inf")
    total = float(sum(ess(c)[0] for c in chains))
    if total < min_ess:
        raise InsufficientESSError(f"effective sample size {total:.1f} below the gate {min_ess}")
    return total


def _batches(chains, fn):
    """Per-batch values of ``fn`` with ceil(sqrt(n)) batches per chain."""
    out = []
    for c in chains:
        b = int(ceil(np.sqrt(c.size)))
        size = c.size // b
        if size < 1:
            continue
        trimmed = c[: b * size].reshape(b, size)
        out.extend(fn(row) for row in trimmed)
    return np.array(out)


def _constant(chains):
    return all(np.ptp(c) == 0.0 for c in chains) and len({c[0] for c in chains}) == 1


def mean_with_error(series, min_ess: float = MIN_ESS) -> tuple[float, float]:
    """Mean and batch-means standard error.

    A constant series (a frozen chain) returns its value with zero error.
    """
    chains = _as_chains(series)
    if _constant(chains):
        return float(chains[0][0]), 0.0
    _gate(chains, min_ess)
    pooled = np.concatenate(chains)
    bm = _batches(chains, np.mean)
    return float(pooled.mean()), float(bm.std(ddof=1) / np.sqrt(bm.size))


def variance_with_error(series, mean: float | None = None,
                        min_ess: float = MIN_ESS) -> tuple[float, float]:
    """Variance and its batch-means standard error.

    With ``mean`` given the variance is taken about that known mean (used
    for centred statistics whose expectation is exact by symmetry).
    Raises ``InsufficientESSError`` below ``min_ess`` and
    ``DegenerateSeriesError`` on a constant series.
    """
    chains = _as_chains(series)
    pooled = np.concatenate(chains)
    if np.ptp(pooled) == 0.0:
        raise DegenerateSeriesError("series has zero variance")
    _gate(chains, min_ess)
    m = float(pooled.mean()) if mean is None else float(mean)
    dev2 = (pooled - m) ** 2
    var = float(dev2.mean())
    if mean is None:
        var *= pooled.size / (pooled.size - 1)
    bm = _batches(chains, lambda row: np.mean((row - m) ** 2))
    return var, float(bm.std(ddof=1) / np.sqrt(bm.size))


def fit_power_law(x, y, yerr=None, level: float = 0.95) -> ScalingFit:
    """Weighted least-squares fit of ``log y`` against ``log x``.

    Weights come from ``yerr / y`` (the standard error of ``log y``); the
    confidence interval uses a t quantile with ``len(x) - 2`` degrees of
    freedom and the residual-scaled covariance.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.any(x <= 0) or np.any(y <= 0):
        return ScalingFit(float("nan"), float("nan"), (float("nan"), float("nan")), float("nan"))
    lx, ly = np.log(x), np.log(y)
    if yerr is None or np.any(np.asarray(yerr) <= 0):
        w = np.ones_like(lx)
    else:
        w = (y / np.asarray(yerr, dtype=float)) ** 2
    X = np.vstack([np.ones_like(lx), lx]).T
    W = np.diag(w)
    cov = np.linalg.inv(X.T @ W @ X)
    beta = cov @ X.T @ W @ ly
    dof = x.size - 2
    if dof > 0:
        resid = ly - X @ beta
        chi2 = float(resid @ W @ resid) / dof
        cov = cov * max(chi2, 1.0) if yerr is not None else cov * chi2
        q = stats.t.ppf(0.5 + level / 2, dof)
    else:
        q = stats.norm.ppf(0.5 + level / 2)
    se = float(np.sqrt(cov[1, 1]))
    slope = float(beta[1])
    return ScalingFit(slope, se, (slope - q * se, slope + q * se), float(beta[0]))


# ---------------------------------------------------------------------------
# Gap and count statistics
# ---------------------------------------------------------------------------


def _series(run, name):
    series = getattr(run, "series", run)
    if name not in series:
        raise KeyError(f"run has no observable {name!r}")
    return series[name]


def gap_variance_profile(run, ks, min_ess: float = GATE_ESS):
    """``Var[gap(., k)]`` for each k and the fitted log-log exponent.

    Uses the recorded ``gapvar:k`` observables (mean over labels of
    ``(gap - k)^2``), whose expectation is the gap variance because
    ``E[gap(i, k)] = k`` exactly. Returns ``(rows, fit)``.
    """
    rows = []
    for k in ks:
        v, se = mean_with_error(_series(run, f"gapvar:{k}"), min_ess=min_ess)
        rows.append(ProfileRow(float(k), v, se))
    vals = np.array([r.value for r in rows])
    if np.any(vals <= 0):
        fit = ScalingFit(float("nan"), float("nan"), (float("nan"), float("nan")), float("nan"))
    else:
        fit = fit_power_law([r.key for r in rows], vals, [r.stderr for r in rows])
    return rows, fit


def count_prediction(model: KernelModel, ell: float, *, exact: bool = False) -> Prediction:
    """Predicted number variance in ``(-ell, ell)``.

    Default: the asymptotic law ``Var ~ N^s zeta(-s, 2 ell) sigma2`` with
    ``sigma2 = cot(pi s / 2) / (beta (pi/2) s)``. With ``exact=True``:
    ``Var ~ N^s sigma_xi^2`` for the periodic indicator itself, the
    normalizer then being ``N^s``.
    """
    s, beta, n = model.s, model.params.beta, model.params.n
    if exact:
        xi = TestFunction.indicator(ell)
        sig = sigma_xi_squared(xi, riesz_inverse_spectral(xi, model=model), beta)
        return Prediction(sig, s, float(n) ** s)
    sig = 1.0 / (tan(pi * s / 2) * beta * (pi / 2) * s)
    return Prediction(sig, s, float(n) ** s * hurwitz_zeta(-s, 2.0 * ell))


def number_variance(run, ells, model: KernelModel, prediction=None,
                    min_ess: float = GATE_ESS):
    """Number variance in windows of half-width ``ell``.

    Reads the ``countvar:ell`` observables (squared count fluctuation
    averaged over rotated windows). ``ratio`` is ``Var / normalizer``, to be
    compared with ``prediction.sigma2``; ``prediction`` may be a callable of
    ``ell`` and defaults to :func:`count_prediction`.
    """
    rows = []
    for ell in ells:
        if not 0.0 < ell <= 0.5:
            raise DomainError("window half-width must lie in (0, 1/2]")
        pred = prediction(ell) if callable(prediction) else (prediction or count_prediction(model, ell))
        v, se = mean_with_error(_series(run, f"countvar:{ell:g}"), min_ess=min_ess)
        rows.append(ProfileRow(float(ell), v, se, v / pred.normalizer, se / pred.normalizer))
    return rows


# ---------------------------------------------------------------------------
# CLT
# ---------------------------------------------------------------------------


def wasserstein_to_gaussian(samples, sigma: float) -> float:
    """W1 distance between the empirical law and ``Normal(0, sigma^2)``.

    Integrates ``|F_n^-1(u) - sigma Phi^-1(u)|`` exactly on each quantile
    cell using the Gaussian partial expectations.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    zb = stats.norm.ppf(np.arange(n + 1) / n)  # cell edges in z, from -inf to inf
    za, zb = zb[:-1], zb[1:]
    z0 = np.clip(x / sigma, za, zb)

    def part(lo, hi):
        # int_lo^hi (x - sigma z) phi(z) dz
        return x * (stats.norm.cdf(hi) - stats.norm.cdf(lo)) + sigma * (stats.norm.pdf(hi) - stats.norm.pdf(lo))

    total = part(za, z0) - part(z0, zb)
    return float(np.sum(total))


def clt_test(samples, prediction: Prediction | float, act: float | None = None,
             min_samples: int = GATE_ESS) -> CLTReport:
    """Compare standardized fluctuations with ``Normal(0, sigma2)``.

    ``samples`` is a single series or a list of per-chain series. Each chain
    is thinned at spacing ``ceil(act)`` (its own ACT when ``act`` is None)
    so that the retained samples are close to independent; fewer than
    ``min_samples`` retained samples raise ``InsufficientESSError``.
    """
    sigma2 = prediction.sigma2 if isinstance(prediction, Prediction) else float(prediction)
    chains = _as_chains(samples)
    if np.ptp(np.concatenate(chains)) == 0.0:
        raise DegenerateSeriesError("fluctuation series is constant")
    kept = []
    for c in chains:
        tau = ess(c)[1] if act is None else act
        kept.append(c[:: max(1, int(ceil(tau)))])
    y = np.concatenate(kept)
    if y.size < min_samples:
        raise InsufficientESSError(f"{y.size} effectively independent samples, need {min_samples}")
    sigma = float(np.sqrt(sigma2))
    ks = stats.kstest(y, "norm", args=(0.0, sigma))
    pooled = np.concatenate(chains)
    return CLTReport(
        n_effective=int(y.size),
        ks_stat=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
        w1_to_gaussian=wasserstein_to_gaussian(y, sigma),
        skewness=float(stats.skew(y)),
        excess_kurtosis=float(stats.kurtosis(y)),
        variance_ratio=float(np.mean(pooled ** 2) / sigma2),
    )


# ---------------------------------------------------------------------------
# Inequalities
# ---------------------------------------------------------------------------


def sub_poisson_check(series, xi: TestFunction, n: int, ell: float = 1.0,
                      min_ess: float = GATE_ESS, raise_on_violation: bool = True):
    """Check ``Var[Fluct] <= N ell (int xi^2 - (int xi)^2)``.

    ``series`` holds ``Fluct_N[xi]`` samples (mean zero by symmetry for the
    statistics recorded by the sampler). Returns ``(var, bound, margin)``
    with ``margin = bound + 3 stderr - var``.
    """
    xs = np.linspace(0.0, 1.0, 1 << 14, endpoint=False) + 0.5 / (1 << 14)
    vals = xi(xs)
    bound = n * ell * float(np.mean(vals ** 2) - np.mean(vals) ** 2)
    chains = _as_chains(series)
    if np.ptp(np.concatenate(chains)) == 0.0:
        var, se = float(np.mean(np.concatenate(chains) ** 2)), 0.0
    else:
        var, se = variance_with_error(chains, mean=0.0, min_ess=min_ess)
    margin = bound + 3.0 * se - var
    if raise_on_violation and margin < 0:
        raise ViolationError(f"sub-Poisson bound violated: var {var:.6g} > bound {bound:.6g}")
    return var, bound, margin


def _grad_gap(n, i, k):
    v = np.zeros(n)
    v[(i + k) % n] += n
    v[i % n] -= n
    return v


def bl_solve(H: np.ndarray, b: np.ndarray, rtol: float = CG_RTOL) -> np.ndarray:
    """Solve ``H y = b`` on the mean-zero subspace by projected CG.

    ``H`` is symmetric positive semi-definite with kernel spanned by the
    constant vector and ``b`` is orthogonal to it.
    """
    n = b.size
    b = b - b.mean()

    def mv(v):
        v = v - v.mean()
        w = H @ v
        return w - w.mean()

    op = LinearOperator((n, n), matvec=mv, dtype=float)
    y, info = cg(op, b, rtol=rtol, atol=0.0, maxiter=10 * n)
    if info != 0:
        raise ConvergenceError(f"CG did not converge (info={info})")
    y = y - y.mean()
    if np.linalg.norm(mv(y) - b) > 10 * rtol * np.linalg.norm(b):
        raise ConvergenceError("CG residual above tolerance")
    return y


def bl_solve_dense(H: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense oracle for :func:`bl_solve`: solve ``(H + J/n) y = b``."""
    n = b.size
    b = b - b.mean()
    y = np.linalg.solve(H + np.full((n, n), 1.0 / n), b)
    return y - y.mean()


def brascamp_lieb_check(snapshots, gap_series, model: KernelModel, k: int, i: int = 0,
                        min_ess: float = GATE_ESS, raise_on_violation: bool = True):
    """Brascamp-Lieb bound for ``F = gap(i, k)``.

    For each snapshot the system ``(beta Hess H) y = grad F`` is solved on the
    mean-zero subspace and ``grad F . y`` averaged. ``gap_series`` holds the
    recorded ``gap:k`` values (label 0) whose variance is compared against
    that average. Returns ``(var, bound, margin)``.
    """
    beta = model.params.beta
    quad = []
    for x in snapshots:
        H = beta * hessian(x, model)
        b = _grad_gap(x.size, i, k)
        quad.append(float(b @ bl_solve(H, b)))
    quad = np.array(quad)
    bound = float(quad.mean())
    bound_se = float(quad.std(ddof=1) / np.sqrt(quad.size)) if quad.size > 1 else 0.0
    var, se = variance_with_error(gap_series, mean=float(k), min_ess=min_ess)
    margin = bound + 3.0 * np.hypot(se, bound_se) - var
    if raise_on_violation and margin < 0:
        raise ViolationError(f"Brascamp-Lieb bound violated: var {var:.6g} > bound {bound:.6g}")
    return var, bound, margin


# ---------------------------------------------------------------------------
# Tails and loop terms
# ---------------------------------------------------------------------------


def _wilson(hits, total, level=0.95):
    ci = stats.binomtest(int(hits), int(total)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def rigidity_tails(snapshots, k: int, s: float, eps_list, deltas=()):
    """Empirical tails of the gap deviation and of the nearest-neighbour spacing.

    Returns two lists of ``(parameter, fraction, (lo, hi))``: the frequency of
    ``|gap(i, k) - k| > k^(s/2 + eps)`` over labels and snapshots, and of
    ``gap(i, 1) < delta``. Wilson intervals treat the pooled label
    observations as independent, so they are optimistic.
    """
    from . import _fast

    snaps = [np.asarray(x, dtype=float) for x in snapshots]
    dev = np.concatenate([np.abs(_fast.gaps_all(x, k) - k) for x in snaps])
    nn = np.concatenate([_fast.gaps_all(x, 1) for x in snaps])
    gap_rows = []
    for eps in eps_list:
        hits = int(np.count_nonzero(dev > k ** (s / 2 + eps)))
        gap_rows.append((float(eps), hits / dev.size, _wilson(hits, dev.size)))
    nn_rows = []
    for delta in deltas:
        hits = int(np.count_nonzero(nn < delta))
        nn_rows.append((float(delta), hits / nn.size, _wilson(hits, nn.size)))
    return gap_rows, nn_rows


@dataclass(frozen=True)
class LoopSummary:
    n: int
    mean: float
    stderr: float
    var: float
    var_stderr: float


def loop_statistics(series_by_n: dict, min_ess: float = GATE_ESS):
    """Mean and variance of the loop term A for each N, and the growth exponent of Var A.

    ``series_by_n`` maps N to the recorded ``A`` series. Returns
    ``(summaries, fit)``; ``fit`` is None with fewer than two values of N.
    """
    rows = []
    for n in sorted(series_by_n):
        chains = _as_chains(series_by_n[n])
        if _constant(chains):
            rows.append(LoopSummary(int(n), float(chains[0][0]), 0.0, 0.0, 0.0))
            continue
        m, se = mean_with_error(chains, min_ess=min_ess)
        v, vse = variance_with_error(chains, min_ess=min_ess)
        rows.append(LoopSummary(int(n), m, se, v, vse))
    fit = None
    if len(rows) >= 2 and all(r.var > 0 for r in rows):
        fit = fit_power_law([r.n for r in rows], [r.var for r in rows], [r.var_stderr for r in rows])
    return rows, fit
