"""The acceptance suite: nine quantitative checks of the numerical laboratory.

Each criterion returns a :class:`CriterionResult` made of individual
:class:`Claim` records (empirical value, predicted value, tolerance,
pass/fail). Monte Carlo runs are shared between criteria through a
:class:`Workbench`, which builds each run lazily and caches it.

Two budgets exist. ``full`` uses the production workloads (tens of minutes
on one core); ``quick`` runs only the deterministic checks plus the
discrete sampler oracle and finishes in about a minute.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _fast
from .errors import InsufficientESSError, MismatchError, RieszError
from .estimators import (
    GATE_ESS,
    bl_solve,
    bl_solve_dense,
    brascamp_lieb_check,
    clt_test,
    count_prediction,
    gap_variance_profile,
    loop_statistics,
    mean_with_error,
    number_variance,
    sub_poisson_check,
    total_ess,
    variance_with_error,
)
from .gibbs import Configuration, LoopOperator, hessian
from .sampler import (
    SamplerConfig,
    chain_rng,
    discrete_oracle,
    discrete_transition_matrix,
    run_chains,
)
from .special import (
    ModelParams,
    build_kernel_table,
    hurwitz_zeta,
    kernel_g_deriv_direct,
    kernel_g_direct,
)
from .transforms import (
    TestFunction,
    psi_closed_indicator,
    psi_closed_power,
    riesz_inverse_pointwise,
    riesz_inverse_spectral,
    sigma_xi_squared,
    sigma_xi_squared_spectral,
)

__all__ = ["Claim", "CriterionResult", "Workbench", "CRITERIA", "run_suite", "SUITES"]

SUITES = ("quick", "full")


@dataclass
class Claim:
    """One checked number."""

    claim_id: str
    description: str
    empirical: float
    predicted: float
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = asdict(self)
        for key in ("empirical", "predicted", "tolerance"):
            v = out[key]
            out[key] = None if v is None or not np.isfinite(v) else float(v)
        out["passed"] = bool(self.passed)
        return out


@dataclass
class CriterionResult:
    number: int
    title: str
    claims: list
    seconds: float
    skipped: bool = False

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.claims)

    def line(self) -> str:
        if self.skipped:
            return f"criterion {self.number} [{self.title}]: SKIPPED (not in this suite)"
        status = "PASS" if self.passed else "FAIL"
        failed = [c.claim_id for c in self.claims if not c.passed]
        tail = f" failing: {', '.join(failed)}" if failed else ""
        return f"criterion {self.number} [{self.title}]: {status} ({self.seconds:.1f} s){tail}"


def _claim(cid, desc, emp, pred, tol, ok, **details):
    return Claim(cid, desc, float(emp), float(pred), float(tol), bool(ok), details)


def _relerr(a, b):
    return abs(a - b) / abs(b)


# ---------------------------------------------------------------------------
# Shared Monte Carlo runs
# ---------------------------------------------------------------------------

# name -> (s, beta, n, sweeps per chain, burn-in, chains, observables, snapshot_every)
_MAIN_OBS = ["gapvar:4", "gapvar:8", "gapvar:16", "gapvar:32", "gap:8", "countvar:0.125",
             "count:0.125", "fluct:cos", "A"]
_GAP_OBS = ["gapvar:4", "gapvar:8", "gapvar:16", "gapvar:32", "gap:8"]
RUNS = {
    "main": (0.5, 2.0, 256, 75_000, 5_000, 4, _MAIN_OBS, 25),
    "s0.3": (0.3, 2.0, 256, 36_000, 3_000, 2, _GAP_OBS, 25),
    "s0.7": (0.7, 2.0, 256, 36_000, 3_000, 2, _GAP_OBS, 25),
    "gaps128": (0.5, 2.0, 128, 30_000, 2_000, 2, ["gap:1", "gap:4", "gap:16"], 0),
    "loop64": (0.5, 2.0, 64, 40_000, 2_000, 2, ["A"], 0),
    "loop128": (0.5, 2.0, 128, 60_000, 2_000, 2, ["A"], 0),
}


class Workbench:
    """Lazily built kernel models and chain runs shared by the criteria."""

    def __init__(self, seed: int = 20240601, threads: int | None = None, log=None):
        self.seed = int(seed)
        self.threads = threads
        self.log = log or (lambda msg: None)
        self._models = {}
        self._runs = {}

    def model(self, s, beta, n):
        base = self._models.get(s)
        if base is None:
            base = build_kernel_table(ModelParams(s, beta, n))
            self._models[s] = base
        return base.with_params(ModelParams(s, beta, n))

    def run(self, name):
        if name not in self._runs:
            s, beta, n, sweeps, burn, chains, obs, snap = RUNS[name]
            cfg = SamplerConfig(sweeps=sweeps, burn_in=burn, thin=10, seed=self.seed)
            t0 = time.perf_counter()
            self._runs[name] = run_chains(self.model(s, beta, n), cfg, obs, chains=chains,
                                          threads=self.threads, snapshot_every=snap)
            self.log(f"run {name}: {chains} x {sweeps} sweeps in {time.perf_counter() - t0:.0f} s")
        return self._runs[name]

    @property
    def runs(self):
        return dict(self._runs)


# ---------------------------------------------------------------------------
# Criteria
# ---------------------------------------------------------------------------


def criterion_1(bench: Workbench, suite: str):
    """Hurwitz zeta against mpmath and the kernel table against direct evaluation."""
    import mpmath

    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    w = np.concatenate([rng.uniform(-0.9, 0.99, 500), rng.uniform(1.01, 4.0, 500)])
    a = np.exp(rng.uniform(np.log(1e-3), np.log(10.0), 1000))
    ours = hurwitz_zeta(w, a)
    mpmath.mp.dps = 30
    ref = np.array([float(mpmath.zeta(mpmath.mpf(wi), mpmath.mpf(ai))) for wi, ai in zip(w, a)])
    zeta_err = float(np.max(np.abs(ours - ref) / np.abs(ref)))

    table_err = 0.0
    x = np.linspace(1e-3, 1 - 1e-3, 997)
    for s in (0.3, 0.5, 0.7):
        m = bench.model(s, 1.0, 2)
        pairs = [(m.g(x), kernel_g_direct(x, s)), (m.g1(x), kernel_g_deriv_direct(x, 1, s)),
                 (m.g2(x), kernel_g_deriv_direct(x, 2, s))]
        # The compiled pair loops use the half-interval table.
        pos = np.array([0.0, 0.0])
        for xv in x[::10]:
            pos[1] = xv
            G = _fast.pair_matrix(pos, s, m.table_half[0], m.table_half[1])
            pairs.append((np.array([G[1, 0]]), np.array([kernel_g_direct(-xv, s)])))
        for got, want in pairs:
            # Relative error, absolute where |value| < 1 (g' vanishes at 1/2).
            table_err = max(table_err, float(np.max(np.abs(got - want) / np.maximum(np.abs(want), 1.0))))
    secs = time.perf_counter() - t0
    return [
        _claim("1.zeta", "Hurwitz zeta vs 30-digit oracle, max rel. error", zeta_err, 0.0, 1e-10,
               zeta_err <= 1e-10, samples=1000),
        _claim("1.table", "kernel table (g, g', g'') vs direct Hurwitz, max error relative to max(|value|, 1)",
               table_err, 0.0, 1e-10, table_err <= 1e-10),
        _claim("1.runtime", "runtime in seconds", secs, 10.0, 10.0, secs < 10.0),
    ]


def criterion_2(bench: Workbench, suite: str):
    """Integration by parts for the cosine and closed-form transports vs quadrature."""
    t0 = time.perf_counter()
    claims = []
    beta = 1.0
    for s in (0.3, 0.5, 0.7):
        xi = TestFunction.cosine(1)
        psi = riesz_inverse_spectral(xi, s=s)
        ibp = sigma_xi_squared(xi, psi, beta)
        spec = sigma_xi_squared_spectral(xi, s, beta)
        err = _relerr(ibp, spec)
        claims.append(_claim(f"2.ibp.s{s}", "-(1/beta) int xi' psi vs spectral seminorm, cosine",
                             ibp, spec, 1e-8, err <= 1e-8, rel_error=err))
    xs = np.array([0.03, 0.07, 0.2, 0.31, 0.45, 0.6, 0.77, 0.93])
    worst_ind = 0.0
    for s in (0.3, 0.5, 0.7):
        for a in (0.125, 0.3):
            xi = TestFunction.indicator(a)
            pts = xs[np.minimum(np.abs(xs - a), np.abs(xs - 1 + a)) > 0.02]
            num = riesz_inverse_pointwise(xi, pts, s=s)
            closed = psi_closed_indicator(a, s, pts)
            worst_ind = max(worst_ind, float(np.max(np.abs(num - closed))))
    claims.append(_claim("2.indicator", "indicator closed form vs quadrature, max abs. error",
                         worst_ind, 0.0, 1e-6, worst_ind <= 1e-6))
    worst_pow = 0.0
    for s, alpha in ((0.5, 0.2), (0.5, 0.4), (0.7, 0.3), (0.3, 0.1)):
        xi = TestFunction.power(alpha)
        num = riesz_inverse_pointwise(xi, xs, s=s)
        closed = psi_closed_power(alpha, s, xs)
        worst_pow = max(worst_pow, float(np.max(np.abs(num - closed))))
    claims.append(_claim("2.power", "power closed form vs quadrature, max abs. error",
                         worst_pow, 0.0, 1e-6, worst_pow <= 1e-6))
    secs = time.perf_counter() - t0
    claims.append(_claim("2.runtime", "runtime in seconds", secs, 30.0, 30.0, secs < 30.0))
    return claims


def _gated(fn, *args, **kw):
    """Call an estimator; a failed ESS gate becomes a failing claim."""
    try:
        return fn(*args, **kw), None
    except InsufficientESSError as exc:
        return None, str(exc)


def criterion_3(bench: Workbench, suite: str):
    run = bench.run("gaps128")
    claims = []
    for k in (1, 4, 16):
        series = run.series[f"gap:{k}"]
        res, err = _gated(mean_with_error, series, min_ess=GATE_ESS)
        ess_total = total_ess(series)
        if res is None:
            claims.append(_claim(f"3.gap{k}", f"E[gap(0,{k})] = {k}", np.nan, k, np.nan, False, error=err))
            continue
        m, se = res
        claims.append(_claim(f"3.gap{k}", f"E[gap(0,{k})] = {k} within 3 batch-means sigma",
                             m, k, 3 * se, abs(m - k) <= 3 * se, stderr=se, ess=ess_total))
    return claims


def criterion_4(bench: Workbench, suite: str):
    claims = []
    for s, name in ((0.3, "s0.3"), (0.5, "main"), (0.7, "s0.7")):
        run = bench.run(name)
        res, err = _gated(gap_variance_profile, run, [4, 8, 16, 32])
        if res is None:
            claims.append(_claim(f"4.exponent.s{s}", "gap variance exponent", np.nan, s, 0.15, False,
                                 error=err))
            continue
        rows, fit = res
        claims.append(_claim(f"4.exponent.s{s}", f"log-log exponent of Var[gap] over k=4..32, s={s}",
                             fit.exponent, s, 0.15, abs(fit.exponent - s) <= 0.15,
                             ci=list(fit.ci), variances=[r.value for r in rows],
                             stderrs=[r.stderr for r in rows]))
    return claims


def criterion_5(bench: Workbench, suite: str):
    run = bench.run("main")
    model = run.model
    s, beta = model.s, model.params.beta
    ell = 0.125
    pred = count_prediction(model, ell)
    res, err = _gated(number_variance, run, [ell], model, pred)
    if res is None:
        return [_claim("5.ratio", "number variance ratio", np.nan, pred.sigma2, 0.15, False, error=err)]
    row = res[0]
    exact = count_prediction(model, ell, exact=True)
    rel = row.ratio / pred.sigma2 - 1.0
    return [_claim("5.ratio", "Var[count(-l,l)] / (N^s zeta(-s,2l)) vs cot(pi s/2)/(beta (pi/2) s)",
                   row.ratio, pred.sigma2, 0.15, abs(rel) <= 0.15,
                   relative_deviation=rel, ratio_stderr=row.ratio_stderr, variance=row.value,
                   variance_stderr=row.stderr,
                   exact_periodic_prediction=exact.sigma2 * exact.normalizer,
                   s=s, beta=beta, n=model.params.n)]


def criterion_6(bench: Workbench, suite: str):
    run = bench.run("main")
    model = run.model
    n, s, beta = model.params.n, model.s, model.params.beta
    claims = []
    cases = (("cos", "fluct:cos", TestFunction.cosine(1)),
             ("count", "count:0.125", TestFunction.indicator(0.125)))
    for tag, name, xi in cases:
        sig2 = sigma_xi_squared(xi, riesz_inverse_spectral(xi, model=model), beta)
        std = [c.values * n ** (-s / 2) for c in run.series[name]]
        try:
            rep = clt_test(std, sig2)
        except InsufficientESSError as exc:
            claims.append(_claim(f"6.{tag}.ks", "KS vs Normal(0, sigma^2)", np.nan, 0.01, 0.01, False,
                                 error=str(exc)))
            continue
        claims.append(_claim(f"6.{tag}.ks", f"KS p-value vs Normal(0, sigma^2), {name}",
                             rep.ks_pvalue, 0.01, 0.01, rep.ks_pvalue >= 0.01,
                             ks_stat=rep.ks_stat, n_effective=rep.n_effective,
                             w1=rep.w1_to_gaussian, skewness=rep.skewness,
                             excess_kurtosis=rep.excess_kurtosis, sigma2=sig2))
        var, se = variance_with_error(std, mean=0.0, min_ess=GATE_ESS)
        ratio = var / sig2
        claims.append(_claim(f"6.{tag}.var", f"Var / (N^s sigma^2) in [0.85, 1.15], {name}",
                             ratio, 1.0, 0.15, 0.85 <= ratio <= 1.15, ratio_stderr=se / sig2))
    return claims


def _dual_path_claim(bench, count=100):
    model = bench.model(0.5, 2.0, 64)
    xi = TestFunction.cosine(1)
    op = LoopOperator(model, xi, riesz_inverse_spectral(xi, model=model))
    rng = chain_rng(bench.seed, 7)
    worst = 0.0
    for j in range(count):
        cfg = (Configuration.jittered(64, rng, amplitude=0.45) if j % 2
               else Configuration.uniform(64, rng))
        try:
            d = op.evaluate(cfg, check=True)
        except MismatchError:
            d = op.evaluate(cfg, check=False)
        worst = max(worst, abs(d.a_pair_sum - d.a_transport) / max(1.0, abs(d.a_pair_sum)))
    return _claim("7.dual_path", "A by pair sum vs transport identity, 100 configurations",
                  worst, 0.0, 1e-8, worst <= 1e-8)


def criterion_7(bench: Workbench, suite: str):
    claims = [_dual_path_claim(bench)]
    if suite == "quick":
        return claims
    by_n = {64: bench.run("loop64").series["A"], 128: bench.run("loop128").series["A"],
            256: bench.run("main").series["A"]}
    res, err = _gated(loop_statistics, by_n)
    if res is None:
        claims.append(_claim("7.mean", "E[A] = 0", np.nan, 0.0, np.nan, False, error=err))
        return claims
    rows, fit = res
    for r in rows:
        claims.append(_claim(f"7.mean.n{r.n}", f"E[A] = 0 within 3 stderr, N={r.n}",
                             r.mean, 0.0, 3 * r.stderr, abs(r.mean) <= 3 * r.stderr, var=r.var))
    claims.append(_claim("7.var_growth", "growth exponent of Var[A] over N = 64, 128, 256",
                         fit.exponent, 1.3, 0.0, fit.exponent <= 1.3, ci=list(fit.ci),
                         variances=[r.var for r in rows]))
    return claims


def criterion_8(bench: Workbench, suite: str):
    claims = []
    rng = chain_rng(bench.seed, 8)
    model16 = bench.model(0.5, 2.0, 16)
    worst_neg, worst_null, min_gap = 0.0, 0.0, np.inf
    for _ in range(100):
        H = hessian(Configuration.uniform(16, rng), model16)
        ev = np.linalg.eigvalsh(H)
        scale = float(np.max(np.abs(ev)))
        worst_neg = max(worst_neg, -ev[0] / scale)
        worst_null = max(worst_null, float(np.max(np.abs(H @ np.ones(16)))) / scale)
        min_gap = min(min_gap, ev[1] / scale)
    claims.append(_claim("8.hessian_psd", "Hessian PSD with kernel (1,...,1), N=16, 100 configurations",
                         max(worst_neg, worst_null), 0.0, 1e-12,
                         worst_neg <= 1e-12 and worst_null <= 1e-12 and min_gap > 0,
                         smallest_nonzero_eigenvalue_ratio=min_gap))
    model8 = bench.model(0.5, 2.0, 8)
    worst = 0.0
    for _ in range(20):
        H = 2.0 * hessian(Configuration.jittered(8, rng, amplitude=0.4), model8)
        b = np.zeros(8)
        b[3], b[0] = 8.0, -8.0
        y_cg, y_dense = bl_solve(H, b), bl_solve_dense(H, b)
        worst = max(worst, float(np.max(np.abs(y_cg - y_dense)) / np.max(np.abs(y_dense))))
    claims.append(_claim("8.cg_vs_dense", "projected CG vs dense solve, N=8", worst, 0.0, 1e-8,
                         worst <= 1e-8))
    if suite == "quick":
        return claims

    for name in ("main", "s0.3", "s0.7"):
        run = bench.run(name)
        model = run.model
        n = model.params.n
        snaps = np.concatenate(run.snapshots)
        res, err = _gated(brascamp_lieb_check, snaps, run.series["gap:8"], model, 8,
                          raise_on_violation=False)
        if res is None:
            claims.append(_claim(f"8.bl.{name}", "Brascamp-Lieb", np.nan, np.nan, np.nan, False, error=err))
        else:
            var, bound, margin = res
            claims.append(_claim(f"8.bl.{name}", f"Var[gap(0,8)] <= E[grad F.(beta Hess H)^-1 grad F], {name}",
                                 var, bound, bound + margin - var, margin >= 0, margin=margin))
        if name != "main":
            continue
        for tag, obs, xi in (("cos", "fluct:cos", TestFunction.cosine(1)),
                             ("count", "count:0.125", TestFunction.indicator(0.125))):
            res, err = _gated(sub_poisson_check, run.series[obs], xi, n, raise_on_violation=False)
            if res is None:
                claims.append(_claim(f"8.subpoisson.{tag}", "sub-Poisson", np.nan, np.nan, np.nan, False,
                                     error=err))
                continue
            var, bound, margin = res
            claims.append(_claim(f"8.subpoisson.{tag}", f"Var[Fluct] <= N (int xi^2 - (int xi)^2), {obs}",
                                 var, bound, bound + margin - var, margin >= 0, margin=margin))
    return claims


def criterion_9(bench: Workbench, suite: str):
    t0 = time.perf_counter()
    claims = []
    model3 = bench.model(0.5, 1.0, 3)
    emp, exact = discrete_oracle(model3, cells=12, sweeps=333_334, seed=bench.seed)
    dev = float(np.max(np.abs(emp - exact)))
    claims.append(_claim("9.discrete", "3 particles on 12 cells: empirical vs exact weights, max abs",
                         dev, 0.0, 1e-2, dev <= 1e-2, total_variation=0.5 * float(np.abs(emp - exact).sum())))
    P, states, w = discrete_transition_matrix(model3, cells=12)
    flux = w[:, None] * P
    db = float(np.max(np.abs(flux - flux.T)))
    stat = float(np.max(np.abs(w @ P - w)))
    rows = float(np.max(np.abs(P.sum(axis=1) - 1.0)))
    claims.append(_claim("9.detailed_balance", "w_i P_ij = w_j P_ji for the single-site kernel",
                         max(db, stat, rows), 0.0, 1e-14, max(db, stat, rows) <= 1e-14))
    model = bench.model(0.5, 2.0, 16)
    cfg = SamplerConfig(sweeps=600, burn_in=100, thin=5, seed=bench.seed)
    obs = ["gap:1", "gapvar:4", "fluct:cos"]
    r1 = run_chains(model, cfg, obs, chains=2, threads=1)
    r2 = run_chains(model, cfg, obs, chains=2, threads=1)
    r3 = run_chains(model, cfg, obs, chains=2, threads=2)
    same = all(np.array_equal(a.values, b.values) and np.array_equal(a.values, c.values)
               for name in obs for a, b, c in zip(r1.series[name], r2.series[name], r3.series[name]))
    differ = not np.array_equal(r1.series["gap:1"][0].values, r1.series["gap:1"][1].values)
    claims.append(_claim("9.reproducible", "fixed seed gives bit-identical series (1 and 2 threads)",
                         float(same), 1.0, 0.0, same and differ, chains_differ=differ))
    secs = time.perf_counter() - t0
    claims.append(_claim("9.runtime", "runtime in seconds", secs, 60.0, 60.0, secs < 60.0))
    return claims


CRITERIA = {
    1: ("deterministic numerics", criterion_1, True),
    2: ("transform identities", criterion_2, True),
    3: ("exact-symmetry statistics", criterion_3, False),
    4: ("gap-variance scaling", criterion_4, False),
    5: ("number variance", criterion_5, False),
    6: ("CLT", criterion_6, False),
    7: ("loop-equation identities", criterion_7, True),
    8: ("inequality suite", criterion_8, True),
    9: ("sampler correctness", criterion_9, True),
}


def evaluate_criterion(number: int, bench: Workbench, suite: str = "full") -> CriterionResult:
    title, fn, in_quick = CRITERIA[number]
    if suite == "quick" and not in_quick:
        return CriterionResult(number, title, [], 0.0, skipped=True)
    t0 = time.perf_counter()
    try:
        claims = fn(bench, suite)
    except RieszError as exc:
        claims = [_claim(f"{number}.error", f"{type(exc).__name__}: {exc}", np.nan, np.nan, np.nan, False)]
    return CriterionResult(number, title, claims, time.perf_counter() - t0)


def run_suite(suite: str = "quick", seed: int = 20240601, threads: int | None = None,
              numbers=None, log=None) -> list[CriterionResult]:
    """Evaluate the selected criteria (all by default) under one budget."""
    if suite not in SUITES:
        raise ValueError(f"suite must be one of {SUITES}")
    bench = Workbench(seed=seed, threads=threads, log=log)
    results = []
    for k in numbers or sorted(CRITERIA):
        res = evaluate_criterion(k, bench, suite)
        if log:
            log(res.line())
        results.append(res)
    return results
