"""A short sampling run at N = 64 with basic diagnostics.

Runs two random-walk Metropolis chains, then reports acceptance, ESS,
E[gap(., k)] against its exact value k, the gap variances with their
log-log slope, and the cosine fluctuation variance against N^s sigma^2.

Run: python demos/small_run.py   (about 20 s)
"""
import numpy as np

from rieszgas.estimators import fit_power_law, mean_with_error, total_ess, variance_with_error
from rieszgas.sampler import SamplerConfig, run_chains
from rieszgas.special import ModelParams, build_kernel_table
from rieszgas.transforms import TestFunction, riesz_inverse_spectral, sigma_xi_squared

S, BETA, N = 0.5, 2.0, 64


def main():
    model = build_kernel_table(ModelParams(S, BETA, N))
    cfg = SamplerConfig(sweeps=20000, burn_in=2000, thin=10, seed=1)
    ks = (2, 4, 8, 16)
    names = [f"gap:{k}" for k in ks] + [f"gapvar:{k}" for k in ks] + ["fluct:cos"]
    run = run_chains(model, cfg, names, chains=2)
    print(f"{run.seconds:.1f} s, acceptance {np.round(run.acceptance, 3)}, step {np.round(run.final_step, 3)}")
    for k in ks:
        m, se = mean_with_error(run.series[f"gap:{k}"])
        print(f"E[gap:{k}] = {m:.4f} +- {se:.4f}  (ESS {total_ess(run.series[f'gap:{k}']):.0f})")
    vals = [mean_with_error(run.series[f"gapvar:{k}"]) for k in ks]
    fit = fit_power_law(ks, [v for v, _ in vals], [e for _, e in vals])
    print("Var[gap] =", ", ".join(f"{v:.4f}" for v, _ in vals), f"slope {fit.exponent:.3f} (s = {S})")
    xi = TestFunction.cosine(1)
    sig = sigma_xi_squared(xi, riesz_inverse_spectral(xi, s=S), BETA)
    v, se = variance_with_error(run.series["fluct:cos"], mean=0.0)
    print(f"Var[Fluct cos] / (N^s sigma^2) = {v / (N ** S * sig):.3f} +- {se / (N ** S * sig):.3f}")


if __name__ == "__main__":
    main()
