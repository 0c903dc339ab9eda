"""Numerical laboratory for the circular Riesz gas.

The modules follow the pipeline of an experiment: :mod:`~rieszgas.special`
(Hurwitz zeta and the periodic kernel), :mod:`~rieszgas.transforms` (test
functions and their transport maps), :mod:`~rieszgas.gibbs` (energy,
observables and loop terms), :mod:`~rieszgas.sampler` (MCMC),
:mod:`~rieszgas.estimators` (error bars, fits and inequality checks) and
:mod:`~rieszgas.harness` / :mod:`~rieszgas.cli` (configuration and the
command line).
"""
__version__ = "0.1.0"

from .errors import RieszError
from .gibbs import Configuration, energy, fluct, gap, gaps, hessian, loop_term_A, loop_term_B
from .sampler import SamplerConfig, ess, run_chains
from .special import KernelModel, ModelParams, build_kernel_table, hurwitz_zeta, kernel_g
from .transforms import TestFunction, riesz_inverse_spectral, sigma_xi_squared

__all__ = [
    "__version__",
    "RieszError",
    "ModelParams",
    "KernelModel",
    "build_kernel_table",
    "hurwitz_zeta",
    "kernel_g",
    "TestFunction",
    "riesz_inverse_spectral",
    "sigma_xi_squared",
    "Configuration",
    "energy",
    "fluct",
    "gap",
    "gaps",
    "hessian",
    "loop_term_A",
    "loop_term_B",
    "SamplerConfig",
    "run_chains",
    "ess",
]
