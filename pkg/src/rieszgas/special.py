"""Hurwitz zeta, the periodic Riesz kernel and the model constants.

The periodic kernel on the unit circle is

    g(x) = zeta(s, x) + zeta(s, 1 - x),      0 < x < 1,

the fundamental solution of ``(-Delta)^((1-s)/2) g = c_s (delta_0 - 1)``.
Direct evaluation goes through :func:`hurwitz_zeta`; the sampler uses the
interpolation table built by :func:`build_kernel_table`, which stores only
the bounded remainder ``g(x) - x^-s - (1-x)^-s`` and adds the two singular
terms back analytically.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma, pi, sqrt

import numpy as np
from scipy.special import bernoulli, factorial

from ._fast import g0_table, g1_table, g2_table, hurwitz_scalar
from .errors import DomainError, SingularityError

__all__ = [
    "ModelParams",
    "KernelModel",
    "hurwitz_zeta",
    "hurwitz_zeta_scalar",
    "riesz_constants",
    "kernel_g",
    "kernel_g_deriv",
    "kernel_g_direct",
    "kernel_g_deriv_direct",
    "build_kernel_table",
    "SINGULAR_TOL",
]

# Euler-Maclaurin: direct sum of the first EM_TERMS terms, Bernoulli
# corrections B_2 .. B_{2*EM_ORDER}.
EM_TERMS = 20
EM_ORDER = 5
_B = bernoulli(2 * EM_ORDER)
_EM_COEF = np.array([_B[2 * j] / factorial(2 * j) for j in range(1, EM_ORDER + 1)])

SINGULAR_TOL = 1e-9


@dataclass(frozen=True)
class ModelParams:
    """Riesz exponent ``s``, inverse temperature ``beta`` and particle count ``n``."""

    s: float
    beta: float
    n: int

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise DomainError(f"s must lie in (0, 1), got {self.s}")
        if not self.beta > 0.0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"n must be an integer >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))


def hurwitz_zeta(w, a):
    """Hurwitz zeta function ``zeta(w, a)`` for real ``w > -1``, ``w != 1`` and ``a > 0``.

    Uses the Euler-Maclaurin formula, which also provides the analytic
    continuation to ``-1 < w < 1``. Inputs broadcast; a scalar is returned
    for scalar inputs.
    """
    w_arr = np.asarray(w, dtype=float)
    a_arr = np.asarray(a, dtype=float)
    scalar = w_arr.ndim == 0 and a_arr.ndim == 0
    w_arr, a_arr = np.broadcast_arrays(w_arr, a_arr)
    if np.any(w_arr <= -1.0) or np.any(w_arr == 1.0) or np.any(~np.isfinite(w_arr)):
        raise DomainError("hurwitz_zeta requires w in (-1, inf) with w != 1")
    if np.any(~(a_arr > 0.0)) or np.any(~np.isfinite(a_arr)):
        raise DomainError("hurwitz_zeta requires a > 0")

    n = np.arange(EM_TERMS, dtype=float).reshape((EM_TERMS,) + (1,) * w_arr.ndim)
    total = np.sum((n + a_arr) ** (-w_arr), axis=0)
    b = a_arr + EM_TERMS
    total = total + b ** (1.0 - w_arr) / (w_arr - 1.0) + 0.5 * b ** (-w_arr)
    poch = w_arr.copy()  # rising factorial (w)_{2j-1}
    for j, coef in enumerate(_EM_COEF, start=1):
        total = total + coef * poch * b ** (-w_arr - 2 * j + 1)
        poch = poch * (w_arr + 2 * j - 1) * (w_arr + 2 * j)
    return float(total) if scalar else total


def hurwitz_zeta_scalar(w: float, a: float) -> float:
    """Compiled scalar :func:`hurwitz_zeta` without domain checks (for quadrature integrands)."""
    return hurwitz_scalar(float(w), float(a), _EM_COEF, EM_TERMS)


def riesz_constants(s: float) -> tuple[float, float]:
    """Return ``(c_s, c_s_prime)``.

    ``c_s`` is the constant of the fractional Laplace equation solved by
    ``g`` and ``c_s_prime`` the constant of the real-space singular-integral
    representation of ``(-Delta)^((1-s)/2)`` on the circle. They satisfy
    ``c_s_prime / c_s = (1 - s) / (2 pi tan(pi s / 2))``.
    """
    if not 0.0 < s < 1.0:
        raise DomainError(f"s must lie in (0, 1), got {s}")
    c_s = sqrt(pi) * 2.0 ** (1.0 - s) * gamma((1.0 - s) / 2.0) / gamma(s / 2.0)
    c_s_prime = 2.0 ** (1.0 - s) * gamma(1.0 - s / 2.0) / (abs(gamma(-(1.0 - s) / 2.0)) * sqrt(pi))
    return c_s, c_s_prime


def _reduce(x):
    x = np.mod(np.asarray(x, dtype=float), 1.0)
    if np.any(np.minimum(x, 1.0 - x) < SINGULAR_TOL):
        raise SingularityError("kernel evaluated at a point congruent to 0 mod 1")
    return x


def _scalar_or(x_in, out):
    return float(out) if np.ndim(x_in) == 0 else out


def kernel_g_direct(x, s: float):
    """``g(x)`` by direct Hurwitz evaluation (the reference path)."""
    xr = _reduce(x)
    return _scalar_or(x, hurwitz_zeta(s, xr) + hurwitz_zeta(s, 1.0 - xr))


def kernel_g_deriv_direct(x, p: int, s: float):
    """``g'(x)`` (p=1) or ``g''(x)`` (p=2) by direct Hurwitz evaluation."""
    xr = _reduce(x)
    if p == 1:
        out = -s * (hurwitz_zeta(s + 1, xr) - hurwitz_zeta(s + 1, 1.0 - xr))
    elif p == 2:
        out = s * (s + 1) * (hurwitz_zeta(s + 2, xr) + hurwitz_zeta(s + 2, 1.0 - xr))
    else:
        raise DomainError("only derivative orders 1 and 2 are supported")
    return _scalar_or(x, out)


def _remainder_derivs(x, s):
    """Remainder r = g - x^-s - (1-x)^-s and its first three derivatives."""
    r0 = hurwitz_zeta(s, 1.0 + x) + hurwitz_zeta(s, 2.0 - x)
    r1 = -s * (hurwitz_zeta(s + 1, 1.0 + x) - hurwitz_zeta(s + 1, 2.0 - x))
    r2 = s * (s + 1) * (hurwitz_zeta(s + 2, 1.0 + x) + hurwitz_zeta(s + 2, 2.0 - x))
    r3 = -s * (s + 1) * (s + 2) * (hurwitz_zeta(s + 3, 1.0 + x) - hurwitz_zeta(s + 3, 2.0 - x))
    return r0, r1, r2, r3


@dataclass(frozen=True, eq=False)
class KernelModel:
    """Precomputed periodic Riesz kernel for one model.

    ``table`` holds the remainder and its first derivative on ``resolution + 1``
    uniform nodes of [0, 1]; ``table_deriv`` holds the second and third
    derivatives. Each of g, g', g'' is reconstructed by a cubic Hermite
    interpolant of the matching pair plus the analytic singular terms.

    ``table_half`` (rows q and its first three derivatives) serves the
    compiled energy and sampler loops: with ``e = min(x, 1-x)``,
    ``g(x) = e^-s + q(e)`` where ``q(e) = (1-e)^-s + r(e)`` is smooth on
    [0, 1/2], so a pair costs a single power evaluation.
    """

    params: ModelParams
    c_s: float
    c_s_prime: float
    table: np.ndarray = field(repr=False)
    table_deriv: np.ndarray = field(repr=False)
    table_half: np.ndarray = field(repr=False, default=None)
    em_order: int = EM_ORDER
    em_terms: int = EM_TERMS

    @property
    def s(self) -> float:
        return self.params.s

    @property
    def resolution(self) -> int:
        return self.table.shape[1] - 1

    def g(self, x):
        xr = _reduce(x)
        out = g0_table(xr, self.s, self.table[0], self.table[1])
        return _scalar_or(x, out)

    def g1(self, x):
        xr = _reduce(x)
        out = g1_table(xr, self.s, self.table[1], self.table_deriv[0])
        return _scalar_or(x, out)

    def g2(self, x):
        xr = _reduce(x)
        out = g2_table(xr, self.s, self.table_deriv[0], self.table_deriv[1])
        return _scalar_or(x, out)

    def remainder(self, x):
        """Bounded part ``g(x) - x^-s - (1-x)^-s`` from the table."""
        x = np.asarray(x, dtype=float)
        return self.g(x) - x ** -self.s - (1.0 - x) ** -self.s

    def with_params(self, params: ModelParams) -> "KernelModel":
        """Reuse the table for another (beta, n) at the same exponent s."""
        if params.s != self.s:
            raise DomainError("kernel tables can only be shared at equal s")
        return KernelModel(params, self.c_s, self.c_s_prime, self.table, self.table_deriv,
                           self.table_half)


def build_kernel_table(params: ModelParams, resolution: int = 4096) -> KernelModel:
    if resolution < 1024:
        raise DomainError("resolution must be at least 1024")
    s = params.s
    nodes = np.linspace(0.0, 1.0, resolution + 1)
    r0, r1, r2, r3 = _remainder_derivs(nodes, s)
    table = np.ascontiguousarray(np.vstack([r0, r1]))
    table_deriv = np.ascontiguousarray(np.vstack([r2, r3]))
    half = np.linspace(0.0, 0.5, resolution + 1)
    q0, q1, q2, q3 = _remainder_derivs(half, s)
    w = 1.0 - half
    q0 = q0 + w ** -s
    q1 = q1 + s * w ** (-s - 1.0)
    q2 = q2 + s * (s + 1.0) * w ** (-s - 2.0)
    q3 = q3 + s * (s + 1.0) * (s + 2.0) * w ** (-s - 3.0)
    table_half = np.ascontiguousarray(np.vstack([q0, q1, q2, q3]))
    for arr in (table, table_deriv, table_half):
        arr.setflags(write=False)
    c_s, c_s_prime = riesz_constants(s)
    return KernelModel(params, c_s, c_s_prime, table, table_deriv, table_half)


def kernel_g(x, model: KernelModel):
    return model.g(x)


def kernel_g_deriv(x, p: int, model: KernelModel):
    if p == 1:
        return model.g1(x)
    if p == 2:
        return model.g2(x)
    raise DomainError("only derivative orders 1 and 2 are supported")


