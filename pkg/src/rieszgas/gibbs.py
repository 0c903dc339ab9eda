"""Configurations, the Riesz energy and the observables of the gas.

A configuration stores positions in label order. Labels follow the circle
counter-clockwise: ``x_{i+1} - x_i mod 1`` is the i-th nearest-neighbour
spacing and the spacings sum to one. The array itself is a rotation of a
sorted array (label 0 need not be the leftmost point).

The energy is ``H_N = N^-s sum_{i != j} g(x_i - x_j)`` and the transport
conventions follow :mod:`rieszgas.transforms`: for a matched pair
``(xi, psi)`` with ``2 g' * psi = xi - int xi`` the loop-equation transport
is ``psi_beta = -psi / beta``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import pi

import numpy as np

from . import _fast
from .errors import DomainError, MismatchError, SingularityError
from .special import KernelModel
from .transforms import TestFunction, TransportMap, _irfft_coef, _periodic_spline, calibrate_multiplier

__all__ = [
    "Configuration",
    "LoopDiagnostics",
    "LoopOperator",
    "energy",
    "energy_delta",
    "gradient",
    "hessian",
    "fluct",
    "gap",
    "gaps",
    "block_average",
    "loop_term_A",
    "loop_term_B",
]

LOOP_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Configuration:
    """Point configuration on the circle in cyclic label order."""

    positions: np.ndarray

    def __post_init__(self):
        x = np.mod(np.array(self.positions, dtype=float), 1.0)
        if x.ndim != 1 or x.size < 2:
            raise DomainError("a configuration needs at least two points")
        if not _fast.all_in_order(x):
            raise DomainError("positions must be distinct and in cyclic order")
        x.setflags(write=False)
        object.__setattr__(self, "positions", x)

    @property
    def n(self) -> int:
        return self.positions.size

    @classmethod
    def lattice(cls, n: int, offset: float = 0.0) -> "Configuration":
        return cls(offset + np.arange(n) / n)

    @classmethod
    def jittered(cls, n: int, rng: np.random.Generator, amplitude: float = 0.1) -> "Configuration":
        """Equispaced lattice with uniform jitter of ``amplitude / n`` and a random offset."""
        base = np.arange(n) / n + rng.uniform(0.0, 1.0)
        return cls(base + rng.uniform(-amplitude, amplitude, n) / n)

    @classmethod
    def uniform(cls, n: int, rng: np.random.Generator) -> "Configuration":
        return cls(np.sort(rng.uniform(0.0, 1.0, n)))

    def sorted(self) -> np.ndarray:
        return np.sort(self.positions)

    def shifted(self, c: float) -> "Configuration":
        return Configuration(self.positions + c)

    def moved(self, i: int, x_new: float) -> "Configuration":
        x = self.positions.copy()
        x[i] = x_new
        return Configuration(x)

    def spacings(self) -> np.ndarray:
        """N times the nearest-neighbour spacings; they sum to N."""
        return _fast.gaps_all(self.positions, 1)


def _pos(config):
    if isinstance(config, Configuration):
        return config.positions
    return np.ascontiguousarray(config, dtype=float)


def _n_s(model: KernelModel, n: int) -> float:
    return float(n) ** (-model.s)


def energy(config, model: KernelModel) -> float:
    """``H_N = N^-s sum_{i != j} g(x_i - x_j)``."""
    x = _pos(config)
    total = _fast.pair_energy_sum(x, model.s, model.table_half[0], model.table_half[1])
    if not np.isfinite(total):
        raise SingularityError("coincident points in energy evaluation")
    return _n_s(model, x.size) * total


def energy_delta(config, i: int, x_new: float, model: KernelModel) -> float:
    """Energy change when point ``i`` moves to ``x_new``; O(N)."""
    x = _pos(config)
    delta = _fast.row_delta(x, int(i), float(np.mod(x_new, 1.0)), model.s, model.table_half[0], model.table_half[1])
    if not np.isfinite(delta):
        raise SingularityError("move collides with another point")
    return 2.0 * _n_s(model, x.size) * delta


def gradient(config, model: KernelModel) -> np.ndarray:
    """``dH/dx_i = 2 N^-s sum_{j != i} g'(x_i - x_j)``."""
    x = _pos(config)
    _check_separated(x)
    return 2.0 * _n_s(model, x.size) * _fast.pair_force_sum(x, model.s, model.table_half[1], model.table_half[2])


def hessian(config, model: KernelModel) -> np.ndarray:
    """Hessian of H_N; off-diagonal entries ``-2 N^-s g''``, rows sum to zero."""
    x = _pos(config)
    _check_separated(x)
    G2 = _fast.pair_matrix_g2(x, model.s, model.table_half[2], model.table_half[3])
    H = -2.0 * _n_s(model, x.size) * G2
    H[np.diag_indices_from(H)] = -H.sum(axis=1)
    return H


def _check_separated(x):
    d = np.mod(x[:, None] - x[None, :], 1.0)
    d = np.minimum(d, 1.0 - d)
    np.fill_diagonal(d, 1.0)
    if d.min() < 1e-9:
        raise SingularityError("points closer than the singularity tolerance")


def fluct(config, xi: TestFunction) -> float:
    """``sum_i xi(x_i) - N int xi``."""
    x = _pos(config)
    return float(np.sum(xi(x)) - x.size * xi.mean)


def gap(config, i: int, k: int) -> float:
    """``N (x_{i+k} - x_i)`` with the +1 winding when the index wraps."""
    x = _pos(config)
    n = x.size
    if not 0 <= k <= n // 2:
        raise IndexError(f"k must lie in [0, N/2], got {k}")
    d = x[(i + k) % n] - x[i % n]
    return n * (d - np.floor(d))


def gaps(config, k: int) -> np.ndarray:
    """``gap(i, k)`` for every label i."""
    x = _pos(config)
    if not 0 <= k <= x.size // 2:
        raise IndexError(f"k must lie in [0, N/2], got {k}")
    return _fast.gaps_all(x, k)


def block_average(config, i: int, k: int) -> float:
    """Mean position of labels ``i-k..i+k``, unwrapped around ``x_i``."""
    x = _pos(config)
    n = x.size
    if not 0 <= k <= n // 2:
        raise IndexError(f"k must lie in [0, N/2], got {k}")
    idx = (i + np.arange(-k, k + 1)) % n
    rel = np.mod(x[idx] - x[i] + 0.5, 1.0) - 0.5
    return float(np.mod(x[i] + rel.mean(), 1.0))


def count_in(config, center: float, half_width: float) -> int:
    """Number of points in the open arc ``(center - h, center + h)``."""
    x = _pos(config)
    d = np.abs(np.mod(x - center + 0.5, 1.0) - 0.5)
    return int(np.count_nonzero(d < half_width))


# ---------------------------------------------------------------------------
# Loop-equation terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LoopDiagnostics:
    """Loop term A computed along two paths, and the B term."""

    a_value: float
    a_pair_sum: float
    a_transport: float
    b_value: float
    b_pair: float
    b_single: float
    b_constant: float
    computed_via: str = "pair_sum"


class LoopOperator:
    """Precomputed pieces of the loop terms for one matched pair.

    ``psi`` is the canonical transport of ``xi``; the loop term uses
    ``psi_beta = -psi / beta``. The convolutions ``g' * psi`` and ``g'' * psi``,
    ``g'' * psi^2`` are tabulated spectrally on the grid of ``psi`` with
    ``g_hat(k) = c_s / mu(k)``.
    """

    def __init__(self, model: KernelModel, xi: TestFunction, psi: TransportMap):
        if psi.s != model.s:
            raise DomainError("transport map and kernel use different exponents")
        self.model = model
        self.xi = xi
        self.beta = model.params.beta
        self.psi_beta = psi.scaled(-1.0 / self.beta)
        m = psi.size
        k = np.arange(psi.coef.size)
        mult = calibrate_multiplier(model.s, m)
        ghat = np.zeros(k.size)
        ghat[1:] = model.c_s / mult(k[1:])
        self._ghat = ghat
        coef = self.psi_beta.coef
        self._conv1 = _irfft_coef(2j * pi * k * ghat * coef, m)
        self._conv2 = _irfft_coef(-(2 * pi * k) ** 2 * ghat * coef, m)
        sq = self.psi_beta.grid ** 2
        sq_hat = np.fft.rfft(sq) / m
        sq_hat[-1] *= 0.5
        self._conv2sq = _irfft_coef(-(2 * pi * k) ** 2 * ghat * sq_hat, m)
        # N^2 int H1 = 2 N^2 sum_{k != 0} (2 pi k)^2 g_hat |psi_hat|^2 (both signs of k).
        self._b_const_unit = 2.0 * 2.0 * float(np.sum((2 * pi * k) ** 2 * ghat * np.abs(coef) ** 2))
        # xi as seen by the transport (smoothed when psi is).
        if psi.smoothing is not None:
            from .transforms import triangle_hat
            xi_hat = xi.coefficients(k.size - 1) * triangle_hat(k, psi.smoothing)
            self._xi_grid = _irfft_coef(xi_hat, m)
            self._xi_mean = float(xi_hat[0].real)
        else:
            self._xi_grid = None
            self._xi_mean = xi.mean

    def _psi(self, x):
        return np.asarray(self.psi_beta(x), dtype=float)

    def conv_g1_psi(self, x):
        return _periodic_spline(self._conv1)(np.mod(x, 1.0))

    def _fluct_xi(self, x):
        if self._xi_grid is None:
            return fluct(x, self.xi)
        vals = _periodic_spline(self._xi_grid)(np.mod(x, 1.0))
        return float(vals.sum() - x.size * self._xi_mean)

    def evaluate(self, config, check: bool = True) -> LoopDiagnostics:
        x = _pos(config)
        n = x.size
        model = self.model
        _check_separated(x)
        ns = _n_s(model, n)
        pv = self._psi(x)
        a_pairs, b_pairs = _fast.pair_transport_sums(
            x, pv, model.s, model.table_half[1], model.table_half[2], model.table_half[2], model.table_half[3])
        a_pair = ns * (a_pairs + 2.0 * n * float(np.sum(self.conv_g1_psi(x))))

        grad = gradient(x, model)
        a_trans = float(grad @ pv) - n ** (1.0 - model.s) * self._fluct_xi(x) / self.beta

        if check and abs(a_pair - a_trans) > LOOP_TOL * max(1.0, abs(a_pair)):
            raise MismatchError(f"loop term paths disagree: {a_pair!r} vs {a_trans!r}")

        xm = np.mod(x, 1.0)
        h1 = (-2.0 * pv * _periodic_spline(self._conv2)(xm)
              + _periodic_spline(self._conv2sq)(xm))
        b_pair = ns * b_pairs
        b_single = -ns * 2.0 * n * float(np.sum(h1))
        b_const = ns * n * n * self._b_const_unit
        return LoopDiagnostics(a_pair, a_pair, a_trans, b_pair + b_single + b_const,
                               b_pair, b_single, b_const)


def loop_term_A(config, xi: TestFunction, psi: TransportMap, model: KernelModel) -> LoopDiagnostics:
    """Loop term ``A[psi_beta]`` by the pair-sum and transport-identity paths."""
    return LoopOperator(model, xi, psi).evaluate(config)


def loop_term_B(config, xi: TestFunction, psi: TransportMap, model: KernelModel) -> float:
    """``B[psi_beta] = N^-s iint_{off-diagonal} g''(x-y) (psi(x)-psi(y))^2 dfluct dfluct``."""
    return LoopOperator(model, xi, psi).evaluate(config, check=False).b_value
