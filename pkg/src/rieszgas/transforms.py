"""Mean-field transport maps psi built from test-functions xi.

Conventions. The circle is T = [0, 1) and Fourier coefficients are taken in
the basis e_k(x) = exp(2 pi i k x). The fractional Laplacian
``(-Delta)^((1-s)/2)`` acts on e_k with eigenvalue ``mu(k)``; it is measured
by :func:`calibrate_multiplier` from the real-space singular-integral form
and equals ``(2 pi |k|)^(1-s)``.

The canonical (beta-free) transport of xi is the mean-zero solution of

    2 g' * psi = xi - int xi,   i.e.   psi' = (1 / (2 c_s)) (-Delta)^((1-s)/2) xi,

so that the asymptotic variance of the linear statistic is
``sigma^2 = -(1/beta) int xi' psi``. The transport entering the loop
equation is ``psi_beta = -psi / beta``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import cos, gamma, pi, sin, tan

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .errors import (
    CalibrationError,
    DomainError,
    QuadratureError,
    ResolutionError,
    SingularityError,
    UnresolvedSingularityError,
)
from .special import SINGULAR_TOL, KernelModel, hurwitz_zeta, hurwitz_zeta_scalar, riesz_constants

__all__ = [
    "TestFunction",
    "TransportMap",
    "Multiplier",
    "calibrate_multiplier",
    "riesz_inverse_pointwise",
    "riesz_inverse_spectral",
    "psi_closed_indicator",
    "psi_closed_power",
    "psi_closed_indicator_deriv",
    "smooth",
    "sigma_xi_squared",
    "sigma_xi_squared_spectral",
    "sobolev_seminorm",
    "regularization_width",
    "DEFAULT_GRID",
]

DEFAULT_GRID = 8192
CALIBRATION_MODES = 8
CALIBRATION_TOL = 1e-6
TAIL_ENERGY_TOL = 0.01
# Below this many nonzero modes a transport map is evaluated by direct
# trigonometric summation instead of the grid spline.
_DIRECT_SUM_MODES = 64


def _centered(x):
    """Reduce to [-1/2, 1/2)."""
    return np.mod(np.asarray(x, dtype=float) + 0.5, 1.0) - 0.5


# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TestFunction:
    """A test-function on the circle, possibly rescaled by ``scale``.

    ``params`` holds the kind-specific parameter: the half-width ``a`` for
    ``indicator`` (support ``(-a*scale, a*scale)``), the exponent ``alpha``
    for ``power`` (``zeta(alpha, x) + zeta(alpha, 1 - x)``), the mode ``m``
    for ``cosine`` and the sample array for ``grid``.

    ``singularities`` lists ``(location, blowup)`` pairs, where ``blowup`` is
    the exponent gamma of ``|xi| ~ |x - a|^-gamma`` (0 for a jump). The
    matching order of the singularity of psi'' is returned by
    :meth:`singularity_orders`.
    """

    __test__ = False  # not a pytest class

    kind: str
    params: object
    scale: float = 1.0
    singularities: tuple = ()
    mean: float = 0.0
    label: str = ""

    # -- constructors ------------------------------------------------------

    @classmethod
    def indicator(cls, a: float, scale: float = 1.0) -> "TestFunction":
        if not 0.0 < a < 0.5:
            raise DomainError(f"indicator half-width must lie in (0, 1/2), got {a}")
        if not 0.0 < scale <= 1.0:
            raise DomainError(f"scale must lie in (0, 1], got {scale}")
        h = a * scale
        return cls("indicator", float(a), float(scale), ((-h, 0.0), (h, 0.0)), 2.0 * h,
                   f"indicator(a={a:g},scale={scale:g})")

    @classmethod
    def cosine(cls, m: int = 1) -> "TestFunction":
        if int(m) != m or m < 1:
            raise DomainError(f"cosine mode must be a positive integer, got {m}")
        return cls("cosine", int(m), 1.0, (), 0.0, f"cosine(m={int(m)})")

    @classmethod
    def power(cls, alpha: float) -> "TestFunction":
        if not 0.0 < alpha < 1.0:
            raise DomainError(f"power exponent must lie in (0, 1), got {alpha}")
        return cls("power", float(alpha), 1.0, ((0.0, float(alpha)),), 0.0,
                   f"power(alpha={alpha:g})")

    @classmethod
    def from_grid(cls, values) -> "TestFunction":
        v = np.array(values, dtype=float)
        if v.ndim != 1 or v.size < 16 or not np.all(np.isfinite(v)):
            raise DomainError("grid test-function needs a finite 1-d array of >= 16 samples")
        v.setflags(write=False)
        return cls("grid", v, 1.0, (), float(v.mean()), f"grid(n={v.size})")

    # -- evaluation --------------------------------------------------------

    @property
    def half_width(self) -> float:
        if self.kind != "indicator":
            raise DomainError("half_width is only defined for indicators")
        return self.params * self.scale

    def singularity_orders(self, s: float) -> list[tuple[float, float]]:
        """``(a_l, alpha_l)`` with ``|psi''| ~ |x - a_l|^-(1 + alpha_l)``."""
        out = []
        for loc, blowup in self.singularities:
            order = 1.0 - s + blowup
            if order >= 1.0 - s / 2.0:
                raise DomainError(
                    f"singularity at {loc} has order {order:.3g} >= 1 - s/2; variance is not finite")
            out.append((loc, order))
        return out

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "indicator":
            out = (np.abs(_centered(x)) < self.half_width).astype(float)
        elif self.kind == "cosine":
            out = np.cos(2.0 * pi * self.params * x)
        elif self.kind == "power":
            xr = np.mod(x, 1.0)
            if np.any(np.minimum(xr, 1.0 - xr) < SINGULAR_TOL):
                raise SingularityError("power test-function evaluated at its singularity")
            out = hurwitz_zeta(self.params, xr) + hurwitz_zeta(self.params, 1.0 - xr)
        else:
            out = self._grid_spline()(np.mod(x, 1.0))
        out = np.asarray(out, dtype=float)
        return float(out) if out.ndim == 0 else out

    def derivative(self, x):
        """Classical derivative (smooth kinds only)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "cosine":
            m = self.params
            out = -2.0 * pi * m * np.sin(2.0 * pi * m * x)
        elif self.kind == "grid":
            out = self._grid_spline()(np.mod(x, 1.0), 1)
        else:
            raise DomainError(f"{self.kind} test-functions have no classical derivative")
        return float(out) if out.ndim == 0 else out

    def _grid_spline(self):
        return _periodic_spline(self.params)

    # -- spectrum ----------------------------------------------------------

    def coefficients(self, kmax: int) -> np.ndarray:
        """Complex Fourier coefficients ``xi_hat(k)`` for ``k = 0..kmax``."""
        k = np.arange(kmax + 1, dtype=float)
        out = np.zeros(kmax + 1, dtype=complex)
        if self.kind == "indicator":
            h = self.half_width
            out[0] = 2.0 * h
            out[1:] = np.sin(2.0 * pi * k[1:] * h) / (pi * k[1:])
        elif self.kind == "cosine":
            if self.params <= kmax:
                out[self.params] = 0.5
        elif self.kind == "power":
            a = self.params
            out[1:] = 2.0 * gamma(1.0 - a) * sin(pi * a / 2.0) * (2.0 * pi * k[1:]) ** (a - 1.0)
        else:
            v = self.params
            full = np.fft.rfft(v) / v.size
            n = min(kmax + 1, full.size)
            out[:n] = full[:n]
            if v.size % 2 == 0 and n == full.size:
                out[n - 1] *= 0.5  # split the Nyquist mode evenly between +-k
        return out

    def tail_law(self):
        """``(A, p)`` such that ``|xi_hat(k)|^2`` averages to ``A k^-p`` for large k.

        ``None`` when the spectrum is finite (cosine) or unknown (grid).
        """
        if self.kind == "indicator":
            return 1.0 / (2.0 * pi * pi), 2.0
        if self.kind == "power":
            a = self.params
            c = 2.0 * gamma(1.0 - a) * sin(pi * a / 2.0) * (2.0 * pi) ** (a - 1.0)
            return c * c, 2.0 - 2.0 * a
        return None


@lru_cache(maxsize=16)
def _periodic_spline_cached(key, n):
    v = np.frombuffer(key, dtype=float, count=n)
    x = np.arange(n + 1) / n
    return CubicSpline(x, np.append(v, v[0]), bc_type="periodic")


def _periodic_spline(v):
    return _periodic_spline_cached(v.tobytes(), v.size)


# ---------------------------------------------------------------------------
# Multiplier calibration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Multiplier:
    """Eigenvalues ``mu(k)`` of ``(-Delta)^((1-s)/2)`` on the modes e_k."""

    s: float
    mu1: float
    exponent: float
    fitted_exponent: float
    residual: float
    measured: tuple = field(repr=False)

    def __call__(self, k):
        k = np.abs(np.asarray(k, dtype=float))
        return self.mu1 * k ** self.exponent


def _apply_singular_integral(m: int, s: float, c_s_prime: float) -> float:
    """Real-space operator applied to cos(2 pi m x), evaluated at x = 0.

    The periodized kernel ``zeta(2-s, u) + zeta(2-s, 1-u)`` is split into its
    ``u^(s-2)`` singular part, integrated against an algebraic weight, and a
    smooth remainder. The integrand is symmetric about 1/2.
    """
    opts = dict(epsabs=1e-15, epsrel=1e-13, limit=400, full_output=1)
    sing = quad(lambda u: 2.0 * pi * pi * m * m * np.sinc(m * u) ** 2, 0.0, 0.5,
                weight="alg", wvar=(s, 0.0), **opts)
    smooth_part = quad(
        lambda u: (1.0 - np.cos(2.0 * pi * m * u))
        * (hurwitz_zeta(2.0 - s, 1.0 + u) + hurwitz_zeta(2.0 - s, 1.0 - u)),
        0.0, 0.5, **opts)
    for res in (sing, smooth_part):
        if len(res) > 3:
            raise CalibrationError(f"quadrature failed while calibrating mode {m}: {res[3]}")
    return 2.0 * c_s_prime * (sing[0] + smooth_part[0])


@lru_cache(maxsize=32)
def _calibrate(s: float) -> Multiplier:
    _, c_s_prime = riesz_constants(s)
    modes = np.arange(1, CALIBRATION_MODES + 1)
    mu = np.array([_apply_singular_integral(int(m), s, c_s_prime) for m in modes])
    slope, intercept = np.polyfit(np.log(modes), np.log(mu), 1)
    model = mu[0] * modes ** (1.0 - s)
    residual = float(np.max(np.abs(mu - model) / mu))
    if residual > CALIBRATION_TOL or not np.all(mu > 0):
        raise CalibrationError(f"power-law fit residual {residual:.3g} exceeds {CALIBRATION_TOL}")
    return Multiplier(s, float(mu[0]), 1.0 - s, float(slope), residual,
                      tuple(zip(modes.tolist(), mu.tolist())))


def calibrate_multiplier(model: KernelModel | float, grid_size: int = DEFAULT_GRID) -> Multiplier:
    """Measure the fractional-Laplacian multiplier from its real-space form.

    The singular integral is applied to cos(2 pi m x) for m = 1..8; the
    eigenvalues are fitted by ``mu(1) k^(1-s)`` and the fit residual must
    stay below 1e-6. ``grid_size`` only validates the intended resolution.
    """
    if grid_size < 1024:
        raise DomainError("grid_size must be at least 1024")
    s = model.s if isinstance(model, KernelModel) else float(model)
    if not 0.0 < s < 1.0:
        raise DomainError(f"s must lie in (0, 1), got {s}")
    return _calibrate(s)


# ---------------------------------------------------------------------------
# Transport maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TransportMap:
    """Transport ``psi`` paired with its source test-function.

    ``coef`` stores ``psi_hat(k)`` for ``k = 0..M/2``; ``grid`` stores psi on
    the M uniform nodes ``j / M``. ``smoothing`` is the half-width of the
    triangular kernel already applied, if any.
    """

    source: TestFunction
    s: float
    coef: np.ndarray = field(repr=False)
    grid: np.ndarray = field(repr=False)
    closed_form: str | None = None
    smoothing: float | None = None

    @property
    def size(self) -> int:
        return self.grid.size

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.size) / self.size

    def _nonzero_modes(self):
        return np.flatnonzero(np.abs(self.coef[1:]) > 0.0) + 1

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.smoothing is None and self.closed_form == "indicator":
            out = psi_closed_indicator(self.source.half_width, self.s, x)
        elif self.smoothing is None and self.closed_form == "power":
            out = psi_closed_power(self.source.params, self.s, x)
        else:
            out = self._spectral_eval(x, 0)
        return float(out) if np.ndim(out) == 0 else out

    def derivative(self, x, order: int = 1):
        """``psi^(order)(x)`` by the spectral representation (order 1 or 2)."""
        if order not in (1, 2):
            raise DomainError("only derivative orders 1 and 2 are supported")
        out = self._spectral_eval(np.asarray(x, dtype=float), order)
        return float(out) if np.ndim(out) == 0 else out

    def derivative_grid(self, order: int = 1) -> np.ndarray:
        k = np.arange(self.coef.size)
        return _irfft_coef(self.coef * (2j * pi * k) ** order, self.size)

    def _spectral_eval(self, x, order):
        modes = self._nonzero_modes()
        if modes.size <= _DIRECT_SUM_MODES:
            c = self.coef[modes] * (2j * pi * modes) ** order
            phase = np.exp(2j * pi * np.multiply.outer(x, modes))
            out = 2.0 * np.real(phase @ c)
            if order == 0:
                out = out + self.coef[0].real
            return out
        values = self.grid if order == 0 else self.derivative_grid(order)
        return _periodic_spline(np.ascontiguousarray(values))(np.mod(x, 1.0))

    def scaled(self, factor: float) -> "TransportMap":
        """The map ``factor * psi`` (same source)."""
        return TransportMap(self.source, self.s, self.coef * factor, self.grid * factor,
                            None if factor != 1.0 else self.closed_form, self.smoothing)


def _irfft_coef(coef, m):
    """Inverse of ``coefficients``: values on m nodes from psi_hat(0..m/2)."""
    full = np.array(coef, dtype=complex)
    if m % 2 == 0 and full.size == m // 2 + 1:
        full[-1] *= 2.0
    return np.fft.irfft(full * m, n=m)


def _psi_hat(xi_hat, mult: Multiplier, c_s: float):
    k = np.arange(xi_hat.size)
    out = np.zeros_like(xi_hat)
    out[1:] = mult(k[1:]) * xi_hat[1:] / (2.0 * c_s * 2j * pi * k[1:])
    return out


def riesz_inverse_spectral(xi: TestFunction, grid_size: int = DEFAULT_GRID, *,
                           s: float | None = None, model: KernelModel | None = None
                           ) -> TransportMap:
    """Transport map by the calibrated spectral multiplier.

    Each mode is multiplied by ``mu(k) / (2 c_s * 2 pi i k)`` and the mean
    mode is dropped. Raises :class:`UnresolvedSingularityError` when more
    than 1% of the spectral energy of xi sits in the top octave of the grid.
    """
    s = _resolve_s(s, model)
    if grid_size < 1024 or grid_size & (grid_size - 1):
        raise DomainError("grid_size must be a power of two >= 1024")
    mult = calibrate_multiplier(s, grid_size)
    c_s, _ = riesz_constants(s)
    kmax = grid_size // 2
    xi_hat = xi.coefficients(kmax)
    energy = np.abs(xi_hat[1:]) ** 2
    total = energy.sum()
    if total > 0.0 and energy[kmax // 2:].sum() > TAIL_ENERGY_TOL * total:
        raise UnresolvedSingularityError(
            f"{xi.label}: top-octave spectral energy fraction "
            f"{energy[kmax // 2:].sum() / total:.3g} exceeds {TAIL_ENERGY_TOL}")
    coef = _psi_hat(xi_hat, mult, c_s)
    closed = xi.kind if xi.kind in ("indicator", "power") else None
    return TransportMap(xi, s, coef, _irfft_coef(coef, grid_size), closed, None)


def _resolve_s(s, model):
    if model is not None:
        return model.s
    if s is None:
        raise DomainError("either s or model must be given")
    if not 0.0 < s < 1.0:
        raise DomainError(f"s must lie in (0, 1), got {s}")
    return float(s)


def _odd_kernel(u, s):
    """Bounded part of ``zeta(1-s, u) - zeta(1-s, 1-u)`` on (0, 1)."""
    return hurwitz_zeta_scalar(1.0 - s, 1.0 + u) - hurwitz_zeta_scalar(1.0 - s, 2.0 - u)


def riesz_inverse_pointwise(xi: TestFunction, x, *, s: float | None = None,
                            model: KernelModel | None = None) -> float:
    """``psi(x)`` by adaptive quadrature of the real-space inversion formula.

    ``psi(x) = P * int (xi(y) - int xi) K(x - y) dy`` with the odd kernel
    ``K(u) = zeta(1-s, {u}) - zeta(1-s, 1-{u})`` and
    ``P = 1 / (4 pi tan(pi s / 2))``. The integration variable is split at
    the singularities of xi; the algebraic endpoint singularities of the
    kernel and of xi are absorbed into quadrature weights.
    """
    s = _resolve_s(s, model)
    if np.ndim(x) > 0:
        flat = [riesz_inverse_pointwise(xi, xv, s=s) for xv in np.ravel(x)]
        return np.array(flat).reshape(np.shape(x))
    x = float(x)
    pref = 1.0 / (4.0 * pi * tan(pi * s / 2.0))

    # y = x + u with u in (0, 1):  psi(x) = -P int_0^1 (xi(x+u) - m) K(u) du.
    blowups = {}
    for loc, blowup in xi.singularities:
        u0 = float(np.mod(loc - x, 1.0))
        if min(u0, 1.0 - u0) < 1e-12:
            raise SingularityError("pointwise inversion evaluated at a singularity of xi")
        if blowup > 0.0 and xi.kind != "power":
            raise DomainError("unbounded singularities are only supported for the power kind")
        blowups[u0] = blowup
    pts = [0.0] + sorted(blowups) + [1.0]
    opts = dict(epsabs=1e-13, epsrel=1e-11, limit=500, full_output=1)

    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        k_left, k_right = lo == 0.0, hi == 1.0
        x_left = 0.0 if k_left else blowups[lo]
        x_right = 0.0 if k_right else blowups[hi]
        wl = s - 1.0 if k_left else -x_left
        wr = s - 1.0 if k_right else -x_right
        span = hi - lo

        def integrand(u, lo=lo, hi=hi, k_left=k_left, k_right=k_right,
                      x_left=x_left, x_right=x_right, span=span):
            # Stay strictly inside (lo, hi): xi may jump at the ends.
            u = min(max(u, lo + 1e-14 * span), hi - 1e-14 * span)
            r = _odd_kernel(u, s)
            if k_left and k_right:
                kern = (1.0 - u) ** (1.0 - s) - u ** (1.0 - s) + r * (u * (1.0 - u)) ** (1.0 - s)
            elif k_left:
                kern = 1.0 + u ** (1.0 - s) * (r - (1.0 - u) ** (s - 1.0))
            elif k_right:
                kern = (1.0 - u) ** (1.0 - s) * (u ** (s - 1.0) + r) - 1.0
            else:
                kern = u ** (s - 1.0) - (1.0 - u) ** (s - 1.0) + r
            if x_left > 0.0:
                d = u - lo
                val = _power_regular(xi.params, d) - xi.mean * d ** x_left
            elif x_right > 0.0:
                d = hi - u
                val = _power_regular(xi.params, d) - xi.mean * d ** x_right
            else:
                val = xi(x + u) - xi.mean
            return val * kern

        if wl == 0.0 and wr == 0.0:
            res = quad(integrand, lo, hi, **opts)
        else:
            res = quad(integrand, lo, hi, weight="alg", wvar=(wl, wr), **opts)
        if len(res) > 3 and "roundoff" not in str(res[3]):
            raise QuadratureError(f"pointwise inversion at x={x}: {res[3]}")
        total += res[0]
    return -pref * total


def _power_regular(alpha, d):
    """``d^alpha (zeta(alpha, d) + zeta(alpha, 1 - d))`` evaluated stably near d = 0."""
    return 1.0 + d ** alpha * (hurwitz_zeta_scalar(alpha, 1.0 + d) + hurwitz_zeta_scalar(alpha, 1.0 - d))


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def _even_zeta(w, u):
    """``zeta(w, {u}) + zeta(w, 1 - {u})`` for w in (-1, 0), continuous at u = 0."""
    ur = np.mod(np.asarray(u, dtype=float), 1.0)
    ur = np.where(ur >= 1.0, 0.0, ur)
    safe = np.where(ur == 0.0, 0.5, ur)
    val = hurwitz_zeta(w, safe) + hurwitz_zeta(w, 1.0 - safe)
    # zeta(w, 0+) = zeta(w, 1) when w < 0.
    return np.where(ur == 0.0, 2.0 * hurwitz_zeta(w, 1.0), val)


def _odd_zeta(w, u):
    """``zeta(w, {u}) - zeta(w, 1 - {u})`` for w in (-1, 0), zero at u = 0."""
    ur = np.mod(np.asarray(u, dtype=float), 1.0)
    safe = np.where(ur == 0.0, 0.5, ur)
    val = hurwitz_zeta(w, safe) - hurwitz_zeta(w, 1.0 - safe)
    return np.where(ur == 0.0, 0.0, val)


def _indicator_prefactor(s):
    return 1.0 / (tan(pi * s / 2.0) * 4.0 * pi * s)


def psi_closed_indicator(a: float, s: float, x):
    """Transport of ``1_(-a, a)`` in closed form.

    ``psi(x) = cot(pi s / 2) / (4 pi s) * (G(x + a) - G(x - a))`` with
    ``G(u) = zeta(-s, {u}) + zeta(-s, 1 - {u})``. Odd about 0.
    """
    if not 0.0 < a < 0.5:
        raise DomainError(f"half-width must lie in (0, 1/2), got {a}")
    x = np.asarray(x, dtype=float)
    for b in (a, -a):
        d = np.mod(x - b, 1.0)
        if np.any(np.minimum(d, 1.0 - d) < SINGULAR_TOL):
            raise SingularityError("indicator transport evaluated at the support boundary")
    out = _indicator_prefactor(s) * (_even_zeta(-s, x + a) - _even_zeta(-s, x - a))
    return float(out) if out.ndim == 0 else out


def psi_closed_indicator_deriv(a: float, s: float, x):
    """Derivative of :func:`psi_closed_indicator`."""
    x = np.asarray(x, dtype=float)

    def dG(u):
        ur = np.mod(u, 1.0)
        if np.any(np.minimum(ur, 1.0 - ur) < SINGULAR_TOL):
            raise SingularityError("indicator transport derivative at the support boundary")
        return s * (hurwitz_zeta(1.0 - s, ur) - hurwitz_zeta(1.0 - s, 1.0 - ur))

    out = _indicator_prefactor(s) * (dG(x + a) - dG(x - a))
    return float(out) if out.ndim == 0 else out


def indicator_boundary_jump(a: float, s: float) -> float:
    """``psi(a) - psi(-a)`` for the indicator transport (psi is continuous there)."""
    g0 = 2.0 * hurwitz_zeta(-s, 1.0)
    return 2.0 * _indicator_prefactor(s) * (float(_even_zeta(-s, 2.0 * a)) - g0)


def _power_prefactor(alpha, s):
    c_s = 2.0 * gamma(1.0 - s) * sin(pi * s / 2.0)
    return (gamma(1.0 - alpha) * sin(pi * alpha / 2.0)
            / (2.0 * c_s * gamma(1.0 + s - alpha) * cos(pi * (s - alpha) / 2.0)))


def psi_closed_power(alpha: float, s: float, x):
    """Transport of ``zeta(alpha, x) + zeta(alpha, 1 - x)`` in closed form.

    ``psi(x) = C (zeta(alpha - s, x) - zeta(alpha - s, 1 - x))`` with
    ``C = Gamma(1-alpha) sin(pi alpha/2) / (2 c_s Gamma(1+s-alpha) cos(pi (s-alpha)/2))``.
    The map is odd about 0 (and about 1/2).
    """
    if not 0.0 < alpha < s:
        raise DomainError(f"alpha must lie in (0, s), got {alpha}")
    x = np.asarray(x, dtype=float)
    xr = np.mod(x, 1.0)
    if np.any(np.minimum(xr, 1.0 - xr) < SINGULAR_TOL):
        raise SingularityError("power transport evaluated at its singularity")
    out = _power_prefactor(alpha, s) * _odd_zeta(alpha - s, xr)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Smoothing, seminorms and variances
# ---------------------------------------------------------------------------


def triangle_hat(k, ell: float):
    """Fourier coefficients of the unit-mass triangular kernel on [-ell, ell]."""
    return np.sinc(np.asarray(k, dtype=float) * ell) ** 2


def smooth(psi: TransportMap, ell: float) -> TransportMap:
    """Convolve psi with the triangular kernel ``K_ell`` of half-width ell."""
    if not 0.0 < ell < 1.0:
        raise DomainError(f"ell must lie in (0, 1), got {ell}")
    if ell <= 2.0 / psi.size:
        raise ResolutionError(f"ell={ell:g} is not resolved by a grid of {psi.size} points")
    k = np.arange(psi.coef.size)
    coef = psi.coef * triangle_hat(k, ell)
    return TransportMap(psi.source, psi.s, coef, _irfft_coef(coef, psi.size), psi.closed_form, ell)


def regularization_width(n: int, scale: float = 1.0, eps: float = 0.1) -> float:
    """Pre-smoothing width ``scale / (n scale)^(1-eps)`` for singular statistics."""
    return scale / (n * scale) ** (1.0 - eps)


def sobolev_seminorm(xi: TestFunction, order: float, kmax: int = DEFAULT_GRID // 2) -> float:
    """``sum_{k != 0} (2 pi |k|)^(2 order) |xi_hat(k)|^2``.

    With ``order = (1-s)/2`` this is the calibrated multiplier applied to xi.
    When the coefficients follow a known power law past ``kmax`` the tail is
    added through a Hurwitz zeta sum.
    """
    if order < 0:
        raise DomainError("order must be nonnegative")
    xi_hat = xi.coefficients(kmax)
    k = np.arange(1, kmax + 1, dtype=float)
    body = 2.0 * np.sum((2.0 * pi * k) ** (2.0 * order) * np.abs(xi_hat[1:]) ** 2)
    law = xi.tail_law()
    if law is not None:
        amp, p = law
        expo = p - 2.0 * order
        if expo <= 1.0:
            raise DomainError(f"seminorm of order {order} diverges for {xi.label}")
        body += 2.0 * amp * (2.0 * pi) ** (2.0 * order) * hurwitz_zeta(expo, kmax + 1.0)
    return float(body)


def sigma_xi_squared_spectral(xi: TestFunction, s: float, beta: float,
                              kmax: int = DEFAULT_GRID // 2) -> float:
    """``sigma^2 = |xi|^2_{H^((1-s)/2)} / (2 beta c_s)`` from the spectrum."""
    c_s, _ = riesz_constants(s)
    mult = calibrate_multiplier(s)
    scale = mult.mu1 / (2.0 * pi) ** (1.0 - s)
    return scale * sobolev_seminorm(xi, (1.0 - s) / 2.0, kmax) / (2.0 * beta * c_s)


def sigma_xi_squared(xi: TestFunction, psi: TransportMap, beta: float) -> float:
    """Asymptotic variance ``-(1/beta) int xi' psi``.

    Indicators use the boundary values ``(psi(a) - psi(-a)) / beta``; smooth
    kinds integrate ``xi' psi`` on the grid (trapezoid, spectrally accurate
    for periodic integrands); the power kind uses the spectral sum.
    """
    if beta <= 0:
        raise DomainError("beta must be positive")
    if xi.kind == "indicator":
        if psi.smoothing is None and psi.closed_form == "indicator":
            jump = indicator_boundary_jump(xi.half_width, psi.s)
        else:
            h = xi.half_width
            jump = float(psi(h) - psi(-h))
        return jump / beta
    if xi.kind == "power":
        return sigma_xi_squared_spectral(xi, psi.s, beta)
    nodes = psi.nodes
    dxi = xi.derivative(nodes)
    return float(-np.mean(dxi * psi.grid) / beta)
