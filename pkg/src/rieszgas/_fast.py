"""Compiled inner loops: kernel table lookup and MCMC moves.

Everything here works on plain arrays so that it can be jitted with numba.
Positions are kept in label order; the cyclic order of labels never changes
(moves leaving the ordered set D_N are rejected).
"""
import numpy as np
from numba import njit

_NUMBA_OPTS = dict(cache=True, nogil=True, fastmath=False)


@njit(inline="always", **_NUMBA_OPTS)
def _hermite(x, f, m):
    n = f.shape[0] - 1
    t = x * n
    j = int(t)
    if j >= n:
        j = n - 1
    u = t - j
    h = 1.0 / n
    u2 = u * u
    u3 = u2 * u
    return ((2.0 * u3 - 3.0 * u2 + 1.0) * f[j] + (u3 - 2.0 * u2 + u) * h * m[j]
            + (-2.0 * u3 + 3.0 * u2) * f[j + 1] + (u3 - u2) * h * m[j + 1])


@njit(inline="always", **_NUMBA_OPTS)
def g_scalar(d, s, r0, r1):
    return d ** -s + (1.0 - d) ** -s + _hermite(d, r0, r1)


@njit(inline="always", **_NUMBA_OPTS)
def g1_scalar(d, s, r1, r2):
    return -s * d ** (-s - 1.0) + s * (1.0 - d) ** (-s - 1.0) + _hermite(d, r1, r2)


@njit(inline="always", **_NUMBA_OPTS)
def g2_scalar(d, s, r2, r3):
    return s * (s + 1.0) * (d ** (-s - 2.0) + (1.0 - d) ** (-s - 2.0)) + _hermite(d, r2, r3)


@njit(inline="always", **_NUMBA_OPTS)
def _hermite_half(e, f, m):
    """Cubic Hermite interpolation on a uniform grid of [0, 1/2]."""
    n = f.shape[0] - 1
    t = 2.0 * e * n
    j = int(t)
    if j >= n:
        j = n - 1
    u = t - j
    h = 0.5 / n
    u2 = u * u
    u3 = u2 * u
    return ((2.0 * u3 - 3.0 * u2 + 1.0) * f[j] + (u3 - 2.0 * u2 + u) * h * m[j]
            + (-2.0 * u3 + 3.0 * u2) * f[j + 1] + (u3 - u2) * h * m[j + 1])


@njit(inline="always", **_NUMBA_OPTS)
def _neg_pow(e, s):
    if s == 0.5:
        return 1.0 / np.sqrt(e)
    return e ** -s


# Fast path: with e = min(d, 1 - d), g(d) = e^-s + q(e) where q is smooth on
# [0, 1/2]; only one power is evaluated per pair.

@njit(inline="always", **_NUMBA_OPTS)
def gq(d, s, q0, q1):
    e = d if d <= 0.5 else 1.0 - d
    return _neg_pow(e, s) + _hermite_half(e, q0, q1)


@njit(inline="always", **_NUMBA_OPTS)
def g1q(d, s, q1, q2):
    if d <= 0.5:
        return -s * _neg_pow(d, s) / d + _hermite_half(d, q1, q2)
    e = 1.0 - d
    return s * _neg_pow(e, s) / e - _hermite_half(e, q1, q2)


@njit(inline="always", **_NUMBA_OPTS)
def g2q(d, s, q2, q3):
    e = d if d <= 0.5 else 1.0 - d
    return s * (s + 1.0) * _neg_pow(e, s) / (e * e) + _hermite_half(e, q2, q3)


@njit(**_NUMBA_OPTS)
def _table_map(x, s, a, b, which):
    flat = x.ravel()
    out = np.empty(flat.shape[0])
    for k in range(flat.shape[0]):
        if which == 0:
            out[k] = g_scalar(flat[k], s, a, b)
        elif which == 1:
            out[k] = g1_scalar(flat[k], s, a, b)
        else:
            out[k] = g2_scalar(flat[k], s, a, b)
    return out.reshape(x.shape)


def g0_table(x, s, r0, r1):
    x = np.asarray(x, dtype=np.float64)
    return _table_map(np.ascontiguousarray(x), s, r0, r1, 0).reshape(x.shape)


def g1_table(x, s, r1, r2):
    x = np.asarray(x, dtype=np.float64)
    return _table_map(np.ascontiguousarray(x), s, r1, r2, 1).reshape(x.shape)


def g2_table(x, s, r2, r3):
    x = np.asarray(x, dtype=np.float64)
    return _table_map(np.ascontiguousarray(x), s, r2, r3, 2).reshape(x.shape)


MIN_SEPARATION = 1e-12


@njit(**_NUMBA_OPTS)
def pair_matrix(pos, s, q0, q1):
    """Symmetric matrix of g(x_i - x_j) with zero diagonal."""
    n = pos.shape[0]
    G = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = pos[i] - pos[j]
            d -= np.floor(d)
            v = gq(d, s, q0, q1)
            G[i, j] = v
            G[j, i] = v
    return G


@njit(**_NUMBA_OPTS)
def pair_energy_sum(pos, s, q0, q1):
    """Sum over ordered pairs i != j of g(x_i - x_j); +inf on collision."""
    n = pos.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            d = pos[i] - pos[j]
            d -= np.floor(d)
            if d < MIN_SEPARATION or 1.0 - d < MIN_SEPARATION:
                return np.inf
            total += gq(d, s, q0, q1)
    return 2.0 * total


@njit(**_NUMBA_OPTS)
def pair_force_sum(pos, s, q1, q2):
    """Vector sum_j g'(x_i - x_j) for each i."""
    n = pos.shape[0]
    out = np.zeros(n)
    for i in range(n):
        for j in range(i + 1, n):
            d = pos[i] - pos[j]
            d -= np.floor(d)
            v = g1q(d, s, q1, q2)
            out[i] += v
            out[j] -= v
    return out


@njit(**_NUMBA_OPTS)
def row_delta(pos, i, x_new, s, q0, q1):
    """sum_j [g(x_new - x_j) - g(x_i - x_j)] over j != i; +inf on collision."""
    n = pos.shape[0]
    total = 0.0
    xo = pos[i]
    for j in range(n):
        if j == i:
            continue
        d = x_new - pos[j]
        d -= np.floor(d)
        if d < MIN_SEPARATION or 1.0 - d < MIN_SEPARATION:
            return np.inf
        e = xo - pos[j]
        e -= np.floor(e)
        total += gq(d, s, q0, q1) - gq(e, s, q0, q1)
    return total


@njit(**_NUMBA_OPTS)
def in_cyclic_slot(pos, i, x_new):
    """True iff x_new lies strictly between the cyclic neighbours of label i."""
    n = pos.shape[0]
    prev = pos[(i - 1) % n]
    nxt = pos[(i + 1) % n]
    span = nxt - prev
    span -= np.floor(span)
    if n == 2 or span == 0.0:
        span = 1.0
    off = x_new - prev
    off -= np.floor(off)
    return MIN_SEPARATION < off < span - MIN_SEPARATION


@njit(**_NUMBA_OPTS)
def _single_site(pos, G, i, u_prop, u_acc, step_over_n, scale, s, q0, q1, newrow):
    n = pos.shape[0]
    x_new = pos[i] + (2.0 * u_prop - 1.0) * step_over_n
    x_new -= np.floor(x_new)
    if not in_cyclic_slot(pos, i, x_new):
        return 0
    diff = 0.0
    for j in range(n):
        if j == i:
            newrow[j] = 0.0
            continue
        d = x_new - pos[j]
        d -= np.floor(d)
        v = gq(d, s, q0, q1)
        newrow[j] = v
        diff += v - G[i, j]
    log_ratio = -scale * diff
    if log_ratio >= 0.0 or u_acc < np.exp(log_ratio):
        pos[i] = x_new
        for j in range(n):
            G[i, j] = newrow[j]
            G[j, i] = newrow[j]
        return 1
    return 0


@njit(**_NUMBA_OPTS)
def rwm_sweep_kernel(pos, G, order, u_prop, u_acc, step_over_n, scale, s, q0, q1, newrow):
    """One random-scan Metropolis sweep with cached pair matrix ``G``.

    ``scale`` is beta * 2 * N^-s, so that the log acceptance ratio of moving
    label i is ``-scale * (sum_j g(x_new - x_j) - sum_j g(x_i - x_j))``.
    Returns the number of accepted moves.
    """
    n = pos.shape[0]
    accepted = 0
    for k in range(n):
        accepted += _single_site(pos, G, order[k], u_prop[k], u_acc[k],
                                 step_over_n, scale, s, q0, q1, newrow)
    return accepted


@njit(**_NUMBA_OPTS)
def all_in_order(pos):
    """Cyclic order check: consecutive labels advance and wind exactly once."""
    n = pos.shape[0]
    total = 0.0
    for i in range(n):
        d = pos[(i + 1) % n] - pos[i]
        d -= np.floor(d)
        if d < MIN_SEPARATION:
            return False
        total += d
    return abs(total - 1.0) < 1e-9


@njit(**_NUMBA_OPTS)
def gaps_all(pos, k):
    n = pos.shape[0]
    out = np.empty(n)
    for i in range(n):
        d = pos[(i + k) % n] - pos[i]
        d -= np.floor(d)
        out[i] = n * d
    return out


@njit(**_NUMBA_OPTS)
def pair_matrix_g2(pos, s, q2, q3):
    """Symmetric matrix of g''(x_i - x_j) with zero diagonal."""
    n = pos.shape[0]
    G = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = pos[i] - pos[j]
            d -= np.floor(d)
            v = g2q(d, s, q2, q3)
            G[i, j] = v
            G[j, i] = v
    return G


@njit(**_NUMBA_OPTS)
def pair_transport_sums(pos, psi_vals, s, q1, q2, q2b, q3):
    """Return (sum_{i!=j} (psi_i - psi_j) g'(x_i - x_j), sum_{i!=j} g''(x_i - x_j) (psi_i - psi_j)^2)."""
    n = pos.shape[0]
    a = 0.0
    b = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            d = pos[i] - pos[j]
            d -= np.floor(d)
            dp = psi_vals[i] - psi_vals[j]
            a += dp * g1q(d, s, q1, q2)
            b += dp * dp * g2q(d, s, q2b, q3)
    return 2.0 * a, 2.0 * b


@njit(**_NUMBA_OPTS)
def rwm_block(pos, G, orders, u_prop, u_acc, step_over_n, scale, s, q0, q1, newrow):
    """Run ``orders.shape[0]`` consecutive sweeps; returns total accepted moves."""
    total = 0
    for b in range(orders.shape[0]):
        total += rwm_sweep_kernel(pos, G, orders[b], u_prop[b], u_acc[b],
                                  step_over_n, scale, s, q0, q1, newrow)
    return total


@njit(**_NUMBA_OPTS)
def discrete_state_counts(pos, G, orders, u_prop, u_acc, step_over_n, scale, s, q0, q1,
                          newrow, cells, counts):
    """Sweeps on a lattice of ``cells`` sites; tallies the gap pattern after every site update.

    Proposals are exactly +-1 cell (``u_prop`` in {0, 1}). The tally key is
    the cell gap (d0, d1) from label 0 to labels 1 and 2, which identifies
    the configuration modulo rotation.
    """
    n = pos.shape[0]
    for b in range(orders.shape[0]):
        for k in range(n):
            _single_site(pos, G, orders[b, k], u_prop[b, k], u_acc[b, k],
                         step_over_n, scale, s, q0, q1, newrow)
            c0 = int(np.floor(pos[0] * cells + 0.5)) % cells
            c1 = int(np.floor(pos[1] * cells + 0.5)) % cells
            c2 = int(np.floor(pos[2] * cells + 0.5)) % cells
            counts[(c1 - c0) % cells, (c2 - c0) % cells] += 1


@njit(**_NUMBA_OPTS)
def hurwitz_scalar(w, a, coef, terms):
    """Euler-Maclaurin Hurwitz zeta for one (w, a); no domain checks."""
    total = 0.0
    for k in range(terms):
        total += (k + a) ** -w
    b = a + terms
    total += b ** (1.0 - w) / (w - 1.0) + 0.5 * b ** -w
    poch = w
    for j in range(coef.shape[0]):
        p = 2 * (j + 1)
        total += coef[j] * poch * b ** (-w - p + 1.0)
        poch *= (w + p - 1.0) * (w + p)
    return total
