"""MCMC for the circular Riesz gas ``P ~ exp(-beta H_N) 1_{D_N}``.

Two schemes are provided: single-site random-walk Metropolis sweeps (the
default) and Metropolis-adjusted Langevin. Both sample the ordered set D_N
directly: a proposal that would change the cyclic order of labels is
rejected, so labels keep their identity along the chain and gap observables
``N (x_{i+k} - x_i)`` refer to a fixed label i.

Random numbers come from the counter-based Philox generator; chain ``c`` of
a run seeded with ``seed`` uses the key ``seed XOR splitmix64(c)``.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import ceil

import numpy as np

from . import _fast
from .errors import (
    ConfigError,
    DegenerateSeriesError,
    DomainError,
    InsufficientESSError,
    RieszError,
    StepRejectionError,
)
from .gibbs import Configuration, LoopOperator, count_in, fluct
from .special import KernelModel
from .transforms import TestFunction, riesz_inverse_spectral

__all__ = [
    "SamplerConfig",
    "ObservableSeries",
    "ChainRun",
    "splitmix64",
    "chain_rng",
    "metropolis_sweep",
    "mala_sweep",
    "run_chains",
    "ess",
    "resolve_threads",
    "ObservableSet",
    "parse_observable",
    "discrete_oracle",
]

_MASK64 = (1 << 64) - 1
MIN_RECORDS = 100
STORM_ACCEPT = 0.01
COUNT_CENTERS = 64


def splitmix64(x: int) -> int:
    """One step of the SplitMix64 output function."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def chain_rng(seed: int, chain: int) -> np.random.Generator:
    """Philox generator for one chain, keyed by ``seed XOR splitmix64(chain)``."""
    key = (int(seed) & _MASK64) ^ splitmix64(int(chain))
    return np.random.Generator(np.random.Philox(key=key))


def resolve_threads(threads: int | None = None) -> int:
    """Explicit value, else ``RGL_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get("RGL_THREADS", "").strip()
        if not env:
            return 1
        try:
            threads = int(env)
        except ValueError as exc:
            raise ConfigError(f"RGL_THREADS must be an integer, got {env!r}") from exc
    if threads < 1:
        raise ConfigError("thread count must be at least 1")
    return int(threads)


@dataclass(frozen=True)
class SamplerConfig:
    """Sampler settings. ``step`` is in units of the mean spacing 1/N."""

    scheme: str = "rwm"
    step: float = 1.0
    sweeps: int = 20000
    burn_in: int = 2000
    thin: int = 10
    seed: int = 0
    target_accept: float | None = None
    adapt_sweeps: int | None = None
    init: str = "jittered"

    def __post_init__(self):
        if self.scheme not in ("rwm", "mala"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if not self.step > 0:
            raise ConfigError("step must be positive")
        if self.sweeps < 0 or self.burn_in < 0 or not (self.burn_in < self.sweeps or self.sweeps == 0):
            raise ConfigError("need 0 <= burn_in < sweeps")
        if self.thin < 1:
            raise ConfigError("thin must be at least 1")
        if self.init not in ("jittered", "lattice"):
            raise ConfigError(f"unknown init {self.init!r}")
        if self.target_accept is None:
            object.__setattr__(self, "target_accept", 0.4 if self.scheme == "rwm" else 0.57)
        if not 0.0 < self.target_accept < 1.0:
            raise ConfigError("target_accept must lie in (0, 1)")
        if self.adapt_sweeps is None:
            object.__setattr__(self, "adapt_sweeps", self.burn_in)
        if self.adapt_sweeps > self.burn_in:
            raise ConfigError("adaptation must stop before the end of burn-in")


@dataclass
class ObservableSeries:
    """Recorded values of one observable on one chain."""

    name: str
    chain: int
    sweeps: np.ndarray
    values: np.ndarray

    @property
    def records(self) -> int:
        return self.values.size

    @property
    def ess(self) -> float:
        return ess(self.values)[0]

    @property
    def act(self) -> float:
        return ess(self.values)[1]


@dataclass
class ChainRun:
    """Output of :func:`run_chains`."""

    model: KernelModel
    config: SamplerConfig
    series: dict = field(default_factory=dict)  # name -> list of ObservableSeries (per chain)
    snapshots: list = field(default_factory=list)  # per chain: array (records, N)
    acceptance: list = field(default_factory=list)
    final_step: list = field(default_factory=list)
    seconds: float = 0.0

    def pooled(self, name: str) -> np.ndarray:
        return np.concatenate([s.values for s in self.series[name]])


# ---------------------------------------------------------------------------
# ESS
# ---------------------------------------------------------------------------


def ess(values) -> tuple[float, float]:
    """Effective sample size and integrated autocorrelation time.

    Autocorrelations come from an FFT; the sum is truncated by Geyer's
    initial positive (and monotone) sequence rule.
    """
    x = np.asarray(values, dtype=float)
    n = x.size
    if n < MIN_RECORDS:
        raise InsufficientESSError(f"need at least {MIN_RECORDS} records, got {n}")
    xc = x - x.mean()
    var = float(np.dot(xc, xc)) / n
    if not var > 1e-300 or np.ptp(x) == 0.0:
        raise DegenerateSeriesError("series has zero variance")
    m = 1 << int(ceil(np.log2(2 * n)))
    f = np.fft.rfft(xc, m)
    acov = np.fft.irfft(f * np.conj(f), m)[:n] / n
    rho = acov / acov[0]
    pairs = rho[: 2 * ((n - 1) // 2)].reshape(-1, 2).sum(axis=1)
    tau = -1.0
    prev = np.inf
    for gm in pairs:
        if gm <= 0.0:
            break
        gm = min(gm, prev)
        tau += 2.0 * gm
        prev = gm
    act = max(tau, 1.0)
    return n / act, act


# ---------------------------------------------------------------------------
# Observables
# ---------------------------------------------------------------------------


class ObservableSet:
    """Parsed observable names evaluated on raw position arrays.

    Names: ``gap:k`` (label-0 gap), ``gapvar:k`` (mean over labels of
    ``(gap(i,k) - k)^2``), ``count:h`` (count in ``(-h, h)`` minus ``2Nh``),
    ``countvar:h`` (mean of the squared count fluctuation over 64 rotated
    windows), ``fluct:cos`` / ``fluct:cos:m``, ``fluct:ind:h``, ``nnmin``
    (smallest ``N * spacing``), ``A`` / ``B`` (loop terms for the cosine
    pair, ``A:m`` / ``B:m`` for mode m).
    """

    def __init__(self, names, model: KernelModel):
        self.names = list(names)
        self.model = model
        self._fns = [self._build(name) for name in self.names]

    def _build(self, name):
        n = self.model.params.n
        head, args = parse_observable(name, n)
        if head == "gap":
            k = args[0]
            return lambda x: n * ((x[k % n] - x[0]) % 1.0)
        if head == "gapvar":
            k = args[0]
            return lambda x: float(np.mean((_fast.gaps_all(x, k) - k) ** 2))
        if head == "count":
            h = args[0]
            return lambda x: count_in(x, 0.0, h) - 2.0 * n * h
        if head == "countvar":
            h = args[0]
            centers = np.arange(COUNT_CENTERS) / COUNT_CENTERS
            return lambda x: _count_var(x, centers, h, n)
        if head == "fluct":
            xi = TestFunction.cosine(args[1]) if args[0] == "cos" else TestFunction.indicator(args[1])
            return lambda x: fluct(x, xi)
        if head == "nnmin":
            return lambda x: float(np.min(_fast.gaps_all(x, 1)))
        xi = TestFunction.cosine(args[0])
        op = LoopOperator(self.model, xi, riesz_inverse_spectral(xi, model=self.model))
        if head == "A":
            return lambda x: op.evaluate(x).a_value
        return lambda x: op.evaluate(x, check=False).b_value

    def evaluate(self, x) -> np.ndarray:
        return np.array([f(x) for f in self._fns], dtype=float)


def parse_observable(name: str, n: int) -> tuple[str, tuple]:
    """Validate an observable name for N particles; return ``(head, args)``."""
    parts = name.split(":")
    head, rest = parts[0], parts[1:]
    try:
        if head in ("gap", "gapvar") and len(rest) == 1:
            k = int(rest[0])
            _check_k(k, n)
            return head, (k,)
        if head in ("count", "countvar") and len(rest) == 1:
            h = float(rest[0])
            _check_h(h)
            return head, (h,)
        if head == "fluct" and rest and rest[0] == "cos" and len(rest) <= 2:
            m = int(rest[1]) if len(rest) == 2 else 1
            if m < 1:
                raise ValueError(m)
            return head, ("cos", m)
        if head == "fluct" and len(rest) == 2 and rest[0] == "ind":
            h = float(rest[1])
            if not 0.0 < h < 0.5:
                raise ValueError(h)
            return head, ("ind", h)
        if head == "nnmin" and not rest:
            return head, ()
        if head in ("A", "B") and len(rest) <= 1:
            m = int(rest[0]) if rest else 1
            if m < 1:
                raise ValueError(m)
            return head, (m,)
    except ValueError as exc:
        raise ConfigError(f"malformed observable name {name!r}") from exc
    if head in ("gap", "gapvar", "count", "countvar", "fluct", "nnmin", "A", "B"):
        raise ConfigError(f"malformed observable name {name!r}")
    raise ConfigError(f"unknown observable {name!r}")


def _check_k(k, n):
    if not 1 <= k <= n // 2:
        raise ConfigError(f"gap order k={k} must lie in [1, N/2]")


def _check_h(h):
    if not 0.0 < h <= 0.5:
        raise ConfigError(f"window half-width {h} must lie in (0, 1/2]")


def _count_var(x, centers, h, n):
    xs = np.sort(x)
    lo = np.searchsorted(xs, np.mod(centers - h, 1.0), side="right")
    hi = np.searchsorted(xs, np.mod(centers + h, 1.0), side="left")
    counts = hi - lo
    counts = np.where(counts < 0, counts + n, counts) if h < 0.5 else np.full_like(counts, n)
    return float(np.mean((counts - 2.0 * n * h) ** 2))


# ---------------------------------------------------------------------------
# Single moves
# ---------------------------------------------------------------------------


class _ChainState:
    """Mutable positions plus the cached pair matrix of g values."""

    def __init__(self, positions, model: KernelModel):
        self.model = model
        self.pos = np.array(positions, dtype=float)
        self.n = self.pos.size
        self.G = _fast.pair_matrix(self.pos, model.s, model.table_half[0], model.table_half[1])
        self.newrow = np.empty(self.n)
        self.scale = model.params.beta * 2.0 * self.n ** (-model.s)

    def rwm(self, rng, step, sweeps):
        n = self.n
        orders = rng.permuted(np.tile(np.arange(n, dtype=np.int64), (sweeps, 1)), axis=1)
        u_prop = rng.random((sweeps, n))
        u_acc = rng.random((sweeps, n))
        m = self.model
        acc = _fast.rwm_block(self.pos, self.G, orders, u_prop, u_acc, step / n, self.scale,
                              m.s, m.table_half[0], m.table_half[1], self.newrow)
        return acc / (sweeps * n)

    def mala(self, rng, step, sweeps):
        m = self.model
        n = self.n
        beta = m.params.beta
        ns = n ** (-m.s)
        tau = 0.5 * (step / n) ** 2
        accepted = 0
        for _ in range(sweeps):
            x = self.pos
            drift = -beta * 2.0 * ns * _fast.pair_force_sum(x, m.s, m.table_half[1], m.table_half[2])
            noise = rng.standard_normal(n)
            u = rng.random()
            delta = tau * drift + np.sqrt(2.0 * tau) * noise
            y = np.mod(x + delta, 1.0)
            if not _fast.all_in_order(y):
                continue
            h_x = _fast.pair_energy_sum(x, m.s, m.table_half[0], m.table_half[1])
            h_y = _fast.pair_energy_sum(y, m.s, m.table_half[0], m.table_half[1])
            if not np.isfinite(h_y):
                continue
            drift_y = -beta * 2.0 * ns * _fast.pair_force_sum(y, m.s, m.table_half[1], m.table_half[2])
            fwd = -np.sum((delta - tau * drift) ** 2) / (4.0 * tau)
            bwd = -np.sum((-delta - tau * drift_y) ** 2) / (4.0 * tau)
            log_ratio = -beta * ns * (h_y - h_x) + bwd - fwd
            if log_ratio >= 0.0 or u < np.exp(log_ratio):
                self.pos = y
                accepted += 1
        if accepted:
            self.G = _fast.pair_matrix(self.pos, m.s, m.table_half[0], m.table_half[1])
        return accepted / sweeps


def metropolis_sweep(config: Configuration, model: KernelModel, sconfig: SamplerConfig,
                     rng: np.random.Generator) -> tuple[Configuration, float]:
    """One random-scan Metropolis sweep: every label proposes ``U[-step/N, step/N]``."""
    state = _ChainState(config.positions, model)
    rate = state.rwm(rng, sconfig.step, 1)
    return Configuration(state.pos), rate


def mala_sweep(config: Configuration, model: KernelModel, sconfig: SamplerConfig,
               rng: np.random.Generator) -> tuple[Configuration, float]:
    """One MALA step ``x' = x - tau beta grad H + sqrt(2 tau) noise`` with ``sqrt(2 tau) = step/N``."""
    state = _ChainState(config.positions, model)
    rate = state.mala(rng, sconfig.step, 1)
    return Configuration(state.pos), rate


# ---------------------------------------------------------------------------
# Chains
# ---------------------------------------------------------------------------

ADAPT_BLOCK = 10
STORM_WINDOW = 50


def _initial(model, sconfig, rng):
    n = model.params.n
    if sconfig.init == "lattice":
        return Configuration.lattice(n).positions
    return Configuration.jittered(n, rng).positions


def _run_one(model: KernelModel, sconfig: SamplerConfig, obs: ObservableSet, chain: int,
             snapshot_every: int):
    rng = chain_rng(sconfig.seed, chain)
    state = _ChainState(_initial(model, sconfig, rng), model)
    move = state.rwm if sconfig.scheme == "rwm" else state.mala
    log_step = np.log(sconfig.step)
    target = sconfig.target_accept

    # Burn-in with Robbins-Monro adaptation of log(step), then frozen.
    done = 0
    t = 0
    window = []
    while done < sconfig.burn_in:
        block = min(ADAPT_BLOCK, sconfig.burn_in - done)
        rate = move(rng, float(np.exp(log_step)), block)
        done += block
        if done <= sconfig.adapt_sweeps:
            t += 1
            log_step += (rate - target) / t ** 0.6
            log_step = min(log_step, np.log(0.5 * state.n))
        window.append(rate)
        if sconfig.scheme == "mala" and len(window) * ADAPT_BLOCK >= STORM_WINDOW:
            if np.mean(window) < STORM_ACCEPT:
                raise StepRejectionError(
                    f"chain {chain}: MALA acceptance {np.mean(window):.3g} over {STORM_WINDOW} sweeps")
            window = []
    step = float(np.exp(log_step))

    n_rec = (sconfig.sweeps - sconfig.burn_in) // sconfig.thin
    values = np.empty((n_rec, len(obs.names)))
    sweeps_at = np.empty(n_rec, dtype=np.int64)
    snaps = []
    acc_total = 0.0
    for r in range(n_rec):
        acc_total += move(rng, step, sconfig.thin)
        done += sconfig.thin
        try:
            values[r] = obs.evaluate(state.pos)
        except RieszError as exc:
            raise type(exc)(f"chain {chain}, sweep {done}: {exc}") from exc
        sweeps_at[r] = done
        if snapshot_every and r % snapshot_every == 0:
            snaps.append(state.pos.copy())
    accept = acc_total / n_rec if n_rec else float("nan")
    return values, sweeps_at, np.array(snaps).reshape(len(snaps), state.n), accept, step


def run_chains(model: KernelModel, sconfig: SamplerConfig, observables, chains: int = 1,
               threads: int | None = None, snapshot_every: int = 0) -> ChainRun:
    """Run independent chains and record the named observables.

    Each chain starts from its own jittered lattice and uses its own
    sub-seeded generator, so results do not depend on ``threads``.
    ``snapshot_every`` > 0 additionally keeps every such recorded
    configuration.
    """
    if chains < 1:
        raise ConfigError("need at least one chain")
    obs = ObservableSet(observables, model)
    threads = resolve_threads(threads)
    t0 = time.perf_counter()
    if threads == 1 or chains == 1:
        outs = [_run_one(model, sconfig, obs, c, snapshot_every) for c in range(chains)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = [pool.submit(_run_one, model, sconfig, obs, c, snapshot_every) for c in range(chains)]
            outs = [f.result() for f in futs]
    run = ChainRun(model, sconfig, seconds=time.perf_counter() - t0)
    for j, name in enumerate(obs.names):
        run.series[name] = [ObservableSeries(name, c, out[1], out[0][:, j].copy())
                            for c, out in enumerate(outs)]
    run.snapshots = [out[2] for out in outs]
    run.acceptance = [out[3] for out in outs]
    run.final_step = [out[4] for out in outs]
    return run


# ---------------------------------------------------------------------------
# Discretized oracle
# ---------------------------------------------------------------------------


def discrete_oracle(model: KernelModel, cells: int = 12, sweeps: int = 333_334, seed: int = 0):
    """Three particles on ``cells`` lattice sites driven by the production move kernel.

    Proposals are exactly one cell left or right. Returns ``(empirical,
    exact)`` probabilities of the gap patterns ``(d1, d2)`` (positions of
    labels 1 and 2 relative to label 0, in cells), the exact law being
    ``exp(-beta H)`` restricted to cyclically ordered states.
    """
    if model.params.n != 3:
        raise DomainError("the discrete oracle uses exactly three particles")
    rng = chain_rng(seed, 0)
    pos = np.array([0.0, 4.0, 8.0]) / cells
    state = _ChainState(pos, model)
    counts = np.zeros((cells, cells), dtype=np.int64)
    block = 10_000
    left = sweeps
    while left > 0:
        b = min(block, left)
        orders = rng.permuted(np.tile(np.arange(3, dtype=np.int64), (b, 1)), axis=1)
        u_prop = rng.integers(0, 2, size=(b, 3)).astype(float)
        u_acc = rng.random((b, 3))
        _fast.discrete_state_counts(state.pos, state.G, orders, u_prop, u_acc, 1.0 / cells,
                                    state.scale, model.s, model.table_half[0], model.table_half[1],
                                    state.newrow, cells, counts)
        left -= b
    empirical = counts / counts.sum()
    exact = discrete_weights(model, cells)
    return empirical, exact


def discrete_weights(model: KernelModel, cells: int = 12) -> np.ndarray:
    """``exp(-beta H)`` over ordered three-point lattice states, indexed by ``(d1, d2)``."""
    from .gibbs import energy

    w = np.zeros((cells, cells))
    for d1 in range(1, cells):
        for d2 in range(d1 + 1, cells):
            x = np.array([0.0, d1, d2]) / cells
            w[d1, d2] = np.exp(-model.params.beta * energy(x, model))
    return w / w.sum()


def discrete_transition_matrix(model: KernelModel, cells: int = 12):
    """Single-site kernel (random label, +-1 cell, Metropolis) on labelled ordered states.

    Returns ``(P, states, weights)`` where ``weights`` is ``exp(-beta H)``
    normalized over ``states``.
    """
    from .gibbs import energy

    states = [(a, b, c) for a in range(cells) for b in range(cells) for c in range(cells)
              if (b - a) % cells and (c - a) % cells and (b - a) % cells < (c - a) % cells]
    index = {st: j for j, st in enumerate(states)}
    beta = model.params.beta
    h = np.array([energy(np.array(st) / cells, model) for st in states])
    P = np.zeros((len(states), len(states)))
    for j, st in enumerate(states):
        for lab in range(3):
            for step in (-1, 1):
                new = list(st)
                new[lab] = (new[lab] + step) % cells
                new = tuple(new)
                prob = 1.0 / 6.0
                if new in index:
                    k = index[new]
                    a = min(1.0, np.exp(-beta * (h[k] - h[j])))
                    P[j, k] += prob * a
                    P[j, j] += prob * (1.0 - a)
                else:
                    P[j, j] += prob
    w = np.exp(-beta * (h - h.min()))
    return P, states, w / w.sum()
