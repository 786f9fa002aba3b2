"""Monte Carlo samplers for checking dualities in expectation.

Diffusion convention: a generator ``a(x) d^2/dx^2 + b(x) d/dx`` is simulated
as ``dX = b dt + sqrt(2 a) dW``.  Generators here carry no factor 1/2 in
front of the second-order term, so the noise variance is twice the
second-order coefficient.

Randomness comes from Philox streams derived from ``SeedSequence(seed)``.
Every (role, start point) pair gets its own spawn key and every batch of
replicates its own child stream, so results do not depend on the order in
which batches are computed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .models import GeneratorBundle, validate_generator, wf_moment_dual
from .statespace import SiteGraph


@dataclass(frozen=True)
class SamplePlan:
    replicates: int
    horizon: float
    seed: int = 0
    step: float = 1e-3
    batch: int = 10_000

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not self.step > 0:
            raise ValueError("step must be > 0")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")

    def batches(self, key: Sequence[int]) -> list:
        """``(size, Generator)`` per batch for the stream named by ``key``."""
        root = np.random.SeedSequence(self.seed, spawn_key=tuple(int(k) for k in key))
        sizes = [self.batch] * (self.replicates // self.batch)
        if self.replicates % self.batch:
            sizes.append(self.replicates % self.batch)
        children = root.spawn(len(sizes))
        return [(n, np.random.Generator(np.random.Philox(c))) for n, c in zip(sizes, children)]


def _grid_steps(times: Sequence[float], step: float) -> list:
    out = []
    for t in times:
        if t < 0:
            raise ValueError("times must be >= 0")
        k = round(t / step)
        if not math.isclose(k * step, t, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError(f"time {t} is not a multiple of the step {step}")
        out.append(k)
    return out


# -- continuous-time Markov chains ------------------------------------------------


class _JumpTable:
    """Float jump rates and cumulative jump probabilities per state."""

    def __init__(self, L):
        report = validate_generator(L)
        if not report.valid:
            raise ValueError(f"not a Markov generator: {report.witnesses(3)}")
        n = L.shape[0]
        width = max((len(r) for r in L.rows.values()), default=1)
        self.rate = np.zeros(n)
        self.targets = np.zeros((n, max(width, 1)), dtype=np.int64)
        self.cum = np.ones((n, max(width, 1)))
        for i in range(n):
            self.targets[i, :] = i
            off = [(j, float(v)) for j, v in sorted(L.rows.get(i, {}).items()) if j != i]
            total = sum(v for _, v in off)
            self.rate[i] = total
            acc = 0.0
            for k, (j, v) in enumerate(off):
                acc += v
                self.targets[i, k] = j
                self.cum[i, k] = acc / total
            if off:
                self.cum[i, len(off) - 1] = 1.0


def _run_chain(table: _JumpTable, start: np.ndarray, times: Sequence[float], rng) -> list:
    state = start.copy()
    clock = np.zeros(state.shape[0])
    out = []
    for t in sorted(times):
        active = np.nonzero(table.rate[state] > 0)[0]
        while active.size:
            rates = table.rate[state[active]]
            hold = rng.exponential(1.0, size=active.size) / rates
            arrive = clock[active] + hold
            jumps = arrive <= t
            clock[active[~jumps]] = t
            idx = active[jumps]
            clock[idx] = arrive[jumps]
            if idx.size:
                u = rng.random(idx.size)
                rows = state[idx]
                k = (table.cum[rows] < u[:, None]).sum(axis=1)
                state[idx] = table.targets[rows, k]
                idx = idx[table.rate[state[idx]] > 0]
            active = idx
        clock[:] = t
        out.append(state.copy())
    order = np.argsort(np.argsort(times))
    return [out[k] for k in order]


def gillespie(bundle: GeneratorBundle, x0, plan: SamplePlan,
              times: Optional[Sequence[float]] = None, key: Sequence[int] = ()) -> list:
    """State indices at each of ``times`` (default: the horizon) for every replicate.

    Holding times are exponential with rate ``-L(x,x)``; the next state is
    drawn from ``L(x,y) / -L(x,x)``.  The memoryless property lets each
    requested time restart the clock without changing the law.
    """
    times = [plan.horizon] if times is None else list(times)
    table = _JumpTable(bundle.L)
    start = x0 if isinstance(x0, (int, np.integer)) else bundle.space.index(tuple(x0))
    parts = [[] for _ in times]
    for size, rng in plan.batches(key):
        res = _run_chain(table, np.full(size, start, dtype=np.int64), times, rng)
        for k, r in enumerate(res):
            parts[k].append(r)
    return [np.concatenate(p) for p in parts]


def gillespie_path(bundle: GeneratorBundle, x0, horizon: float, seed: int = 0):
    """One trajectory as ``(jump times, configurations)`` up to ``horizon``."""
    table = _JumpTable(bundle.L)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    i = bundle.space.index(tuple(x0))
    times, states = [0.0], [bundle.space.config(i)]
    t = 0.0
    while table.rate[i] > 0:
        t += rng.exponential(1.0) / table.rate[i]
        if t > horizon:
            break
        k = int((table.cum[i] < rng.random()).sum())
        i = int(table.targets[i, k])
        times.append(t)
        states.append(bundle.space.config(i))
    return times, states


# -- diffusions -------------------------------------------------------------------


def euler_maruyama_wf(s, x0: float, plan: SamplePlan,
                      times: Optional[Sequence[float]] = None, key: Sequence[int] = ()) -> list:
    """Samples of ``dX = s X(1-X) dt + sqrt(2 X(1-X)) dW`` clamped to [0, 1]."""
    if not 0.0 <= x0 <= 1.0:
        raise ValueError("x0 must lie in [0, 1]")
    s = float(s)
    times = [plan.horizon] if times is None else list(times)
    marks = _grid_steps(times, plan.step)
    last = max(marks, default=0)
    h = plan.step
    root = math.sqrt(h)
    parts = [[] for _ in times]
    for size, rng in plan.batches(key):
        x = np.full(size, float(x0))
        snap = {}
        if 0 in marks:
            snap[0] = x.copy()
        for k in range(1, last + 1):
            v = x * (1.0 - x)
            x = x + s * v * h + np.sqrt(2.0 * v) * root * rng.standard_normal(size)
            np.clip(x, 0.0, 1.0, out=x)
            if k in marks:
                snap[k] = x.copy()
        for i, m in enumerate(marks):
            parts[i].append(snap[m])
    return [np.concatenate(p) for p in parts]


def euler_maruyama_bep(graph: SiteGraph, alpha: Sequence, z0: Sequence[float], plan: SamplePlan,
                       times: Optional[Sequence[float]] = None, key: Sequence[int] = ()) -> list:
    """Samples of the energy diffusion; one ``(replicates, sites)`` array per time.

    Each edge ``{i, j}`` with rate ``q`` moves ``z_j`` by the drift
    ``q (alpha_j z_i - alpha_i z_j)`` (and ``z_i`` by its negative) plus noise
    ``sqrt(2 q z_i z_j) dW`` along ``e_j - e_i``.  Negative coordinates are
    clamped to 0 and the row rescaled to its previous total, so the
    conserved energy is not inflated by the clamp.
    """
    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (graph.n,) or np.any(z0 < 0):
        raise ValueError("z0 must be a nonnegative vector of length graph.n")
    a = np.array([float(x) for x in alpha])
    if np.any(a <= 0):
        raise ValueError("alpha must be positive")
    edges = [(i, j, float(q)) for i, j, q in graph.edges()]
    times = [plan.horizon] if times is None else list(times)
    marks = _grid_steps(times, plan.step)
    last = max(marks, default=0)
    h = plan.step
    root = math.sqrt(h)
    parts = [[] for _ in times]
    for size, rng in plan.batches(key):
        z = np.tile(z0, (size, 1))
        snap = {}
        if 0 in marks:
            snap[0] = z.copy()
        for k in range(1, last + 1):
            dz = np.zeros_like(z)
            noise = rng.standard_normal((size, len(edges)))
            for e, (i, j, q) in enumerate(edges):
                zi, zj = z[:, i], z[:, j]
                flow = q * (a[j] * zi - a[i] * zj) * h
                flow += np.sqrt(2.0 * q * np.maximum(zi * zj, 0.0)) * root * noise[:, e]
                dz[:, j] += flow
                dz[:, i] -= flow
            total = z.sum(axis=1, keepdims=True)
            z = np.maximum(z + dz, 0.0)
            mass = z.sum(axis=1, keepdims=True)
            np.divide(z * total, mass, out=z, where=mass > 0)
            if k in marks:
                snap[k] = z.copy()
        for i, m in enumerate(marks):
            parts[i].append(snap[m])
    return [np.concatenate(p) for p in parts]


# -- duality in expectation -------------------------------------------------------


@dataclass
class McDualityEstimate:
    x: object
    y: object
    t: float
    lhs_mean: float
    lhs_se: float
    rhs_mean: float
    rhs_se: float
    z: float = field(init=False)

    def __post_init__(self):
        gap = abs(self.lhs_mean - self.rhs_mean)
        se = math.sqrt(self.lhs_se ** 2 + self.rhs_se ** 2)
        if se == 0:
            self.z = 0.0 if gap == 0 else math.inf
        else:
            self.z = gap / se

    def as_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "t": self.t, "lhs_mean": self.lhs_mean,
                "lhs_se": self.lhs_se, "rhs_mean": self.rhs_mean, "rhs_se": self.rhs_se,
                "z": self.z}


def _mean_se(values: np.ndarray):
    n = values.shape[0]
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, se


Sampler = Callable[[object, Sequence[float], SamplePlan, Sequence[int]], list]


def mc_duality(x_sampler: Sampler, y_sampler: Sampler, D: Callable,
               grid: Sequence[tuple], plan: SamplePlan) -> list:
    """Estimate ``E^x[D(X_t, y)]`` and ``E^y[D(x, Y_t)]`` on ``(x, y, t)`` points.

    Each distinct start point is simulated once over all requested times;
    ``D`` must accept numpy arrays in either argument.
    """
    xs = sorted({g[0] for g in grid})
    ys = sorted({g[1] for g in grid})
    ts = sorted({g[2] for g in grid})
    x_paths = {x: dict(zip(ts, x_sampler(x, ts, plan, (0, k)))) for k, x in enumerate(xs)}
    y_paths = {y: dict(zip(ts, y_sampler(y, ts, plan, (1, k)))) for k, y in enumerate(ys)}
    out = []
    for x, y, t in grid:
        lm, ls = _mean_se(np.asarray(D(x_paths[x][t], y), dtype=float))
        rm, rs = _mean_se(np.asarray(D(x, y_paths[y][t]), dtype=float))
        out.append(McDualityEstimate(x, y, t, lm, ls, rm, rs))
    return out


def wf_sampler(s) -> Sampler:
    return lambda x0, times, plan, key: euler_maruyama_wf(s, x0, plan, times, key)


def chain_sampler(bundle: GeneratorBundle) -> Sampler:
    return lambda x0, times, plan, key: gillespie(bundle, int(x0), plan, times, key)


def wf_self_duality_mc(s, plan: SamplePlan, xs=(0.2, 0.5, 0.8), ys=(0.2, 0.5, 0.8),
                       ts=(0.1, 0.5)) -> list:
    """Self-duality of Wright-Fisher with ``D(x, y) = exp(-s x y)``."""
    sf = float(s)
    grid = [(x, y, t) for t in ts for x in xs for y in ys]
    D = lambda x, y: np.exp(-sf * np.asarray(x) * np.asarray(y))
    return mc_duality(wf_sampler(s), wf_sampler(s), D, grid, plan)


def wf_moment_mc(s, plan: SamplePlan, x=0.5, n=2, t=0.25, cap: Optional[int] = None) -> list:
    """Wright-Fisher against its block-counting dual with ``D(x, n) = (1-x)^n``.

    The dual chain is truncated at ``cap`` (default ``max(20, 4 n)``); only
    ``n <= cap / 2`` is accepted.
    """
    cap = max(20, 4 * n) if cap is None else cap
    if 2 * n > cap:
        raise ValueError("n must be <= cap / 2")
    dual = wf_moment_dual(Fraction(s), cap)
    D = lambda xv, nv: (1.0 - np.asarray(xv, dtype=float)) ** np.asarray(nv, dtype=float)
    return mc_duality(wf_sampler(s), chain_sampler(dual), D, [(x, n, t)], plan)


def gate(estimates: Sequence[McDualityEstimate], threshold: float = 4.0) -> bool:
    return all(e.z <= threshold for e in estimates)
