"""Adaptive stopping with empirical Bernstein bounds, and racing.

A *sampler* is a callable ``draw(size) -> ndarray`` returning fresh i.i.d.
samples. ``as_sampler`` builds one from an ``ArmModel`` and a generator, or
from a finite sequence of recorded values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bounds import emp_bernstein_radius, emp_bernstein_radius_twosided, hoeffding_radius
from .env import ArmModel

__all__ = [
    "StoppingConfig",
    "StoppingResult",
    "SampleLimitExceeded",
    "as_sampler",
    "ebgstop",
    "RaceResult",
    "race",
]


class SampleLimitExceeded(RuntimeError):
    """The stream ended, or the sample cap was hit, before the stopping rule fired."""


def as_sampler(source, rng=None) -> Callable[[int], np.ndarray]:
    if isinstance(source, ArmModel):
        if rng is None:
            raise ValueError("an ArmModel source needs a generator")
        return lambda size: np.asarray(source.sample(rng, size), dtype=float)
    if callable(source):
        return source
    data = np.asarray(source, dtype=float)
    pos = 0

    def draw(size):
        nonlocal pos
        out = data[pos : pos + size]
        pos += out.size
        return out

    return draw


@dataclass(frozen=True)
class StoppingConfig:
    delta: float
    eps: float
    q: float = 0.1
    t1: int = 20
    alpha: float = 1.1
    a: float = 0.0

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.q <= 0 or self.t1 < 1 or self.alpha <= 1:
            raise ValueError("need q > 0, t1 >= 1 and alpha > 1")

    @property
    def c(self) -> float:
        return 3.0 / (self.eps * self.t1**self.q * (1.0 - self.alpha ** (-self.q)))

    def grid(self):
        """t_1, t_2, ... with t_k = ceil(alpha t_{k-1})."""
        t = self.t1
        while True:
            yield t
            t = math.ceil(self.alpha * t)


@dataclass
class StoppingResult:
    estimate: float
    T: int
    trace: dict = field(default_factory=dict)


def ebgstop(sampler, cfg: StoppingConfig, max_samples: int = 10**8, keep_trace: bool = False):
    """Sample until the mean is known to relative accuracy ``cfg.delta``.

    Returns the estimate and the number of samples used. Data must lie in
    ``[cfg.a, cfg.a + 1]``. The loop continues while
    ``(1 + delta) LB < (1 - delta) UB`` and stops at the first t where that
    fails. Raises ``SampleLimitExceeded`` if the stream ends or ``max_samples``
    is reached first (which happens for a zero mean).
    """
    sampler = as_sampler(sampler)
    d = cfg.delta
    logc = math.log(cfg.c)
    s1 = s2 = 0.0  # running sums of the shifted data
    t_done = 0
    LB, UB = 0.0, math.inf
    traces = []

    def take(size):
        x = np.asarray(sampler(size), dtype=float)
        if x.size < size:
            raise SampleLimitExceeded(f"stream exhausted after {t_done + x.size} samples")
        if np.any(x < cfg.a) or np.any(x > cfg.a + 1):
            raise ValueError(f"sample outside [{cfg.a}, {cfg.a + 1}]")
        return x - cfg.a

    if cfg.t1 > 1:
        if cfg.t1 - 1 > max_samples:
            raise SampleLimitExceeded("sample cap below t1")
        u = take(cfg.t1 - 1)
        s1, s2 = float(u.sum()), float(u @ u)
        t_done = cfg.t1 - 1

    grid = cfg.grid()
    tk = next(grid)
    for tk1 in grid:
        lo, hi = tk, tk1 - 1
        if hi > max_samples:
            hi = max_samples
        if hi < lo:
            break
        u = take(hi - lo + 1)
        t = np.arange(lo, hi + 1, dtype=float)
        c1 = s1 + np.cumsum(u)
        c2 = s2 + np.cumsum(u * u)
        mean_u = c1 / t
        var = np.clip(c2 / t - mean_u**2, 0.0, 0.25)
        absmean = np.abs(mean_u + cfg.a)
        ell = tk1 / t**2 * (logc + cfg.q * math.log(tk))
        ct = emp_bernstein_radius(ell, var)
        lb = np.maximum(LB, np.maximum.accumulate(absmean - ct))
        ub = np.minimum(UB, np.minimum.accumulate(absmean + ct))
        stop = (1 + d) * lb >= (1 - d) * ub
        if keep_trace:
            traces.append((t, mean_u + cfg.a, ct, lb, ub))
        if stop.any():
            j = int(np.argmax(stop))
            T = lo + j
            sign = math.copysign(1.0, mean_u[j] + cfg.a) if mean_u[j] + cfg.a != 0 else 0.0
            est = float(sign * ((1 + d) * lb[j] + (1 - d) * ub[j]) / 2.0)
            return StoppingResult(est, T, _trace(traces, T) if keep_trace else {})
        LB, UB = float(lb[-1]), float(ub[-1])
        s1, s2 = float(c1[-1]), float(c2[-1])
        t_done = hi
        if hi >= max_samples:
            break
        tk = tk1
    raise SampleLimitExceeded(f"no decision within {max_samples} samples")


def _trace(traces, T):
    cols = [np.concatenate(c) for c in zip(*traces)]
    keep = cols[0] <= T
    names = ("t", "mean", "radius", "LB", "UB")
    return {k: v[keep] for k, v in zip(names, cols)}


class _Buffered:
    """Serve single samples from a sampler in blocks."""

    def __init__(self, sampler, block=512):
        self.sampler, self.block = sampler, block
        self.buf = np.empty(0)
        self.pos = 0

    def next(self):
        if self.pos >= self.buf.size:
            self.buf = np.asarray(self.sampler(self.block), dtype=float)
            self.pos = 0
            if self.buf.size == 0:
                return None
        x = self.buf[self.pos]
        self.pos += 1
        return float(x)


@dataclass
class RaceResult:
    survivors: list
    samples: int
    work_saved: float
    counts: np.ndarray


def race(options: Sequence, eps: float, n: int, radius: str = "empirical_bernstein") -> RaceResult:
    """Race K options until one survives or each survivor has n samples.

    Survivors are sampled one at a time in round-robin order. After each
    sample, every survivor gets a two-sided interval at level ``eps / (n K)``
    and any option whose upper bound is below another option's lower bound
    is discarded for good.
    """
    K = len(options)
    if K < 2:
        raise ValueError("a race needs at least two options")
    if radius not in ("hoeffding", "empirical_bernstein"):
        raise ValueError(f"unknown radius kind {radius!r}")
    samplers = [_Buffered(as_sampler(o)) for o in options]
    level = eps / (n * K)
    counts = np.zeros(K, dtype=np.int64)
    sums = np.zeros(K)
    sumsq = np.zeros(K)
    alive = np.ones(K, dtype=bool)
    while alive.sum() > 1:
        progressed = False
        for i in np.flatnonzero(alive):
            if not alive[i] or counts[i] >= n:
                continue
            x = samplers[i].next()
            if x is None:
                continue
            counts[i] += 1
            sums[i] += x
            sumsq[i] += x * x
            progressed = True
            _discard(alive, counts, sums, sumsq, level, radius)
            if alive.sum() == 1:
                break
        if not progressed:
            break
    total = int(counts.sum())
    return RaceResult(np.flatnonzero(alive).tolist(), total, 1.0 - total / (K * n), counts)


def _discard(alive, counts, sums, sumsq, level, radius):
    idx = np.flatnonzero(alive & (counts > 0))
    if idx.size < 2:
        return
    s = counts[idx].astype(float)
    m = sums[idx] / s
    if radius == "hoeffding":
        r = np.sqrt(math.log(2.0 / level) / (2.0 * s))
    else:
        # two-sided empirical Bernstein radius at t = n = s
        v = np.clip(sumsq[idx] / s - m * m, 0.0, 0.25)
        ell = math.log(3.0 / level) / s
        r = np.minimum(np.sqrt(2.0 * ell * (v + ell)) + ell * (1.0 / 3.0 + np.sqrt(1.0 - 3.0 * v)),
                       np.sqrt(ell / 2.0))
    lo = (m - r).max()
    alive[idx[(m + r) < lo]] = False
