"""Best-arm identification with a fixed budget of pulls.

Every strategy here takes a stack of reward tables ``tables[r, i, s]`` (the
s-th reward of arm i in replication r) and returns the recommended arm of
each replication. Recommendations are the largest empirical mean, ties to
the lowest arm index.
"""
from __future__ import annotations

import math

import numpy as np

from .bounds import hoeffding_radius
from .env import EnvironmentSpec, gaps, reward_table

__all__ = [
    "DegenerateInstance",
    "BudgetError",
    "hardness",
    "ucbe_index",
    "ucbe_exploration",
    "sr_schedule",
    "successive_rejects",
    "successive_rejects_batch",
    "uniform_batch",
    "ucbe_batch",
    "adaptive_ucbe_batch",
    "adaptive_ucbe",
    "hoeffding_race_batch",
    "simple_regret",
]


class DegenerateInstance(ValueError):
    """More than one optimal arm."""


class BudgetError(ValueError):
    """Budget smaller than the number of arms."""


def hardness(gap_vector) -> float:
    """``H = sum over positive gaps of gap^-2``."""
    g = np.asarray(gap_vector, dtype=float)
    if np.count_nonzero(g == 0) != 1:
        raise DegenerateInstance("hardness needs exactly one zero gap")
    pos = g[g > 0]
    return float(np.sum(pos**-2.0))


def ucbe_exploration(c: float, n: int, H: float) -> float:
    """Exploration parameter ``a = c n / (2 H)``."""
    return c * n / (2.0 * H)


def ucbe_index(mean, s, a):
    """``mean + sqrt(a / s)``, infinite for unpulled arms."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore"):
        b = np.asarray(mean, dtype=float) + np.sqrt(a / np.maximum(s, 1e-300))
    b = np.where(s > 0, b, np.inf)
    return b[()] if b.ndim == 0 else b


def simple_regret(J, gap_vector):
    return np.asarray(gap_vector, dtype=float)[J]


def _log_bar(K: int) -> float:
    return 0.5 + sum(1.0 / i for i in range(2, K + 1))


def sr_schedule(n: int, K: int) -> list[int]:
    """Cumulative pulls per surviving arm at the end of phases 1..K-1."""
    if n < K:
        raise BudgetError(f"budget n={n} smaller than K={K}")
    lb = _log_bar(K)
    return [math.ceil((n - K) / (lb * (K + 1 - k))) for k in range(1, K)]


def _argmax_low(x):
    return np.argmax(x, axis=-1)


def successive_rejects_batch(tables, n):
    """Successive rejects on each replication; returns the recommended arms."""
    tables = np.asarray(tables, dtype=float)
    R, K, m = tables.shape
    sched = sr_schedule(n, K)
    if sched[-1] > m:
        raise ValueError("reward tables too short for the SR schedule")
    csum = np.cumsum(tables[:, :, : sched[-1]], axis=2)
    alive = np.ones((R, K), dtype=bool)
    rows = np.arange(R)
    for nk in sched:
        means = csum[:, :, nk - 1] / nk
        # lowest mean among survivors; ties reject the higher arm index
        key = np.where(alive, means, np.inf)
        low = key.min(axis=1, keepdims=True)
        cand = alive & (key == low)
        reject = K - 1 - np.argmax(cand[:, ::-1], axis=1)
        alive[rows, reject] = False
    return np.argmax(alive, axis=1)


def successive_rejects(env: EnvironmentSpec, n: int, rng) -> int:
    """Recommendation of successive rejects on one run of ``env``."""
    if n < env.K:
        raise BudgetError(f"budget n={n} smaller than K={env.K}")
    table = reward_table(env, sr_schedule(n, env.K)[-1], rng)
    return int(successive_rejects_batch(table[None], n)[0])


def uniform_batch(tables, n):
    """Round-robin allocation of the n pulls, then the best empirical mean."""
    tables = np.asarray(tables, dtype=float)
    R, K, m = tables.shape
    pulls = np.full(K, n // K) + (np.arange(K) < n % K)
    means = np.stack([tables[:, i, : pulls[i]].mean(axis=1) for i in range(K)], axis=1)
    return _argmax_low(means)


def _lockstep(tables, n, choose):
    """Generic sequential loop; ``choose(t, counts, sums)`` returns arms (R,)."""
    R, K, m = tables.shape
    counts = np.zeros((R, K), dtype=np.int64)
    sums = np.zeros((R, K))
    rows = np.arange(R)
    for t in range(1, n + 1):
        arm = choose(t, counts, sums)
        sums[rows, arm] += tables[rows, arm, counts[rows, arm]]
        counts[rows, arm] += 1
    return counts, sums


def _recommend(counts, sums):
    means = np.where(counts > 0, sums / np.maximum(counts, 1), -np.inf)
    return _argmax_low(means)


def ucbe_batch(tables, n, a):
    """UCB-E with exploration parameter ``a``."""
    tables = np.asarray(tables, dtype=float)

    def choose(t, counts, sums):
        return _argmax_low(ucbe_index(sums / np.maximum(counts, 1), counts, a))

    return _recommend(*_lockstep(tables, n, choose))


def estimated_hardness(means, counts):
    """Plug-in hardness from empirical gaps.

    Each empirical gap is floored at the half-width ``1 / (2 sqrt(T_i))`` of
    a one-standard-deviation band for a [0, 1] arm, so near-ties do not make
    the estimate explode. The empirical best arm is left out of the sum.
    """
    best = means.max(axis=-1, keepdims=True)
    gap = best - means
    floor = 0.5 / np.sqrt(np.maximum(counts, 1))
    terms = np.maximum(gap, floor) ** -2.0
    ib = _argmax_low(means)
    terms[np.arange(terms.shape[0]), ib] = 0.0
    return terms.sum(axis=-1)


def adaptive_ucbe_batch(tables, n, c, return_counts=False, H_known=None):
    """UCB-E where the hardness is re-estimated online.

    The budget is cut into K phases of ``ceil(n / K)`` pulls. The first phase
    uses ``H = K``; at the end of each phase the hardness is replaced by
    ``estimated_hardness`` of the current statistics, and the next phase runs
    UCB-E with ``a = c n / (2 H)``. Passing ``H_known`` freezes the estimate,
    which reduces the strategy to plain UCB-E.
    """
    tables = np.asarray(tables, dtype=float)
    R, K, m = tables.shape
    phase = math.ceil(n / K)
    H = np.full(R, float(K) if H_known is None else float(H_known))

    def choose(t, counts, sums):
        nonlocal H
        if H_known is None and t > 1 and (t - 1) % phase == 0:
            H = estimated_hardness(sums / np.maximum(counts, 1), counts)
        a = ucbe_exploration(c, n, H)[:, None]
        return _argmax_low(ucbe_index(sums / np.maximum(counts, 1), counts, a))

    counts, sums = _lockstep(tables, n, choose)
    J = _recommend(counts, sums)
    return (J, counts) if return_counts else J


def adaptive_ucbe(env: EnvironmentSpec, n: int, c: float, rng) -> int:
    if n < env.K:
        raise BudgetError(f"budget n={n} smaller than K={env.K}")
    table = reward_table(env, n, rng)
    return int(adaptive_ucbe_batch(table[None], n, c)[0])


def hoeffding_race_batch(tables, n, eps):
    """Hoeffding race under a total budget of n pulls.

    Survivors are sampled round-robin; after each sample every survivor gets
    a two-sided Hoeffding interval at level ``eps / (n K)`` and options whose
    upper bound falls below another's lower bound are discarded. The
    recommendation is the best empirical mean among survivors.
    """
    tables = np.asarray(tables, dtype=float)
    R, K, m = tables.shape
    level = eps / (2.0 * n * K)
    alive = np.ones((R, K), dtype=bool)
    last = np.full(R, -1)
    counts = np.zeros((R, K), dtype=np.int64)
    sums = np.zeros((R, K))
    rows = np.arange(R)
    idx = np.arange(K)
    for _ in range(n):
        after = alive & (idx[None, :] > last[:, None])
        arm = np.where(after.any(axis=1), np.argmax(after, axis=1), np.argmax(alive, axis=1))
        sums[rows, arm] += tables[rows, arm, counts[rows, arm]]
        counts[rows, arm] += 1
        last = arm
        means = sums / np.maximum(counts, 1)
        rad = hoeffding_radius(counts, level)
        lo = np.where(alive, means - rad, -np.inf).max(axis=1, keepdims=True)
        alive &= (means + rad) >= lo
    means = np.where(alive & (counts > 0), sums / np.maximum(counts, 1), -np.inf)
    return _argmax_low(means)
