"""Upper-confidence index policies for stochastic bandits.

``IndexPolicy`` is the step-by-step agent. ``simulate`` plays the same rule
on a stack of reward tables in lockstep, one replication per leading index,
and is what the Monte Carlo experiments use.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .env import ArmStatistics, EnvironmentSpec, RegretLedger, running_variance

log = logging.getLogger(__name__)

__all__ = [
    "VARIANTS",
    "index",
    "IndexPolicy",
    "simulate",
    "play",
    "many_armed_schedule",
    "ManyArmedResult",
    "play_many_armed",
]

VARIANTS = ("ucb1", "auer_variance", "ucbv", "ucb_horizon", "minimax", "many_armed")


def index(variant, mean, var, s, t, n=None, K=None, zeta=1.2):
    """Upper confidence index B_{i,s,t}; +inf where s = 0.

    Broadcasts over arrays. ``n`` is needed by ``ucb_horizon`` and
    ``minimax``, ``K`` by ``minimax`` and ``zeta`` by ``ucbv``.
    """
    mean = np.asarray(mean, dtype=float)
    var = np.asarray(var, dtype=float)
    s = np.asarray(s, dtype=float)
    sp = np.maximum(s, 1.0)
    logt = np.log(np.asarray(t, dtype=float))
    if variant == "ucb1":
        b = mean + np.sqrt(2.0 * logt / sp)
    elif variant == "auer_variance":
        v = np.minimum(var + np.sqrt(2.0 * logt / sp), 0.25)
        b = mean + np.sqrt(v * logt / sp)
    elif variant == "ucbv":
        b = mean + np.sqrt(2.0 * zeta * var * logt / sp) + 3.0 * zeta * logt / sp
    elif variant == "ucb_horizon":
        ln = math.log(n)
        b = mean + np.sqrt(6.0 * var * ln / sp) + 9.0 * ln / sp
    elif variant == "minimax":
        b = mean + np.sqrt(np.log(np.maximum(n / (K * sp), 1.0)) / sp)
    elif variant == "many_armed":
        # log(10 log t) is negative for t < e^0.1; the bonus is floored at 0 there
        with np.errstate(divide="ignore"):
            e = np.maximum(np.log(10.0 * logt), 0.0)
        b = mean + np.sqrt(4.0 * var * e / sp) + 6.0 * e / sp
    else:
        raise ValueError(f"unknown index variant {variant!r}")
    b = np.where(s > 0, b, np.inf)
    return b[()] if b.ndim == 0 else b


@dataclass
class IndexPolicy:
    """Pull each arm once, then the arm with the largest index (lowest index on ties)."""

    variant: str
    K: int
    n: int | None = None
    zeta: float = 1.2

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown index variant {self.variant!r}")
        if self.variant in ("ucb_horizon", "minimax") and self.n is None:
            raise ValueError(f"{self.variant} needs the horizon n")
        if self.variant == "ucbv" and self.zeta <= 1:
            log.warning("UCB-V with zeta=%g <= 1 has no logarithmic regret guarantee", self.zeta)
        self.stats = ArmStatistics(self.K)
        self.t = 0

    @classmethod
    def from_dict(cls, d: dict, K: int, n: int | None = None) -> "IndexPolicy":
        return cls(d["policy"], K, n=d.get("n", n), zeta=d.get("zeta", 1.2))

    def indices(self, t: int) -> np.ndarray:
        st = self.stats
        return index(self.variant, st.means, st.variances, st.counts, t,
                     n=self.n, K=self.K, zeta=self.zeta)

    def select_arm(self) -> int:
        t = self.t + 1
        if t <= self.K:
            return t - 1
        return int(np.argmax(self.indices(t)))

    def update(self, arm: int, reward: float) -> None:
        self.stats.update(arm, reward)
        self.t += 1


def play(policy: IndexPolicy, env: EnvironmentSpec, n: int, table: np.ndarray) -> RegretLedger:
    """Run ``policy`` for n rounds, arm i's s-th pull returning ``table[i, s]``."""
    ledger = RegretLedger(env, table=table)
    for _ in range(n):
        arm = policy.select_arm()
        r = float(table[arm, policy.stats.counts[arm]])
        policy.update(arm, r)
        ledger.record(arm, r)
    return ledger


def simulate(variant, tables, n=None, zeta=1.2, horizon=None):
    """Play an index policy on each table of ``tables`` (shape R x K x m).

    Returns the final pull counts (R x K) and the summed rewards (R,).
    ``horizon`` is the n seen by the index (defaults to the number of rounds).
    """
    tables = np.asarray(tables, dtype=float)
    R, K, m = tables.shape
    n = m if n is None else n
    horizon = n if horizon is None else horizon
    counts = np.zeros((R, K), dtype=np.int64)
    sums = np.zeros((R, K))
    sumsq = np.zeros((R, K))
    total = np.zeros(R)
    rows = np.arange(R)
    for t in range(1, n + 1):
        if t <= K:
            arm = np.full(R, t - 1)
        else:
            means = sums / counts
            var = running_variance(sums, sumsq, counts)
            b = index(variant, means, var, counts, t, n=horizon, K=K, zeta=zeta)
            arm = np.argmax(b, axis=1)
        r = tables[rows, arm, counts[rows, arm]]
        counts[rows, arm] += 1
        sums[rows, arm] += r
        sumsq[rows, arm] += r * r
        total += r
    return counts, total


def many_armed_schedule(t, beta, mu_star_known_lt_1=False):
    """Number of arms that should have been sampled by time t."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    expo = beta / 2.0 if (mu_star_known_lt_1 and beta < 1) else beta / (1.0 + beta)
    # ceil of a float power: snap values that are integers up to rounding
    x = t**expo
    r = round(x)
    return int(r) if abs(x - r) < 1e-9 else int(math.ceil(x))


@dataclass
class ManyArmedResult:
    arm_means: np.ndarray
    arms: np.ndarray
    rewards: np.ndarray
    pseudo_regret: float


def play_many_armed(new_arm, n, beta, rng, mu_star=1.0, mu_star_known_lt_1=False):
    """Arm-increasing rule over an unbounded reservoir of arms.

    ``new_arm(rng)`` returns an ``ArmModel`` whose mean is drawn from the
    reservoir. A new arm is added and pulled once whenever fewer arms than
    ``many_armed_schedule(t)`` have been sampled; otherwise the sampled arm
    with the largest ``many_armed`` index is pulled. Pseudo-regret is
    ``n mu_star - sum_t mu_{I_t}``.
    """
    models = []
    counts, sums, sumsq = [], [], []
    arms = np.empty(n, dtype=np.int64)
    rewards = np.empty(n)
    for t in range(1, n + 1):
        if len(models) < many_armed_schedule(t, beta, mu_star_known_lt_1):
            models.append(new_arm(rng))
            counts.append(0)
            sums.append(0.0)
            sumsq.append(0.0)
            arm = len(models) - 1
        else:
            c = np.asarray(counts, dtype=float)
            s = np.asarray(sums)
            v = running_variance(s, np.asarray(sumsq), c)
            arm = int(np.argmax(index("many_armed", s / c, v, c, t)))
        r = float(models[arm].sample(rng))
        counts[arm] += 1
        sums[arm] += r
        sumsq[arm] += r * r
        arms[t - 1] = arm
        rewards[t - 1] = r
    mu = np.array([m.mean for m in models])
    return ManyArmedResult(mu, arms, rewards, float(n * mu_star - mu[arms].sum()))
