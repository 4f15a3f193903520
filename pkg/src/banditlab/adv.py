"""Forecasters for oblivious adversarial bandits and related prediction games.

INF draws arm i with probability ``psi(G_i - C)`` where the normalization
constant ``C`` solves ``sum_i psi(G_i - C) = 1``. With an exponential ``psi``
this is the exponentially weighted forecaster; ``exp3_probabilities`` gives
the same distribution in closed form.

Batch runs (``play``) take a reward matrix and one row of uniforms per
replication for the arm draws (and one for label requests), so forecasters
fed the same uniforms are directly comparable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .env import replication_rng

__all__ = [
    "NormalizationError",
    "PsiFunction",
    "EstimatorKind",
    "EstimatedGains",
    "normalization_constant",
    "estimate_gains",
    "inf_init",
    "inf_step",
    "exp3_probabilities",
    "exp3_step",
    "exp3_defaults",
    "exp3_regret_bound",
    "exp3_constraint_ok",
    "Forecaster",
    "inf_bandit_default",
    "high_probability_default",
    "label_efficient_default",
    "le_bandit_default",
    "tracking_defaults",
    "PlayResult",
    "play",
    "draw_uniforms",
    "regret_of",
    "switching_regret",
    "switching_regret_bruteforce",
    "abel_rhs",
]


class NormalizationError(ArithmeticError):
    """The normalization root is not bracketed; psi is not admissible."""


@dataclass(frozen=True)
class PsiFunction:
    """``exp(eta x) + gamma/K`` or ``(eta / -x)^q + gamma/K`` on x < 0."""

    family: str
    eta: float
    K: int
    gamma: float = 0.0
    q: float = 2.0

    def __post_init__(self):
        if self.family not in ("exponential", "polynomial"):
            raise ValueError(f"unknown psi family {self.family!r}")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        if self.family == "polynomial" and self.q <= 1:
            raise ValueError("polynomial psi needs q > 1")

    @property
    def floor(self) -> float:
        return self.gamma / self.K

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "exponential":
            return np.exp(self.eta * x) + self.floor
        with np.errstate(divide="ignore"):
            return (self.eta / -x) ** self.q + self.floor

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "exponential":
            return self.eta * np.exp(self.eta * x)
        return self.q * self.eta**self.q * (-x) ** (-self.q - 1.0)

    def inverse(self, p):
        """Closed-form inverse on (gamma/K, inf)."""
        u = np.asarray(p, dtype=float) - self.floor
        if self.family == "exponential":
            return np.log(u) / self.eta
        return -self.eta * u ** (-1.0 / self.q)

    def check(self, grid=None) -> dict:
        """Numerically check the admissibility conditions on a grid of x < 0."""
        if grid is None:
            scale = self.eta if self.family == "polynomial" else 1.0 / self.eta
            grid = -scale * np.logspace(-3, 1.5, 2001)[::-1]
        x = np.sort(np.asarray(grid, dtype=float))
        v = self(x)
        dv = self.derivative(x)
        ratio = dv / v
        far = self(np.array([x[0] * 1e6]))[0]
        near = self(np.array([x[-1] * 1e-6]))[0]
        return {
            "increasing": bool(np.all(np.diff(v) > 0) and np.all(dv > 0)),
            "log_derivative_nondecreasing": bool(np.all(np.diff(ratio) >= -1e-12 * np.abs(ratio[1:]))),
            "left_limit_below_1_over_K": bool(min(far, self.floor + 1e-300) < 1.0 / self.K and self.floor < 1.0 / self.K),
            "right_limit_at_least_1": bool(near >= 1.0 - 1e-9),
        }


def normalization_constant(x, psi: PsiFunction, tol: float = 1e-12, return_residual=False):
    """Solve ``sum_i psi(x_i - C) = 1`` for C along the last axis of x.

    Bisection on ``(max x, max x - psi^-1(1/K)]`` followed by a guarded
    Newton polish.
    """
    x = np.asarray(x, dtype=float)
    m = x.max(axis=-1)
    lo0 = m
    hi0 = m - float(psi.inverse(1.0 / psi.K))

    def f(C):
        return psi(x - C[..., None]).sum(axis=-1) - 1.0

    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        fhi = f(hi0)
    if np.any(fhi > 1e-9) or not np.all(np.isfinite(hi0)):
        raise NormalizationError("normalization root not bracketed")
    lo, hi = lo0.copy(), hi0.copy()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.all((mid <= lo) | (mid >= hi)):
            break
        fm = f(mid)
        up = fm > 0
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    C = 0.5 * (lo + hi)
    C = np.where(C > lo0, C, hi)
    for _ in range(3):
        fc = f(C)
        d = psi.derivative(x - C[..., None]).sum(axis=-1)
        step = np.where(d > 0, fc / d, 0.0)
        Cn = C + step
        ok = (Cn > lo0) & (Cn <= hi0)
        fn = f(np.where(ok, Cn, C))
        C = np.where(ok & (np.abs(fn) <= np.abs(fc)), Cn, C)
    res = f(C)
    if np.any(~np.isfinite(res)) or np.any(np.abs(res) > max(tol, 1e-9)):
        raise NormalizationError(f"normalization residual {np.max(np.abs(res)):.3g}")
    C = C[()] if C.ndim == 0 else C
    return (C, res) if return_residual else C


@dataclass(frozen=True)
class EstimatorKind:
    """How unobserved gains are estimated.

    ``beta`` is the bias of the tracking and tightly biased kinds; ``delta``
    and ``m`` are the request probability and budget of the label-efficient
    kinds.
    """

    kind: str = "reward_magnifying"
    beta: float = 0.0
    delta: float | None = None
    m: int | None = None

    KINDS = ("reward_magnifying", "loss_magnifying", "tracking", "tightly_biased",
             "label_efficient", "le_bandit")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.kind in ("label_efficient", "le_bandit"):
            if self.m is None or self.delta is None:
                raise ValueError("label-efficient estimators need m and delta")

    @property
    def full_information(self) -> bool:
        return self.kind == "label_efficient"

    @property
    def requests(self) -> bool:
        return self.kind in ("label_efficient", "le_bandit")

    @classmethod
    def label_efficient(cls, n, m, bandit=False):
        return cls("le_bandit" if bandit else "label_efficient", delta=3.0 * m / (4.0 * n), m=int(m))


def estimate_gains(est: EstimatorKind, arm, reward, p, z=None, g_full=None):
    """Gain estimates for one round, batched over a leading axis.

    ``arm`` and ``reward`` are the drawn arms and their gains, ``p`` the
    sampling distributions, ``z`` the label-request indicators and ``g_full``
    the whole gain vectors (full-information label-efficient game only).
    """
    p = np.asarray(p, dtype=float)
    arm = np.asarray(arm)
    reward = np.asarray(reward, dtype=float)[..., None]
    onehot = np.arange(p.shape[-1]) == arm[..., None]
    k = est.kind
    if k == "reward_magnifying":
        return np.where(onehot, reward / p, 0.0)
    if k == "loss_magnifying":
        return 1.0 - np.where(onehot, (1.0 - reward) / p, 0.0)
    if k == "tracking":
        return np.where(onehot, reward / p, 0.0) + est.beta / p
    if k == "tightly_biased":
        return np.where(onehot, reward * (1.0 + est.beta * reward / p) / p, 0.0)
    z = np.asarray(z, dtype=float)[..., None]
    if k == "label_efficient":
        return np.asarray(g_full, dtype=float) * z / est.delta
    return np.where(onehot, reward / p, 0.0) * z / est.delta


@dataclass
class EstimatedGains:
    G: np.ndarray
    p: np.ndarray
    C: float = float("nan")
    queries: int = 0


def inf_init(K: int) -> EstimatedGains:
    return EstimatedGains(np.zeros(K), np.full(K, 1.0 / K))


def _request(est: EstimatorKind, queries, u):
    """Label request: Bernoulli(delta) unless the budget m is used up."""
    return (u < est.delta) & (queries < est.m)


def inf_step(state: EstimatedGains, arm: int, reward: float, est: EstimatorKind,
             psi: PsiFunction, z_uniform: float | None = None, g_full=None) -> EstimatedGains:
    """One INF update after arm ``arm`` paid ``reward``."""
    queries = state.queries
    z = None
    if est.requests:
        z = bool(_request(est, queries, 1.0 if z_uniform is None else z_uniform))
        queries += int(z)
    g = estimate_gains(est, arm, reward, state.p, z=z, g_full=g_full)
    G = state.G + g
    C = normalization_constant(G, psi)
    return EstimatedGains(G, psi(G - C), float(C), queries)


def exp3_probabilities(G, eta, gamma):
    """``gamma/K + (1 - gamma) softmax(eta G)`` along the last axis."""
    G = np.asarray(G, dtype=float)
    K = G.shape[-1]
    w = eta * G
    w = np.exp(w - w.max(axis=-1, keepdims=True))
    q = w / w.sum(axis=-1, keepdims=True)
    return gamma / K + (1.0 - gamma) * q


def exp3_step(state: EstimatedGains, arm: int, reward: float, est: EstimatorKind,
              eta: float, gamma: float) -> EstimatedGains:
    g = estimate_gains(est, arm, reward, state.p)
    G = state.G + g
    return EstimatedGains(G, exp3_probabilities(G, eta, gamma), state.C, state.queries)


def exp3_defaults(n: int, K: int):
    eta = math.sqrt(5.0 * math.log(K) / (4.0 * n * K))
    gamma = min(math.sqrt(4.0 * K * math.log(K) / (5.0 * n)), 1.0)
    return eta, gamma


def exp3_constraint_ok(eta, gamma, K) -> bool:
    """Whether ``4 eta K <= 5 gamma`` (up to rounding), needed for the regret bound."""
    return 4.0 * eta * K <= 5.0 * gamma * (1.0 + 1e-12)


def exp3_regret_bound(n, K):
    return math.sqrt(16.0 / 5.0 * n * K * math.log(K))


@dataclass(frozen=True)
class Forecaster:
    """A configured INF or EXP3 forecaster."""

    kind: str  # "inf" or "exp3"
    K: int
    estimator: EstimatorKind = EstimatorKind()
    psi: PsiFunction | None = None
    eta: float = 0.0
    gamma: float = 0.0
    warnings: tuple = field(default=())

    @classmethod
    def exp3(cls, n, K, eta=None, gamma=None, estimator=None):
        e0, g0 = exp3_defaults(n, K)
        eta = e0 if eta is None else eta
        gamma = g0 if gamma is None else gamma
        w = () if exp3_constraint_ok(eta, gamma, K) else ("4 eta K > 5 gamma: regret bound does not apply",)
        return cls("exp3", K, estimator or EstimatorKind(), eta=eta, gamma=gamma, warnings=w)

    @classmethod
    def inf(cls, psi: PsiFunction, estimator=None):
        return cls("inf", psi.K, estimator or EstimatorKind(), psi=psi)

    def probabilities(self, G):
        if self.kind == "exp3":
            return exp3_probabilities(G, self.eta, self.gamma), None
        C = normalization_constant(G, self.psi)
        return self.psi(G - np.asarray(C)[..., None]), C


def inf_bandit_default(n: int, K: int) -> Forecaster:
    """Polynomial psi ``(3 sqrt(n) / -x)^2 + 1/sqrt(nK)`` with unbiased estimates."""
    psi = PsiFunction("polynomial", eta=3.0 * math.sqrt(n), K=K, gamma=math.sqrt(K / n), q=2.0)
    return Forecaster.inf(psi)


def high_probability_default(n: int, K: int) -> Forecaster:
    """Same psi, with the bias ``1 / (p_i sqrt(nK))`` added to every estimate."""
    f = inf_bandit_default(n, K)
    return replace(f, estimator=EstimatorKind("tracking", beta=1.0 / math.sqrt(n * K)))


def label_efficient_default(n: int, K: int, m: int) -> Forecaster:
    psi = PsiFunction("exponential", eta=math.sqrt(m * math.log(K)) / n, K=K)
    return Forecaster.inf(psi, EstimatorKind.label_efficient(n, m))


def le_bandit_default(n: int, K: int, m: int) -> Forecaster:
    psi = PsiFunction("polynomial", eta=3.0 * n / math.sqrt(m), K=K, gamma=math.sqrt(K / n), q=2.0)
    return Forecaster.inf(psi, EstimatorKind.label_efficient(n, m, bandit=True))


def tracking_defaults(n: int, K: int, S: int):
    """(gamma, eta, beta, psi) for tracking the best switching strategy."""
    s_tilde = (S * math.log(math.e * n * K / S) if S > 0 else 0.0) + math.log(2 * K)
    gamma = min(0.5, math.sqrt(K * s_tilde / n))
    eta = math.sqrt(s_tilde / (20.0 * n * K))
    beta = 2.0 * math.sqrt(s_tilde / (n * K))
    return gamma, eta, beta, PsiFunction("exponential", eta=eta, K=K, gamma=gamma)


@dataclass
class PlayResult:
    arms: np.ndarray  # (R, n)
    rewards: np.ndarray  # (R, n)
    probs: np.ndarray | None = None  # (R, n + 1, K)
    C: np.ndarray | None = None  # (R, n)
    queries: np.ndarray | None = None  # (R,)
    estimates: np.ndarray | None = None  # (R, n, K)


def draw_uniforms(seed: int, indices, n: int):
    """Per-replication uniforms for arm draws and label requests, shape (R, n) each."""
    arm_u, z_u = [], []
    for i in indices:
        rng = replication_rng(seed, i)
        arm_u.append(rng.random(n))
        z_u.append(rng.random(n))
    return np.array(arm_u), np.array(z_u)


def play(forecaster: Forecaster, matrix, arm_u, z_u=None, record=False) -> PlayResult:
    """Play an oblivious reward matrix (n x K) once per row of ``arm_u``."""
    matrix = np.asarray(matrix, dtype=float)
    n, K = matrix.shape
    arm_u = np.atleast_2d(arm_u)
    R = arm_u.shape[0]
    est = forecaster.estimator
    if est.requests and z_u is None:
        raise ValueError("label-efficient play needs request uniforms")
    G = np.zeros((R, K))
    p = np.full((R, K), 1.0 / K)
    queries = np.zeros(R, dtype=np.int64)
    arms = np.empty((R, n), dtype=np.int64)
    rewards = np.empty((R, n))
    probs = np.empty((R, n + 1, K)) if record else None
    Cs = np.empty((R, n)) if record else None
    ests = np.empty((R, n, K)) if record else None
    rows = np.arange(R)
    for t in range(n):
        if record:
            probs[:, t] = p
        cp = np.cumsum(p, axis=1)
        arm = np.argmax(cp > (arm_u[:, t] * cp[:, -1])[:, None], axis=1)
        g = matrix[t, arm]
        z = None
        if est.requests:
            z = _request(est, queries, z_u[:, t])
            queries += z
        gt = estimate_gains(est, arm, g, p, z=z, g_full=np.broadcast_to(matrix[t], (R, K)))
        G += gt
        p, C = forecaster.probabilities(G)
        arms[:, t] = arm
        rewards[rows, t] = g
        if record:
            Cs[:, t] = C if C is not None else np.nan
            ests[:, t] = gt
    if record:
        probs[:, n] = p
    return PlayResult(arms, rewards, probs, Cs, queries, ests)


def regret_of(matrix, result: PlayResult) -> np.ndarray:
    """Realized regret per replication against the best fixed arm."""
    matrix = np.asarray(matrix, dtype=float)
    n = result.arms.shape[1]
    return matrix[:n].sum(axis=0).max() - result.rewards.sum(axis=1)


def abel_rhs(psi: PsiFunction, probs, C_n):
    """Right-hand side of the Abel rearrangement of the forecaster's gain.

    ``C_n + sum_i p_{i,n+1} psi^-1(p_{i,n+1})
    + sum_i sum_t psi^-1(p_{i,t+1}) (p_{i,t} - p_{i,t+1})``
    for one run with probability history ``probs`` of shape (n + 1, K).
    """
    probs = np.asarray(probs, dtype=float)
    inv = psi.inverse(probs[1:])
    last = probs[-1]
    return float(C_n + last @ psi.inverse(last) + np.sum(inv * (probs[:-1] - probs[1:])))


def switching_regret(matrix, actions, S: int) -> float:
    """Regret against the best action sequence with at most S switches (exact DP)."""
    g = np.asarray(matrix, dtype=float)
    n, K = g.shape
    if not 0 <= S <= max(n - 1, 0):
        raise ValueError("S must lie in [0, n - 1]")
    actions = np.asarray(actions)
    obtained = g[np.arange(n), actions].sum()
    # best[s, i]: best gain so far ending on arm i having used exactly <= s switches
    best = np.tile(g[0], (S + 1, 1))
    for t in range(1, n):
        switch_in = np.full((S + 1, K), -np.inf)
        switch_in[1:] = best[:-1].max(axis=1, keepdims=True)
        best = np.maximum(best, switch_in) + g[t]
    return float(best.max() - obtained)


def switching_regret_bruteforce(matrix, actions, S: int) -> float:
    """Enumeration over all K^n strategies; for tests on tiny inputs."""
    import itertools

    g = np.asarray(matrix, dtype=float)
    n, K = g.shape
    obtained = g[np.arange(n), np.asarray(actions)].sum()
    best = -np.inf
    for seq in itertools.product(range(K), repeat=n):
        if sum(a != b for a, b in zip(seq, seq[1:])) <= S:
            best = max(best, g[np.arange(n), seq].sum())
    return float(best - obtained)
