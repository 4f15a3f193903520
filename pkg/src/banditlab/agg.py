"""Aggregation of d given prediction functions under squared loss.

A ``Dictionary`` holds the values ``G[i, j] = g_j(X_i)`` on the training
sample and the outputs ``Y``. Predictions at a query point x take the vector
``gx[j] = g_j(x)`` (or a matrix with one row per query point).
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

log = logging.getLogger(__name__)

__all__ = [
    "PIMFailure",
    "Dictionary",
    "gibbs_weights",
    "pm_predict",
    "pim_feasible_interval",
    "pim_hat",
    "pim_predict",
    "StarPredictor",
    "empirical_star",
    "batchify",
    "expected_prefix_risk",
    "constant_pair_risk",
    "constant_pair_excess",
    "constant_pair_sample",
]


class PIMFailure(ArithmeticError):
    """No prediction satisfies the indirect-mixture inequality."""


@dataclass
class Dictionary:
    G: np.ndarray  # (n, d)
    Y: np.ndarray  # (n,)
    B: float | None = None

    def __post_init__(self):
        self.G = np.atleast_2d(np.asarray(self.G, dtype=float))
        self.Y = np.asarray(self.Y, dtype=float).reshape(-1)
        if self.G.shape[0] != self.Y.size:
            if self.Y.size == 0 and self.G.size == 0:
                self.G = self.G.reshape(0, max(self.G.shape[1], 1))
            else:
                raise ValueError("G needs one row per output")
        if self.B is None:
            vals = np.concatenate([np.abs(self.G).ravel(), np.abs(self.Y)])
            self.B = float(vals.max()) if vals.size else 1.0
        elif np.any(np.abs(self.G) > self.B) or np.any(np.abs(self.Y) > self.B):
            raise ValueError(f"values exceed the bound B={self.B}")

    @property
    def n(self) -> int:
        return self.Y.size

    @property
    def d(self) -> int:
        return self.G.shape[1]

    def cumulative_losses(self) -> np.ndarray:
        """(n + 1, d) array; row i holds sum_{k <= i} (Y_k - g_j(X_k))^2, row 0 is zero."""
        sq = (self.Y[:, None] - self.G) ** 2
        return np.vstack([np.zeros((1, self.d)), np.cumsum(sq, axis=0)])

    def empirical_risk(self) -> np.ndarray:
        return np.mean((self.Y[:, None] - self.G) ** 2, axis=0)

    @classmethod
    def from_csv(cls, path, B=None) -> "Dictionary":
        """First column Y, remaining d columns the function values; header optional."""
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]
        a = np.array(rows, dtype=float)
        return cls(a[:, 1:], a[:, 0], B)


def gibbs_weights(cum_losses, lam):
    """Weights proportional to ``exp(-lam * cumulative loss)`` under a uniform prior."""
    return softmax(-lam * np.asarray(cum_losses, dtype=float), axis=-1)


def _check_lam(lam, B, limit, what):
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if lam > limit / B**2:
        log.warning("%s guarantee needs lambda <= %g / B^2 (got lambda=%g, B=%g)", what, limit, lam, B)


def pm_predict(D: Dictionary, lam: float, gx):
    """Progressive mixture: average over i = 0..n of the Gibbs posterior means."""
    _check_lam(lam, D.B, 1.0 / 8.0, "progressive mixture")
    W = gibbs_weights(D.cumulative_losses(), lam)  # (n + 1, d)
    wbar = W.mean(axis=0)
    return np.asarray(gx, dtype=float) @ wbar


def _A(y, w, v, lam):
    # A(y) = -(1/lam) log sum_j w_j exp(-lam (y - v_j)^2), with tilted mean
    y = np.asarray(y, dtype=float)[..., None]
    e = -lam * (y - v) ** 2
    with np.errstate(divide="ignore"):
        lw = np.log(w)
    s = logsumexp(e + lw, axis=-1)
    A = np.maximum(-s / lam, 0.0)
    tilt = np.exp(e + lw - s[..., None]) @ v
    return A, tilt


def pim_feasible_interval(w, v, lam, B=1.0, grid=1001, refine=20):
    """Intersection over y in [-B, B] of ``[y - sqrt(A(y)), y + sqrt(A(y))]``.

    A(y) is evaluated on a uniform grid; the binding y of each endpoint is
    refined by bisection on the derivative ``1 -+ (y - tilted mean) / sqrt(A)``.
    Returns (lower, upper); the set is empty when lower > upper.
    """
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    ys = np.linspace(-B, B, grid)
    A, _ = _A(ys, w, v, lam)
    r = np.sqrt(A)
    ends = []
    for sign in (-1.0, 1.0):
        h = ys + sign * r  # lower end maximizes y - r, upper end minimizes y + r
        k = int(np.argmax(h) if sign < 0 else np.argmin(h))
        best = h[k]
        a, b = ys[max(k - 1, 0)], ys[min(k + 1, grid - 1)]
        for _ in range(refine):
            mid = 0.5 * (a + b)
            Am, tm = _A(mid, w, v, lam)
            sA = math.sqrt(max(float(Am), 1e-300))
            slope = 1.0 + sign * (mid - float(tm)) / sA
            # move toward the extremum of y + sign * sqrt(A)
            if (slope > 0) == (sign < 0):
                a = mid
            else:
                b = mid
        yb = 0.5 * (a + b)
        hb = yb + sign * math.sqrt(float(_A(yb, w, v, lam)[0]))
        best = max(best, hb) if sign < 0 else min(best, hb)
        ends.append(float(best))
    return ends[0], ends[1]


def pim_hat(w, v, lam, B=1.0, grid=1001, tol=1e-9):
    """Midpoint of the feasible set, re-verified on the grid; raises ``PIMFailure``."""
    lo, hi = pim_feasible_interval(w, v, lam, B, grid)
    if lo > hi + tol:
        raise PIMFailure(f"empty feasible set [{lo:.6g}, {hi:.6g}]")
    h = 0.5 * (lo + hi)
    ys = np.linspace(-B, B, grid)
    A, _ = _A(ys, w, v, lam)
    if np.any((h - ys) ** 2 > A + 1e-7):
        raise PIMFailure("midpoint fails the grid check")
    return h


def pim_predict(D: Dictionary, lam: float, gx, grid=1001):
    """Progressive indirect mixture at one query point (``gx`` of length d)."""
    gx = np.asarray(gx, dtype=float)
    if gx.ndim != 1:
        raise ValueError("pim_predict takes one query point")
    _check_lam(lam, D.B, 0.5, "indirect mixture non-failure")
    W = gibbs_weights(D.cumulative_losses(), lam)
    return float(np.mean([pim_hat(w, gx, lam, D.B, grid) for w in W]))


@dataclass(frozen=True)
class StarPredictor:
    """``alpha g_j + (1 - alpha) g_k``."""

    j: int
    k: int
    alpha: float

    def predict(self, gx):
        gx = np.asarray(gx, dtype=float)
        return self.alpha * gx[..., self.j] + (1.0 - self.alpha) * gx[..., self.k]


def empirical_star(D: Dictionary) -> StarPredictor:
    """Empirical risk minimizer over the segments joining the ERM to each g_k."""
    if D.n < 1:
        raise ValueError("empirical star needs at least one observation")
    r = D.empirical_risk()
    j = int(np.argmin(r))
    a = D.G[:, j]
    best = (r[j], j, 1.0)
    for k in range(D.d):
        if k == j:
            continue
        b = D.G[:, k]
        diff = a - b
        den = diff @ diff
        alpha = 1.0 if den == 0 else float(np.clip((D.Y - b) @ diff / den, 0.0, 1.0))
        risk = float(np.mean((D.Y - b - alpha * diff) ** 2))
        if risk < best[0]:
            best = (risk, k, alpha)
    _, k, alpha = best
    return StarPredictor(j, k, alpha)


def batchify(learner, data, mode, rng=None):
    """Turn a sequential learner into a single predictor.

    ``learner(prefix)`` returns a predictor (a callable) trained on
    ``data[:i]``. ``uniform_prefix_draw`` returns the predictor of a uniform
    random prefix length i in {0..n}; ``cesaro_average`` returns the average
    of the n + 1 prefix predictors.
    """
    n = len(data)
    if mode == "uniform_prefix_draw":
        rng = np.random.default_rng() if rng is None else rng
        return learner(data[: int(rng.integers(0, n + 1))])
    if mode == "cesaro_average":
        preds = [learner(data[:i]) for i in range(n + 1)]
        return lambda x: sum(p(x) for p in preds) / (n + 1)
    raise ValueError(f"unknown batchify mode {mode!r}")


def expected_prefix_risk(learner, data, risk):
    """Exact expected risk of ``uniform_prefix_draw``: mean risk over prefix lengths."""
    return float(np.mean([risk(learner(data[:i])) for i in range(len(data) + 1)]))


# Constant pair g_1 = 1, g_2 = -1 with Y in {-1, 1} and E Y = h.

def constant_pair_risk(c, h):
    """Risk ``E (Y - c)^2 = 1 - 2 h c + c^2`` of the constant prediction c."""
    c = np.asarray(c, dtype=float)
    return 1.0 - 2.0 * h * c + c * c


def constant_pair_excess(c, h):
    """Excess risk of constant c over the better of the two constants."""
    return constant_pair_risk(c, h) - (2.0 - 2.0 * abs(h))


def constant_pair_sample(h, n, rng):
    """A dictionary of n observations from the constant-pair problem."""
    Y = np.where(rng.random(n) < (1.0 + h) / 2.0, 1.0, -1.0)
    G = np.tile([1.0, -1.0], (n, 1))
    return Dictionary(G, Y, B=1.0)
