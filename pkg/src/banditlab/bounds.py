"""Confidence radii for the mean of [0, 1]-valued samples.

All functions are pure and broadcast over numpy arrays. ``t`` is the number
of samples seen so far and ``n`` the horizon over which the bound holds
uniformly in time.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "VARIANCE_CLAMP_TOL",
    "hoeffding_radius",
    "emp_bernstein_radius",
    "emp_bernstein_radius_onesided",
    "emp_bernstein_radius_twosided",
    "emp_bernstein_simplified",
    "emp_variance_upper_bound",
    "maurer_pontil_radius",
    "fourth_moment_bound",
    "bernoulli_fourth_moment",
]

VARIANCE_CLAMP_TOL = 1e-9


def _check_var(var):
    var = np.asarray(var, dtype=float)
    if np.any(var > 0.25 + VARIANCE_CLAMP_TOL) or np.any(var < -VARIANCE_CLAMP_TOL):
        raise ValueError("empirical variance of [0, 1] data must lie in [0, 1/4]")
    return np.clip(var, 0.0, 0.25)


def _check_eps(eps):
    eps = np.asarray(eps, dtype=float)
    if np.any(eps <= 0) or np.any(eps >= 1):
        raise ValueError("confidence parameter must lie in (0, 1)")
    return eps


def _out(x):
    return x[()] if isinstance(x, np.ndarray) and x.ndim == 0 else x


def hoeffding_radius(s, eps):
    """One-sided Hoeffding radius ``sqrt(log(1/eps) / (2 s))``; infinite for s = 0."""
    s = np.asarray(s, dtype=float)
    eps = _check_eps(eps)
    with np.errstate(divide="ignore"):
        r = np.sqrt(np.log(1.0 / eps) / (2.0 * s))
    return _out(np.where(s > 0, r, np.inf))


def emp_bernstein_radius(ell, var):
    """Radius of the empirical Bernstein bound for a given log-term ``ell``.

    ``min(sqrt(2 l (V + l)) + l (1/3 + sqrt(1 - 3V)), sqrt(l / 2))``.
    """
    ell = np.asarray(ell, dtype=float)
    var = _check_var(var)
    tight = np.sqrt(2.0 * ell * (var + ell)) + ell * (1.0 / 3.0 + np.sqrt(1.0 - 3.0 * var))
    return _out(np.minimum(tight, np.sqrt(ell / 2.0)))


def _ell(t, n, log_term):
    t = np.asarray(t, dtype=float)
    n = np.asarray(n, dtype=float)
    if np.any(t < 1) or np.any(n < t):
        raise ValueError("need 1 <= t <= n")
    return n * log_term / t**2


def emp_bernstein_radius_onesided(t, n, eps, var):
    """Upper deviation radius, level 1 - eps uniformly over t <= n (log(2/eps))."""
    eps = _check_eps(eps)
    return emp_bernstein_radius(_ell(t, n, np.log(2.0 / eps)), var)


def emp_bernstein_radius_twosided(t, n, eps, var):
    """Two-sided radius, level 1 - eps uniformly over t <= n (log(3/eps))."""
    eps = _check_eps(eps)
    return emp_bernstein_radius(_ell(t, n, np.log(3.0 / eps)), var)


def emp_bernstein_simplified(t, n, eps, var):
    """Looser closed form ``sqrt(2 n V log(3/eps)) / t + 3 n log(3/eps) / t^2``."""
    eps = _check_eps(eps)
    var = _check_var(var)
    ell = _ell(t, n, np.log(3.0 / eps))
    return _out(np.sqrt(2.0 * var * ell) + 3.0 * ell)


def emp_variance_upper_bound(t, n, eps, var):
    """Upper bound on the true variance, valid with the two-sided radius."""
    eps = _check_eps(eps)
    var = _check_var(var)
    ell = _ell(t, n, np.log(3.0 / eps))
    return _out((np.sqrt(var + ell) + np.sqrt(0.5 * ell * (1.0 - 3.0 * var))) ** 2)


def maurer_pontil_radius(t, eps, unbiased_var):
    """Fixed-time radius from the unbiased variance ``t / (t - 1) * V``; needs t >= 2."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 2):
        raise ValueError("Maurer-Pontil radius needs t >= 2")
    eps = _check_eps(eps)
    return _out(_maurer_pontil(t, np.log(3.0 / eps), unbiased_var))


def _maurer_pontil(t, L, v):
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.sqrt(2.0 * L / t * (v + L / (2.0 * (t - 1.0)))) + 4.0 * L / (3.0 * (t - 1.0))


def fourth_moment_bound(V):
    """``V (1 - 3V)``, an upper bound on the fourth central moment of a [0, 1] variable."""
    V = np.asarray(V, dtype=float)
    if np.any(V < 0) or np.any(V > 0.25 + VARIANCE_CLAMP_TOL):
        raise ValueError("variance of a [0, 1] variable lies in [0, 1/4]")
    return _out(V * (1.0 - 3.0 * V))


def bernoulli_fourth_moment(p):
    """Exact fourth central moment of Bernoulli(p) by direct summation over {0, 1}."""
    p = np.asarray(p, dtype=float)
    return _out((1.0 - p) * p**4 + p * (1.0 - p) ** 4)
