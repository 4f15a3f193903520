"""Seeded Monte Carlo experiments: configuration, replication, CSV and summaries.

Replication i always draws from ``replication_rng(seed, i)`` (or from tables
built from it), so rows do not depend on chunking, worker count or order.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import adv, agg, pure, stoch
from .env import EnvironmentSpec, gaps, load_matrix_csv, replication_rng, reward_tables
from .stop import StoppingConfig, as_sampler, ebgstop, race

log = logging.getLogger(__name__)

__all__ = [
    "ConfigError",
    "METRICS",
    "POLICY_METRICS",
    "ExperimentConfig",
    "run",
    "write_csv",
    "read_csv",
    "to_csv_text",
    "parse_csv_text",
    "summarize",
    "histogram",
    "histogram_csv",
    "secondary_mode_test",
]

METRICS = ("pseudo_regret", "regret", "simple_regret", "error_prob", "stopping_time",
           "work_saved", "excess_risk")

POLICY_METRICS = {
    "index": {"pseudo_regret", "regret"},
    "best_arm": {"simple_regret", "error_prob"},
    "adversarial": {"regret"},
    "stopping": {"stopping_time", "error_prob"},
    "race": {"work_saved", "error_prob"},
    "aggregation": {"excess_risk"},
}

BEST_ARM = ("successive_rejects", "uniform", "ucbe", "adaptive_ucbe", "hoeffding_race")
ADVERSARIAL = ("exp3", "inf_bandit", "inf_exponential", "high_probability", "label_efficient",
               "le_bandit", "tracking")
AGGREGATION = ("pm", "pim", "star")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    environment: EnvironmentSpec | None
    policy: dict
    n: int
    replications: int
    seed: int = 0
    metrics: tuple = ()
    output: str | None = None
    chunk: int = 50

    @property
    def kind(self) -> str:
        return self.policy["kind"]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            env = None
            if d.get("environment") is not None:
                e = d["environment"]
                env = load_matrix_csv(e["csv"]) if "csv" in e else EnvironmentSpec.from_dict(e)
            cfg = cls(env, dict(d["policy"]), int(d["n"]), int(d.get("replications", 1)),
                      int(d.get("seed", 0)), tuple(d.get("metrics", ())), d.get("output"),
                      int(d.get("chunk", 50)))
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError, OSError) as exc:
            raise ConfigError(f"bad configuration: {exc}") from exc
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(d)

    def validate(self):
        kind = self.policy.get("kind")
        if kind not in POLICY_METRICS:
            raise ConfigError(f"unknown policy kind {kind!r}")
        if self.replications < 1 or self.n < 1 or self.chunk < 1:
            raise ConfigError("replications, n and chunk must be positive")
        if not self.metrics:
            self.metrics = tuple(m for m in METRICS if m in POLICY_METRICS[kind])
        bad = [m for m in self.metrics if m not in POLICY_METRICS[kind]]
        if bad:
            raise ConfigError(f"metrics {bad} are incompatible with policy kind {kind!r}")
        name = self.policy.get("policy")
        env = self.environment
        if kind != "aggregation" and env is None:
            raise ConfigError("an environment is required")
        if kind == "index":
            if name not in stoch.VARIANTS:
                raise ConfigError(f"unknown index policy {name!r}")
            if not env.is_stochastic:
                raise ConfigError("index policies need a stochastic environment")
            if name == "ucbv" and self.policy.get("zeta", 1.2) <= 1:
                log.warning("UCB-V with zeta=%g <= 1 has no logarithmic regret guarantee",
                            self.policy["zeta"])
        elif kind == "best_arm":
            if name not in BEST_ARM:
                raise ConfigError(f"unknown best-arm strategy {name!r}")
            if not env.is_stochastic:
                raise ConfigError("best-arm identification needs a stochastic environment")
            if self.n < env.K:
                raise ConfigError(f"budget n={self.n} smaller than K={env.K}")
            if np.count_nonzero(gaps(env) == 0) != 1:
                raise ConfigError("best-arm identification needs a unique best arm")
        elif kind == "adversarial":
            if name not in ADVERSARIAL:
                raise ConfigError(f"unknown adversarial forecaster {name!r}")
            if env.is_stochastic:
                raise ConfigError("adversarial forecasters need a reward matrix")
            if env.matrix.shape[0] < self.n:
                raise ConfigError("reward matrix has fewer than n rows")
            if name in ("label_efficient", "le_bandit") and "m" not in self.policy:
                raise ConfigError("label-efficient forecasters need a query budget m")
        elif kind in ("stopping", "race"):
            if not env.is_stochastic:
                raise ConfigError(f"{kind} needs a stochastic environment")
            if kind == "race" and env.K < 2:
                raise ConfigError("a race needs at least two options")
        elif kind == "aggregation":
            if name not in AGGREGATION:
                raise ConfigError(f"unknown aggregation rule {name!r}")

    def to_dict(self) -> dict:
        d = {"policy": self.policy, "n": self.n, "replications": self.replications,
             "seed": self.seed, "metrics": list(self.metrics), "chunk": self.chunk}
        if self.environment is not None:
            d["environment"] = self.environment.to_dict()
        if self.output is not None:
            d["output"] = self.output
        return d


def _forecaster(p: dict, n: int, K: int) -> adv.Forecaster:
    name = p["policy"]
    if name == "exp3":
        return adv.Forecaster.exp3(n, K, p.get("eta"), p.get("gamma"))
    if name == "inf_bandit":
        return adv.inf_bandit_default(n, K)
    if name == "inf_exponential":
        eta, gamma = adv.exp3_defaults(n, K)
        psi = adv.PsiFunction("exponential", p.get("eta", eta), K, p.get("gamma", gamma))
        return adv.Forecaster.inf(psi)
    if name == "high_probability":
        return adv.high_probability_default(n, K)
    if name == "label_efficient":
        return adv.label_efficient_default(n, K, int(p["m"]))
    if name == "le_bandit":
        return adv.le_bandit_default(n, K, int(p["m"]))
    gamma, eta, beta, psi = adv.tracking_defaults(n, K, int(p.get("S", 0)))
    return adv.Forecaster.inf(psi, adv.EstimatorKind("tracking", beta=beta))


def _chunk_rows(cfg: ExperimentConfig, idx: list) -> list:
    """Metric values for the replications in ``idx``."""
    p, n, env = cfg.policy, cfg.n, cfg.environment
    kind = cfg.kind
    out = {m: np.full(len(idx), np.nan) for m in cfg.metrics}
    if kind == "index":
        tables = reward_tables(env, n, cfg.seed, idx)
        counts, total = stoch.simulate(p["policy"], tables, n, zeta=p.get("zeta", 1.2))
        if "pseudo_regret" in out:
            out["pseudo_regret"] = counts @ gaps(env)
        if "regret" in out:
            out["regret"] = tables.sum(axis=2).max(axis=1) - total
    elif kind == "best_arm":
        tables = reward_tables(env, n, cfg.seed, idx)
        name, g = p["policy"], gaps(env)
        if name == "successive_rejects":
            J = pure.successive_rejects_batch(tables, n)
        elif name == "uniform":
            J = pure.uniform_batch(tables, n)
        elif name == "ucbe":
            H = p.get("H", pure.hardness(g))
            J = pure.ucbe_batch(tables, n, pure.ucbe_exploration(p.get("c", 1.0), n, H))
        elif name == "adaptive_ucbe":
            J = pure.adaptive_ucbe_batch(tables, n, p.get("c", 4.0))
        else:
            J = pure.hoeffding_race_batch(tables, n, p.get("eps", 0.1))
        if "simple_regret" in out:
            out["simple_regret"] = g[J]
        if "error_prob" in out:
            out["error_prob"] = (g[J] > 0).astype(float)
    elif kind == "adversarial":
        M = env.matrix[:n]
        f = _forecaster(p, n, env.K)
        arm_u, z_u = adv.draw_uniforms(cfg.seed, idx, n)
        out["regret"] = adv.regret_of(M, adv.play(f, M, arm_u, z_u))
    elif kind == "stopping":
        sc = StoppingConfig(p["delta"], p["eps"], p.get("q", 0.1), p.get("t1", 20),
                            p.get("alpha", 1.1), p.get("a", 0.0))
        arm = env.arms[0]
        for r, i in enumerate(idx):
            res = ebgstop(as_sampler(arm, replication_rng(cfg.seed, i)), sc,
                          max_samples=p.get("max_samples", 10**8))
            if "stopping_time" in out:
                out["stopping_time"][r] = res.T
            if "error_prob" in out:
                out["error_prob"][r] = float(abs(res.estimate - arm.mean) > sc.delta * abs(arm.mean))
    elif kind == "race":
        best = int(np.argmax(env.means))
        for r, i in enumerate(idx):
            gens = replication_rng(cfg.seed, i).spawn(env.K)
            opts = [as_sampler(a, g) for a, g in zip(env.arms, gens)]
            res = race(opts, p["eps"], n, p.get("radius", "empirical_bernstein"))
            if "work_saved" in out:
                out["work_saved"][r] = res.work_saved
            if "error_prob" in out:
                out["error_prob"][r] = float(best not in res.survivors)
    else:
        h, lam = p.get("h", 0.1), p.get("lam", 1.0 / 8.0)
        gx = np.array([1.0, -1.0])
        for r, i in enumerate(idx):
            D = agg.constant_pair_sample(h, n, replication_rng(cfg.seed, i))
            if p["policy"] == "pm":
                c = agg.pm_predict(D, lam, gx)
            elif p["policy"] == "pim":
                c = agg.pim_predict(D, lam, gx)
            else:
                c = agg.empirical_star(D).predict(gx)
            out["excess_risk"][r] = float(agg.constant_pair_excess(c, h))
    return [dict(replication=i, seed=cfg.seed, **{m: float(out[m][r]) for m in cfg.metrics})
            for r, i in enumerate(idx)]


def _run_chunk(args):
    cfg_dict, idx = args
    logging.getLogger("banditlab").setLevel(logging.ERROR)
    return _chunk_rows(ExperimentConfig.from_dict(cfg_dict), idx)


def run(cfg: ExperimentConfig | dict, jobs: int = 1, order=None) -> list:
    """One row per replication, sorted by replication index.

    ``order`` optionally permutes the replication indices before chunking;
    rows are identical whatever the order or number of jobs.
    """
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    reps = list(range(cfg.replications)) if order is None else [int(i) for i in order]
    chunks = [reps[k : k + cfg.chunk] for k in range(0, len(reps), cfg.chunk)]
    if jobs > 1 and len(chunks) > 1:
        d = cfg.to_dict()
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_run_chunk, [(d, c) for c in chunks]))
    else:
        parts = [_chunk_rows(cfg, c) for c in chunks]
    rows = [row for part in parts for row in part]
    return sorted(rows, key=lambda r: r["replication"])


def to_csv_text(rows: list) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    cols = list(rows[0])
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([repr(float(r[c])) if isinstance(r[c], (float, np.floating)) else r[c] for c in cols])
    return buf.getvalue()


def parse_csv_text(text: str) -> list:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for r in rows:
        out.append({k: int(v) if k in ("replication", "seed") else float(v) for k, v in r.items()})
    return out


def write_csv(rows: list, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(to_csv_text(rows))


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        return parse_csv_text(fh.read())


def summarize(rows: list, level: float = 0.95) -> dict:
    """Per metric: mean, standard error, normal CI, 5/50/95% quantiles.

    Proportions (``error_prob``) also get a Wilson interval.
    """
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if not rows:
        return {}
    z = stats.norm.ppf(0.5 + level / 2.0)
    res = {}
    for m in [c for c in rows[0] if c not in ("replication", "seed")]:
        x = np.array([r[m] for r in rows], dtype=float)
        x = x[~np.isnan(x)]
        N = x.size
        mean = float(x.mean()) if N else math.nan
        se = float(x.std(ddof=1) / math.sqrt(N)) if N >= 2 else math.nan
        q05, q50, q95 = (np.quantile(x, [0.05, 0.5, 0.95]) if N else [math.nan] * 3)
        s = {"n": N, "mean": mean, "se": se, "ci_low": mean - z * se, "ci_high": mean + z * se,
             "q05": float(q05), "q50": float(q50), "q95": float(q95)}
        if m == "error_prob" and N:
            ci = stats.binomtest(int(round(x.sum())), N).proportion_ci(level, method="wilson")
            s["wilson_low"], s["wilson_high"] = float(ci.low), float(ci.high)
        res[m] = s
    return res


def histogram(values, bins=50):
    """(edges, counts) of a binned histogram."""
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins)
    return edges, counts


def histogram_csv(values, bins=50) -> str:
    edges, counts = histogram(values, bins)
    lines = ["bin_low,bin_high,count"]
    lines += [f"{float(edges[k])!r},{float(edges[k + 1])!r},{int(counts[k])}" for k in range(counts.size)]
    return "\n".join(lines) + "\n"


@dataclass
class ModeTest:
    ll_gain: float
    main_mean: float
    main_sd: float
    second_mean: float
    second_weight: float
    detected: bool
    details: dict = field(default_factory=dict)


def secondary_mode_test(values, gain=10.0, z=2.326, seed=0) -> ModeTest:
    """Fit one and two Gaussian components; flag a mode right of the main one.

    Detected when the two-component fit improves the log-likelihood by more
    than ``gain`` and the minor component's mean lies beyond the main
    component's 99th percentile ``mean + z sd``.
    """
    from sklearn.mixture import GaussianMixture

    x = np.asarray(values, dtype=float).reshape(-1, 1)
    g1 = GaussianMixture(1, random_state=seed).fit(x)
    g2 = GaussianMixture(2, n_init=10, random_state=seed).fit(x)
    ll_gain = float((g2.score(x) - g1.score(x)) * x.shape[0])
    w = g2.weights_
    main, minor = (0, 1) if w[0] >= w[1] else (1, 0)
    mu = g2.means_.ravel()
    sd = np.sqrt(g2.covariances_.ravel())
    detected = ll_gain > gain and mu[minor] > mu[main] + z * sd[main]
    return ModeTest(ll_gain, float(mu[main]), float(sd[main]), float(mu[minor]), float(w[minor]),
                    bool(detected), {"minor_sd": float(sd[minor])})
