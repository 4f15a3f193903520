"""Reward models, environments, per-arm statistics and regret accounting.

Stochastic runs draw a reward table ``X[i, s]`` holding the ``s``-th reward
of arm ``i``. Policies consume rows in order, so every arm keeps its own i.i.d.
sequence and the draws an arm never received are still available for the
realized regret.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "ArmModel",
    "EnvironmentSpec",
    "ArmStatistics",
    "RegretLedger",
    "UnsupportedOperation",
    "replication_rng",
    "sample",
    "gaps",
    "reward_table",
    "reward_tables",
    "pseudo_regret",
    "regret",
    "load_matrix_csv",
]

PROB_TOL = 1e-12


class UnsupportedOperation(ValueError):
    """Operation not defined for this kind of environment."""


def replication_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for replication ``index`` of a run seeded by ``seed``.

    The stream depends only on ``(seed, index)``, so replications can be
    executed in any order or in parallel.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ArmModel:
    """A reward law on [0, 1].

    ``kind`` is one of ``bernoulli`` (``p``), ``dirac`` (``v``), ``uniform``
    (``a``, ``b``) or ``finite`` (``values``, ``probs``).
    """

    kind: str
    params: tuple = ()

    def __post_init__(self):
        k, p = self.kind, self.params
        if k == "bernoulli":
            (q,) = p
            if not 0.0 <= q <= 1.0:
                raise ValueError(f"bernoulli parameter {q} outside [0, 1]")
        elif k == "dirac":
            (v,) = p
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"dirac location {v} outside [0, 1]")
        elif k == "uniform":
            a, b = p
            if not 0.0 <= a <= b <= 1.0:
                raise ValueError(f"uniform support [{a}, {b}] not inside [0, 1]")
        elif k == "finite":
            values, probs = p
            values = np.asarray(values, dtype=float)
            probs = np.asarray(probs, dtype=float)
            if values.shape != probs.shape or values.ndim != 1 or values.size == 0:
                raise ValueError("finite arm needs matching 1-d values and probs")
            if np.any(values < 0) or np.any(values > 1):
                raise ValueError("finite arm support must lie in [0, 1]")
            if np.any(probs < 0) or abs(probs.sum() - 1.0) > PROB_TOL:
                raise ValueError("finite arm probabilities must sum to 1")
            object.__setattr__(self, "params", (tuple(values.tolist()), tuple(probs.tolist())))
        else:
            raise ValueError(f"unknown arm kind {k!r}")

    @classmethod
    def bernoulli(cls, p: float) -> "ArmModel":
        return cls("bernoulli", (float(p),))

    @classmethod
    def dirac(cls, v: float) -> "ArmModel":
        return cls("dirac", (float(v),))

    @classmethod
    def uniform(cls, a: float = 0.0, b: float = 1.0) -> "ArmModel":
        return cls("uniform", (float(a), float(b)))

    @classmethod
    def finite(cls, values: Sequence[float], probs: Sequence[float]) -> "ArmModel":
        return cls("finite", (tuple(values), tuple(probs)))

    @property
    def mean(self) -> float:
        k, p = self.kind, self.params
        if k == "bernoulli":
            return p[0]
        if k == "dirac":
            return p[0]
        if k == "uniform":
            return 0.5 * (p[0] + p[1])
        values, probs = np.asarray(p[0]), np.asarray(p[1])
        return float(values @ probs)

    @property
    def variance(self) -> float:
        k, p = self.kind, self.params
        if k == "bernoulli":
            return p[0] * (1.0 - p[0])
        if k == "dirac":
            return 0.0
        if k == "uniform":
            return (p[1] - p[0]) ** 2 / 12.0
        values, probs = np.asarray(p[0]), np.asarray(p[1])
        return float(((values - self.mean) ** 2) @ probs)

    def sample(self, rng: np.random.Generator, size=None):
        k, p = self.kind, self.params
        if k == "bernoulli":
            return (rng.random(size) < p[0]).astype(float) if size is not None else float(rng.random() < p[0])
        if k == "dirac":
            return np.full(size, p[0]) if size is not None else p[0]
        if k == "uniform":
            return rng.uniform(p[0], p[1], size)
        values, probs = p
        out = rng.choice(np.asarray(values), size=size, p=np.asarray(probs))
        return out if size is not None else float(out)

    def to_dict(self) -> dict:
        k, p = self.kind, self.params
        if k == "bernoulli":
            return {"kind": k, "p": p[0]}
        if k == "dirac":
            return {"kind": k, "v": p[0]}
        if k == "uniform":
            return {"kind": k, "a": p[0], "b": p[1]}
        return {"kind": k, "values": list(p[0]), "probs": list(p[1])}

    @classmethod
    def from_dict(cls, d: dict) -> "ArmModel":
        k = d["kind"]
        if k == "bernoulli":
            return cls.bernoulli(d["p"])
        if k == "dirac":
            return cls.dirac(d["v"])
        if k == "uniform":
            return cls.uniform(d.get("a", 0.0), d.get("b", 1.0))
        if k == "finite":
            return cls.finite(d["values"], d["probs"])
        raise ValueError(f"unknown arm kind {k!r}")


def sample(arm: ArmModel, rng: np.random.Generator, size=None):
    """Draw reward(s) from ``arm``; deterministic given the generator state."""
    return arm.sample(rng, size)


@dataclass(frozen=True)
class EnvironmentSpec:
    """Either K stochastic arms or an oblivious n x K reward matrix."""

    arms: tuple = ()
    matrix: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.matrix is None:
            if len(self.arms) < 2:
                raise ValueError("an environment needs K >= 2 arms")
            object.__setattr__(self, "arms", tuple(self.arms))
        else:
            m = np.array(self.matrix, dtype=float)
            if m.ndim != 2 or m.shape[1] < 2:
                raise ValueError("reward matrix must be n x K with K >= 2")
            if np.any(m < 0) or np.any(m > 1):
                raise ValueError("rewards must lie in [0, 1]")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)

    @classmethod
    def stochastic(cls, arms: Sequence[ArmModel]) -> "EnvironmentSpec":
        return cls(arms=tuple(arms))

    @classmethod
    def adversarial(cls, matrix) -> "EnvironmentSpec":
        return cls(matrix=matrix)

    @classmethod
    def bernoulli(cls, means: Sequence[float]) -> "EnvironmentSpec":
        return cls.stochastic([ArmModel.bernoulli(m) for m in means])

    @property
    def is_stochastic(self) -> bool:
        return self.matrix is None

    @property
    def K(self) -> int:
        return len(self.arms) if self.is_stochastic else self.matrix.shape[1]

    @property
    def means(self) -> np.ndarray:
        if not self.is_stochastic:
            raise UnsupportedOperation("adversarial environments have no arm means")
        return np.array([a.mean for a in self.arms])

    @property
    def variances(self) -> np.ndarray:
        if not self.is_stochastic:
            raise UnsupportedOperation("adversarial environments have no arm variances")
        return np.array([a.variance for a in self.arms])

    def __eq__(self, other):
        if not isinstance(other, EnvironmentSpec):
            return NotImplemented
        if self.is_stochastic != other.is_stochastic:
            return False
        if self.is_stochastic:
            return self.arms == other.arms
        return np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        if self.is_stochastic:
            return hash(self.arms)
        return hash(self.matrix.tobytes())

    def to_dict(self) -> dict:
        if self.is_stochastic:
            return {"kind": "stochastic", "arms": [a.to_dict() for a in self.arms]}
        return {"kind": "adversarial", "matrix": self.matrix.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "EnvironmentSpec":
        kind = d.get("kind")
        if kind == "stochastic":
            return cls.stochastic([ArmModel.from_dict(a) for a in d["arms"]])
        if kind == "adversarial":
            return cls.adversarial(d["matrix"])
        raise ValueError(f"unknown environment kind {kind!r}")

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "EnvironmentSpec":
        return cls.from_dict(json.loads(text))


def load_matrix_csv(path) -> EnvironmentSpec:
    """Adversarial environment from a CSV of n rows and K columns in [0, 1]."""
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    return EnvironmentSpec.adversarial(rows)


def gaps(env: EnvironmentSpec) -> np.ndarray:
    """Suboptimality gaps ``max_j mu_j - mu_i``."""
    if not env.is_stochastic:
        raise UnsupportedOperation("gaps are defined for stochastic environments only")
    mu = env.means
    return mu.max() - mu


def reward_table(env: EnvironmentSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """K x n table whose row i holds the first n rewards of arm i."""
    if not env.is_stochastic:
        raise UnsupportedOperation("reward tables are drawn for stochastic environments")
    return np.stack([np.asarray(a.sample(rng, n), dtype=float) for a in env.arms])


def reward_tables(env: EnvironmentSpec, n: int, seed: int, indices) -> np.ndarray:
    """Stack of per-replication tables, shape (len(indices), K, n)."""
    return np.stack([reward_table(env, n, replication_rng(seed, i)) for i in indices])


class ArmStatistics:
    """Running pull counts, sums and sums of squares per arm."""

    def __init__(self, K: int):
        self.counts = np.zeros(K, dtype=np.int64)
        self.sums = np.zeros(K)
        self.sumsq = np.zeros(K)

    @property
    def K(self) -> int:
        return self.counts.size

    def update(self, arm: int, reward: float) -> None:
        self.counts[arm] += 1
        self.sums[arm] += reward
        self.sumsq[arm] += reward * reward

    @property
    def means(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), 0.0)

    @property
    def variances(self) -> np.ndarray:
        return running_variance(self.sums, self.sumsq, self.counts)


def running_variance(sums, sumsq, counts) -> np.ndarray:
    """Biased empirical variance from running sums, clipped to [0, 1/4]."""
    s = np.maximum(counts, 1)
    m = sums / s
    v = sumsq / s - m * m
    return np.clip(np.where(counts > 0, v, 0.0), 0.0, 0.25)


@dataclass
class RegretLedger:
    """Arms played and rewards obtained, with the environment they came from.

    For stochastic runs ``table`` optionally keeps the full K x n reward
    table, which is what the realized regret compares against.
    """

    env: EnvironmentSpec
    arms: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    table: np.ndarray | None = None

    def record(self, arm: int, reward: float) -> None:
        self.arms.append(int(arm))
        self.rewards.append(float(reward))

    def __len__(self):
        return len(self.arms)


def pseudo_regret(ledger: RegretLedger) -> float:
    """Sum of the gaps of the arms played."""
    if not ledger.arms:
        return 0.0
    return float(gaps(ledger.env)[np.asarray(ledger.arms)].sum())


def regret(ledger: RegretLedger) -> float:
    """Best constant action's realized cumulative reward minus the obtained one."""
    n = len(ledger.arms)
    if n == 0:
        return 0.0
    obtained = float(np.sum(ledger.rewards))
    if ledger.env.is_stochastic:
        if ledger.table is None or ledger.table.shape[1] < n:
            raise UnsupportedOperation("realized regret needs the full reward table")
        best = ledger.table[:, :n].sum(axis=1).max()
    else:
        best = ledger.env.matrix[:n].sum(axis=0).max()
    return float(best - obtained)
