"""Bandit policies, empirical Bernstein stopping, adversarial forecasters and aggregation."""
from . import adv, agg, bounds, env, harness, pure, stoch, stop
from .env import ArmModel, EnvironmentSpec, replication_rng

__all__ = ["adv", "agg", "bounds", "env", "harness", "pure", "stoch", "stop",
           "ArmModel", "EnvironmentSpec", "replication_rng"]
__version__ = "0.1.0"
