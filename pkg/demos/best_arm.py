"""
Finding the best of thirty arms on a fixed budget
=================================================
"""
import numpy as np

from banditlab.env import EnvironmentSpec, gaps, reward_tables
from banditlab import pure

means = [0.5] + [0.45] * 5 + [0.43] * 14 + [0.38] * 10
env = EnvironmentSpec.bernoulli(means)
n, reps = 6000, 300
print("hardness H =", round(pure.hardness(gaps(env)), 1))
print("successive rejects phase lengths:", pure.sr_schedule(n, env.K)[:5], "...")

tables = reward_tables(env, n, seed=3, indices=range(reps))
picks = {
    "uniform": pure.uniform_batch(tables, n),
    "hoeffding race": pure.hoeffding_race_batch(tables, n, 0.1),
    "successive rejects": pure.successive_rejects_batch(tables, n),
    "adaptive UCB-E": pure.adaptive_ucbe_batch(tables, n, 4.0),
}
for name, J in picks.items():
    print(f"{name:20s} error {np.mean(J != 0):.3f}  simple regret {np.mean(gaps(env)[J]):.4f}")
