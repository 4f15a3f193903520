"""
Aggregating two constant predictors
===================================

g1 = 1 and g2 = -1, Y in {-1, 1} with mean h. The best single function has
risk 2 - 2|h|; mixtures can do better, so excess risks may be negative.
"""
import math

import numpy as np

from banditlab import agg
from banditlab.env import replication_rng

n, h, lam = 1000, math.sqrt(math.log(1000) / 1000), 1 / 8
gx = np.array([1.0, -1.0])
rows = []
for i in range(200):
    D = agg.constant_pair_sample(h, n, replication_rng(2, i))
    rows.append([agg.constant_pair_excess(agg.pm_predict(D, lam, gx), h),
                 agg.constant_pair_excess(agg.empirical_star(D).predict(gx), h)])
rows = np.array(rows)
for name, col in zip(("progressive mixture", "empirical star"), rows.T):
    print(f"{name:20s} mean excess {col.mean():+.4f}  q95 {np.quantile(col, 0.95):+.4f}")

# the indirect mixture predicts from the feasible interval of each posterior;
# both mixtures average over prefixes, so they follow the whole sample path
D = agg.constant_pair_sample(h, 50, replication_rng(2, 0))
prefix_means = np.cumsum(D.Y) / np.arange(1, 51)
print("prefix means at 10, 25, 50:", prefix_means[[9, 24, 49]].round(2))
print("PM  prediction:", round(float(agg.pm_predict(D, 0.5, gx)), 4))
print("PIM prediction:", round(agg.pim_predict(D, 0.5, gx), 4))
