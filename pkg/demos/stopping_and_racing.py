"""
Stopping and racing with empirical Bernstein bounds
===================================================

Low variance data lets the variance-aware radius shrink far faster than
Hoeffding's.
"""
import numpy as np

from banditlab import bounds
from banditlab.env import ArmModel, replication_rng
from banditlab.stop import StoppingConfig, as_sampler, ebgstop, race

t = np.array([10, 100, 1000])
print("Hoeffding radius     ", bounds.hoeffding_radius(t, 0.05).round(4))
print("EB radius, var 0.0025", bounds.emp_bernstein_radius_twosided(t, 1000, 0.05, 0.0025).round(4))

# relative-accuracy stopping: smaller means need more samples
cfg = StoppingConfig(delta=0.1, eps=0.05)
for mu in (0.9, 0.5, 0.1):
    res = ebgstop(as_sampler(ArmModel.bernoulli(mu), replication_rng(0, 0)), cfg)
    print(f"mean {mu}: estimate {res.estimate:.3f} after {res.T} samples")

# ten options with spread +-0.05 around evenly spaced means
arms = [ArmModel.finite([m - 0.05, m + 0.05], [0.5, 0.5]) for m in np.linspace(0.3, 0.7, 10)]
for radius in ("hoeffding", "empirical_bernstein"):
    opts = [as_sampler(a, replication_rng(5, i)) for i, a in enumerate(arms)]
    res = race(opts, 0.05, 500, radius)
    print(f"{radius:20s} survivors {res.survivors}  work saved {res.work_saved:.3f}")
