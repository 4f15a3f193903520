import math

import numpy as np
import pytest

from banditlab.env import ArmModel, replication_rng
from banditlab.stop import SampleLimitExceeded, StoppingConfig, as_sampler, ebgstop, race


def sampler(arm, seed, i=0):
    return as_sampler(arm, replication_rng(seed, i))


def test_constant_c():
    assert StoppingConfig(0.1, 0.1).c == pytest.approx(2343.9, abs=0.05)


def test_grid_strictly_increasing():
    g = StoppingConfig(0.1, 0.1).grid()
    ts = [next(g) for _ in range(200)]
    assert ts[0] == 20 and all(b > a for a, b in zip(ts, ts[1:]))
    assert ts[1] == math.ceil(1.1 * 20)


@pytest.mark.parametrize("kw", [dict(delta=0), dict(eps=1.0), dict(alpha=1.0), dict(q=0), dict(t1=0)])
def test_config_validation(kw):
    base = dict(delta=0.1, eps=0.1)
    base.update(kw)
    with pytest.raises(ValueError):
        StoppingConfig(**base)


def test_dirac_terminates():
    res = ebgstop(sampler(ArmModel.dirac(0.7), 0), StoppingConfig(0.1, 0.05), keep_trace=True)
    assert 0.63 <= res.estimate <= 0.77
    assert res.T >= 20


def test_trace_monotone():
    res = ebgstop(sampler(ArmModel.bernoulli(0.3), 1), StoppingConfig(0.1, 0.05), keep_trace=True)
    tr = res.trace
    assert tr["t"][0] == 20 and tr["t"][-1] == res.T
    assert np.all(np.diff(tr["LB"]) >= 0) and np.all(np.diff(tr["UB"]) <= 0)
    last = -1
    assert (1.1 * tr["LB"][last] >= 0.9 * tr["UB"][last])
    assert np.all(1.1 * tr["LB"][:-1] < 0.9 * tr["UB"][:-1])


def test_shifted_support_and_sign():
    # data in [-1, 0]; the estimate keeps the sign of the mean
    arm = ArmModel.bernoulli(0.8)
    gen = replication_rng(2, 0)
    res = ebgstop(lambda k: arm.sample(gen, k) - 1.0, StoppingConfig(0.1, 0.05, a=-1.0))
    assert res.estimate == pytest.approx(-0.2, rel=0.1)


def test_outside_support_is_an_error():
    with pytest.raises(ValueError):
        ebgstop([0.5] * 30 + [1.5] * 30, StoppingConfig(0.1, 0.05))


def test_zero_mean_hits_cap():
    with pytest.raises(SampleLimitExceeded):
        ebgstop(sampler(ArmModel.dirac(0.0), 0), StoppingConfig(0.1, 0.05), max_samples=5000)


def test_finite_stream_exhausted():
    with pytest.raises(SampleLimitExceeded):
        ebgstop([0.5] * 50, StoppingConfig(0.1, 0.05))


def test_bernoulli_half_coverage_and_cost():
    d, eps = 0.1, 0.05
    cfg = StoppingConfig(d, eps)
    arm = ArmModel.bernoulli(0.5)
    fails, Ts = 0, []
    for i in range(2000):
        res = ebgstop(sampler(arm, 3, i), cfg)
        fails += abs(res.estimate - 0.5) > d * 0.5
        Ts.append(res.T)
    assert fails / 2000 <= eps
    dm = d * 0.5
    shape = max(0.25 / dm**2, 1 / dm) * (math.log(2 / eps) + math.log(math.log(3 / dm)))
    assert shape / 4 <= np.mean(Ts) <= 4 * shape


def test_dirac_options_race():
    res = race([sampler(ArmModel.dirac(0.3), 0), sampler(ArmModel.dirac(0.7), 0)], 0.05, 1000)
    assert res.survivors == [1]
    # zero variance: radius (sqrt(2) + 4/3) log(3/level) / s, so O(log(1/level)) samples
    L = math.log(3 / (0.05 / (2 * 1000)))
    assert res.counts[0] <= (math.sqrt(2) + 4 / 3) * L / 0.2 + 1


def test_identical_options_no_discard():
    opts = [sampler(ArmModel.dirac(0.4), 0, i) for i in range(3)]
    res = race(opts, 0.05, 200)
    assert res.survivors == [0, 1, 2] and res.work_saved == 0.0


def test_race_validation():
    with pytest.raises(ValueError):
        race([sampler(ArmModel.dirac(0.4), 0)], 0.05, 10)
    with pytest.raises(ValueError):
        race([[0.1], [0.2]], 0.05, 10, radius="bogus")


def test_race_short_streams_stop():
    res = race([[0.1] * 5, [0.2] * 5], 0.05, 100)
    assert res.samples == 10 and res.survivors == [0, 1]


def test_low_variance_direction():
    means = np.linspace(0.3, 0.7, 10)
    arms = [ArmModel.finite([m - 0.05, m + 0.05], [0.5, 0.5]) for m in means]
    for trial in range(5):
        eb = race([sampler(a, trial, i) for i, a in enumerate(arms)], 0.05, 500)
        hf = race([sampler(a, trial, i) for i, a in enumerate(arms)], 0.05, 500, radius="hoeffding")
        assert eb.work_saved > hf.work_saved and len(eb.survivors) <= len(hf.survivors)


def test_race_rarely_discards_best():
    eps = 0.1
    arms = [ArmModel.bernoulli(0.5), ArmModel.bernoulli(0.45)]
    lost = 0
    for i in range(10**4):
        g = replication_rng(4, i).spawn(2)
        res = race([as_sampler(a, x) for a, x in zip(arms, g)], eps, 40)
        lost += 0 not in res.survivors
    assert lost / 10**4 <= eps
