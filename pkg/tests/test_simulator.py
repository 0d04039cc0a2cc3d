import math

import numpy as np
import pytest

from bestquote.dists import DistFamily, from_weights, l2_distance, linf_distance
from bestquote.errors import ConfigurationError, EmptyDistributionError
from bestquote.params import FlowParams
from bestquote.simulator import PathRecord, SimConfig, available_backends, histogram, merge, simulate
from bestquote.stationary import solve_type0

FULL = FlowParams(lambda0=0.2, lambda1=4.0, lambda2=2.0, mu=1.0, muA=0.1, theta1=0.2, theta2=0.2,
                  g0_spec=DistFamily.geometric(0.11), g1_spec=DistFamily.geometric(0.6),
                  g2_spec=DistFamily.geometric(0.6))


# --- histogram -------------------------------------------------------------------------

def test_histogram_single_segment():
    h = histogram(PathRecord.from_segments([(3, 10.0)]), "time")
    assert h.pmf(3) == 1.0 and h.probs.sum() == 1.0


def test_histogram_two_segments():
    h = histogram(PathRecord.from_segments([(2, 1.0), (5, 1.0)]), "time")
    assert h.pmf(2) == 0.5 and h.pmf(5) == 0.5
    path = PathRecord.from_segments([(2, 3.0), (5, 1.0)])
    t, e = histogram(path, "time"), histogram(path, "event")
    assert (t.pmf(2), t.pmf(5)) == (0.75, 0.25)
    assert (e.pmf(2), e.pmf(5)) == (0.5, 0.5)


def test_histogram_empty():
    with pytest.raises(EmptyDistributionError):
        histogram(PathRecord.from_segments([]), "time")


def test_merge_is_order_independent():
    a = simulate(SimConfig(FULL, events=2000, seed=1))
    b = simulate(SimConfig(FULL, events=3000, seed=2))
    ab, ba = merge([a, b]), merge([b, a])
    assert np.array_equal(ab.occupancy_visits, ba.occupancy_visits)
    assert linf_distance(histogram(ab), histogram(ba)) < 1e-15
    assert ab.event_counts == ba.event_counts


# --- simulate --------------------------------------------------------------------------

def test_horizon_zero_is_empty():
    path = simulate(SimConfig(FULL, horizon=0.0, seed=5))
    assert path.total_time == 0.0 and sum(path.event_counts.values()) == 0
    with pytest.raises(EmptyDistributionError):
        histogram(path)


def test_deterministic_per_seed():
    a = simulate(SimConfig(FULL, events=20_000, seed=42, record_log=True))
    b = simulate(SimConfig(FULL, events=20_000, seed=42, record_log=True))
    assert np.array_equal(a.occupancy_time, b.occupancy_time)
    assert a.log.to_csv() == b.log.to_csv()
    c = simulate(SimConfig(FULL, events=20_000, seed=43))
    assert not np.array_equal(a.occupancy_time, c.occupancy_time)


@pytest.mark.skipif(len(available_backends()) < 2, reason="compiled kernel not built")
@pytest.mark.parametrize("mode", ["coupled-queue", "resample-from-dist"])
def test_backends_agree(mode):
    cfgs = [SimConfig(FULL, events=30_000, seed=11, second_limit_mode=mode, record_log=True, backend=b)
            for b in ("cython", "python")]
    a, b = (simulate(c) for c in cfgs)
    assert np.array_equal(a.occupancy_time, b.occupancy_time)
    assert a.total_time == b.total_time and a.event_counts == b.event_counts
    assert a.log.to_csv() == b.log.to_csv()


def test_conservation_and_floor():
    path = simulate(SimConfig(FULL, horizon=500.0, seed=3, record_path=True))
    assert math.fsum(path.durations) == pytest.approx(path.total_time, rel=0, abs=1e-9)
    assert path.total_time == pytest.approx(500.0, abs=1e-9)
    assert path.volumes.min() >= 1
    assert np.all(path.durations >= 0)


def test_occupancy_matches_segments():
    path = simulate(SimConfig(FULL, events=10_000, seed=8, record_path=True))
    rebuilt = PathRecord.from_segments(path.segments)
    n = len(rebuilt.occupancy_time)
    assert np.allclose(path.occupancy_time[:n], rebuilt.occupancy_time, rtol=0, atol=1e-8)
    assert abs(path.total_time - rebuilt.total_time) < 1e-8


def test_aggressive_count_concentration():
    path = simulate(SimConfig(FULL, events=400_000, seed=9))
    expected = (FULL.lambda0 + FULL.muA) * path.total_time
    got = path.event_counts["LIMIT_SPREAD"] + path.event_counts["MARKET_AGGRESSIVE"]
    assert abs(got - expected) < 4 * math.sqrt(expected)


def test_partial_orders_never_take_last_share():
    p = FlowParams(lambda1=1.0, mu=5.0, theta1=0.5, lambda0=0.3, g0_spec=DistFamily.unit())
    path = simulate(SimConfig(p, events=50_000, seed=4, record_log=True))
    log = path.log
    partial = log.kind == 3
    assert partial.any() and log.best.min() >= 1
    before = np.concatenate([[1], log.best[:-1]])
    assert np.all(before[partial] >= 2)
    assert np.all(log.best[partial] == before[partial] - 1)


def test_type0_converges_to_poisson():
    p = FlowParams(lambda1=3.0, theta1=1.0, g2_spec=None)
    path = simulate(SimConfig(p, events=10_000_000, seed=21))
    exact = solve_type0(3.0, 0.0, 1.0, DistFamily.unit()).pi
    assert l2_distance(histogram(path, "time"), exact) < 5e-3


def test_resample_uses_given_law():
    pi2 = from_weights({7: 1.0})
    p = FlowParams(muA=1.0, lambda1=0.0, theta1=1.0, g2_spec=None, pi2_override=pi2)
    path = simulate(SimConfig(p, events=1000, seed=2, record_log=True))
    assert set(np.unique(path.log.best)) <= {1, 2, 3, 4, 5, 6, 7}
    assert path.log.best[path.log.kind == 4].tolist() == [7] * int((path.log.kind == 4).sum())


def test_config_errors():
    with pytest.raises(ConfigurationError):
        SimConfig(FULL)
    with pytest.raises(ConfigurationError):
        SimConfig(FULL, events=10, weighting="volume")
    with pytest.raises(ConfigurationError):
        SimConfig(FULL, horizon=-1.0)
    with pytest.raises(ConfigurationError):
        SimConfig(FULL, events=10, seed=2 ** 64)
    with pytest.raises(ConfigurationError):
        simulate(SimConfig(FlowParams(muA=1.0, lambda1=1.0, g2_spec=None), events=10))
    with pytest.raises(ConfigurationError):
        simulate(SimConfig(FlowParams(), events=10))
    with pytest.raises(ConfigurationError):
        simulate(SimConfig(FULL, events=10, backend="fortran"))
