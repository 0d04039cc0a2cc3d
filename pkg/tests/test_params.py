import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bestquote.dists import DistFamily, from_weights, make_family
from bestquote.errors import InfeasibleBalanceError, NoKillingError, ParameterError
from bestquote.params import FlowParams, calibrate_thetas, resurrection_mix


def test_calibration_examples():
    # lambda1*sigma1 = 10, outflow 4, L1 = 3; lambda2*sigma2 = 6, L2 = 3
    t1, t2 = calibrate_thetas(5.0, 2.0, 1.0, 1.0, 1.0, 3.0, 3.0, 2.0, 3.0, 3.0)
    assert t1 == pytest.approx(2.0) and t2 == pytest.approx(2.0)


def test_calibration_infeasible():
    with pytest.raises(InfeasibleBalanceError):
        calibrate_thetas(2.0, 2.0, 1.0, 1.0, 1.0, 3.0, 1.0, 1.0, 3.0, 3.0)
    with pytest.raises(ParameterError):
        calibrate_thetas(5.0, 2.0, 1.0, 1.0, 1.0, 3.0, 1.0, 1.0, 0.0, 3.0)


pos = st.floats(0.1, 10.0)


@given(pos, st.floats(0.5, 10.0), pos, pos, pos, pos, st.floats(0.5, 4.0))
def test_calibration_scales_with_time_unit(lam1, sig1, lam2, sig2, L1, L2, c):
    mu, muA = 0.1 * lam1, 0.05 * lam1
    base = calibrate_thetas(lam1, sig1, mu, 1.0, muA, 1.0, lam2, sig2, L1, L2)
    scaled = calibrate_thetas(c * lam1, sig1, c * mu, 1.0, c * muA, 1.0, c * lam2, sig2, L1, L2)
    assert scaled[0] == pytest.approx(c * base[0], rel=1e-12)
    assert scaled[1] == pytest.approx(c * base[1], rel=1e-12)


def test_mix_degenerate_weights():
    g0 = make_family(DistFamily.geometric(0.4))
    pi2 = from_weights({2: 0.3, 5: 0.7})
    p = FlowParams(lambda0=1.0, muA=0.0, g0_spec=DistFamily.geometric(0.4))
    assert np.array_equal(resurrection_mix(p, pi2).h.dense(1, 50), g0.dense(1, 50))
    p = FlowParams(lambda0=0.0, muA=2.0)
    assert np.array_equal(resurrection_mix(p, pi2).h.dense(1, 10), pi2.dense(1, 10))


def test_mix_equal_weights():
    p = FlowParams(lambda0=1.0, muA=1.0)
    mix = resurrection_mix(p, from_weights({2: 1.0}))
    assert mix.h.pmf(1) == 0.5 and mix.h.pmf(2) == 0.5
    assert mix.weight_limit + mix.weight_market == 1.0


def test_mix_needs_killing():
    with pytest.raises(NoKillingError):
        resurrection_mix(FlowParams(lambda1=1.0), from_weights({1: 1.0}))


@given(st.floats(0.01, 5), st.floats(0.01, 5), st.floats(0.05, 0.95))
def test_mix_pointwise(l0, ma, q):
    p = FlowParams(lambda0=l0, muA=ma, g0_spec=DistFamily.geometric(q))
    pi2 = make_family(DistFamily.poisson(1.5)).shift(1)
    mix = resurrection_mix(p, pi2)
    g0 = make_family(DistFamily.geometric(q))
    hi = max(g0.stop, pi2.stop)
    want = l0 / (l0 + ma) * g0.dense(1, hi) + ma / (l0 + ma) * pi2.dense(1, hi)
    assert np.max(np.abs(mix.h.dense(1, hi) - want)) <= 1e-12
    assert abs(mix.h.probs.sum() + mix.h.tail_mass - 1) <= 1e-9


def test_params_validation():
    with pytest.raises(ParameterError):
        FlowParams(lambda1=-1.0)
    with pytest.raises(ParameterError):
        FlowParams(theta1=0.0)
    with pytest.raises(ParameterError):
        FlowParams(pi2_override=from_weights({1: 1.0}))  # g2_spec also set by default


def test_params_json_round_trip():
    p = FlowParams(lambda0=0.2, lambda1=2.0, lambda2=1.0, mu=1.0, muA=0.1, theta1=0.5, theta2=0.7,
                   g0_spec=DistFamily.empirical({1: 0.25, 3: 0.75}), g1_spec=DistFamily.geometric(0.3),
                   g2_spec=None, pi2_override=from_weights({1: 0.5, 2: 0.5}),
                   pi2_empirical=from_weights({1: 0.4, 2: 0.6}), L1=4.5, L2=3.0)
    again = FlowParams.loads(p.dumps({"note": "x"}))
    assert again.to_dict() == p.to_dict()


def test_params_unknown_field():
    with pytest.raises(ParameterError):
        FlowParams.from_dict({"lambda1": 1.0, "lamda0": 2.0})
    with pytest.raises(ParameterError):
        FlowParams.loads("{not json")
