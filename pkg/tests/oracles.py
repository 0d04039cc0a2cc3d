"""Independent reference solutions shared by the test modules."""

import numpy as np

from bestquote.dists import DistFamily, from_weights, linf_distance
from bestquote.params import FlowParams, resurrection_mix
from bestquote.stationary import killed_generator_oracle, model_params, pi2_for

# killed-generator solutions on {1..300}, first six volumes
MODEL1A_ORACLE = [0.419169104059042, 0.308796975021229, 0.168883612902461,
                  0.070589335593579, 0.0237612207882352, 0.0067165570138853]
MODEL2A_ORACLE = [0.590628703027179, 0.276287603026049, 0.0983301671000847,
                  0.0272966680943611, 0.00611122661429479, 0.00113715825141287]
MODEL1A_PARAMS = FlowParams(lambda0=1.0, muA=1.0, lambda1=2.0, theta1=1.0, lambda2=1.0, theta2=1.0)
MODEL2A_PARAMS = FlowParams(lambda0=0.5, muA=0.5, lambda1=1.0, mu=0.8, theta1=1.0, lambda2=1.0, theta2=1.0)

EMP_G0 = DistFamily.empirical({1: 0.3, 2: 0.3, 5: 0.4})
EMP_PI2 = from_weights({1: 0.2, 2: 0.5, 4: 0.3})

# general parameter sets from which every catalogue model is restricted
PARAM_SETS = [
    FlowParams(lambda0=0.5, lambda1=2.0, lambda2=1.5, mu=0.6, muA=0.4, theta1=0.6, theta2=0.8,
               g0_spec=DistFamily.geometric(0.4), g1_spec=DistFamily.geometric(0.6),
               g2_spec=DistFamily.geometric(0.5), pi2_empirical=EMP_PI2, L1=4.0),
    FlowParams(lambda0=1.0, lambda1=4.0, lambda2=2.0, mu=1.5, muA=0.5, theta1=1.0, theta2=0.5,
               g0_spec=EMP_G0, g1_spec=DistFamily.geometric(0.7), g2_spec=DistFamily.geometric(0.8),
               pi2_empirical=from_weights({1: 0.1, 3: 0.6, 6: 0.3}), L1=5.0),
    FlowParams(lambda0=0.2, lambda1=1.0, lambda2=0.5, mu=0.3, muA=0.6, theta1=0.3, theta2=0.4,
               g0_spec=DistFamily.geometric(0.25), g1_spec=DistFamily.geometric(0.5),
               g2_spec=DistFamily.geometric(0.35), pi2_empirical=EMP_PI2, L1=6.0),
]


def model_oracle(model_id, params, N=300):
    """Stationary law of a catalogue model from the truncated killed generator."""
    p = model_params(model_id, params)
    if model_id[0] == "0":
        return killed_generator_oracle(p.lambda1, p.mu, p.theta1, p.g1_spec, 0.0, None, N)
    h = resurrection_mix(p, pi2_for(p) if p.muA > 0 else None).h
    return killed_generator_oracle(p.lambda1, p.mu, p.theta1, p.g1_spec, p.killing_rate, h, N)


def linf(a, b):
    return linf_distance(a, b)


def dense(d, n):
    return np.asarray(d.dense(1, n + 1))
