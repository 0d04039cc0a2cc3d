"""Throughput of the compiled and pure-Python simulation kernels.

    python benchmarks/bench_simulator.py [--events N] [--repeat R]

Both backends consume the same uniforms, so the script also checks that they
produce identical occupancy arrays.
"""

import argparse
import time

import numpy as np

from bestquote.dists import DistFamily
from bestquote.params import FlowParams
from bestquote.simulator import SimConfig, available_backends, simulate

CASES = {
    "1a (unit sizes)": FlowParams(lambda0=0.2, lambda1=2.0, lambda2=1.0, muA=0.1, theta1=0.5, theta2=0.5),
    "2a (partial trades)": FlowParams(lambda0=0.2, lambda1=2.0, lambda2=1.0, mu=1.0, muA=0.1,
                                      theta1=0.5, theta2=0.5),
    "full (geometric, coupled)": FlowParams(lambda0=0.2, lambda1=4.0, lambda2=2.0, mu=1.0, muA=0.1,
                                            theta1=0.2, theta2=0.2, g0_spec=DistFamily.geometric(0.11),
                                            g1_spec=DistFamily.geometric(0.6),
                                            g2_spec=DistFamily.geometric(0.6)),
}


def bench(params, events, backend, repeat):
    best = np.inf
    path = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        path = simulate(SimConfig(params, events=events, seed=2024, backend=backend))
        best = min(best, time.perf_counter() - t0)
    return best, path


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--events", type=int, default=500_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = available_backends()
    print(f"events per run: {args.events:,}   backends: {', '.join(backends)}")
    print(f"{'case':28s} {'backend':8s} {'seconds':>9s} {'Mevents/s':>10s} {'speedup':>8s}")
    for name, params in CASES.items():
        results = {b: bench(params, args.events, b, args.repeat) for b in backends}
        base = results["python"][0]
        for b, (sec, _) in results.items():
            print(f"{name:28s} {b:8s} {sec:9.3f} {args.events / sec / 1e6:10.2f} {base / sec:7.1f}x")
        if len(results) > 1:
            a, b = (results[k][1] for k in backends)
            same = np.array_equal(a.occupancy_time, b.occupancy_time) and a.total_time == b.total_time
            print(f"{'':28s} identical paths: {same}")


if __name__ == "__main__":
    main()
