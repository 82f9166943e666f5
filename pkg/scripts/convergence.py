"""Observed RK4 order on an inclined great circle of the unit sphere.

    python3 scripts/convergence.py [--tilt 0.6] [--t-end 2.0]
"""
import argparse
import math

import numpy as np

from osculator import FirstOrderState, IntegratorConfig, ModelSpec, build_model, integrate_trajectory
from osculator.geom_core import zero_force


def exact_endpoint(tilt, T):
    p = np.array([math.cos(T), math.cos(tilt) * math.sin(T), -math.sin(tilt) * math.sin(T)])
    return np.array([math.acos(p[2]), math.atan2(p[1], p[0])])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tilt", type=float, default=0.6)
    ap.add_argument("--t-end", type=float, default=2.0)
    args = ap.parse_args()
    model = build_model(ModelSpec("sphere"))
    init = FirstOrderState([math.pi / 2, 0.0], [math.sin(args.tilt), math.cos(args.tilt)])
    exact = exact_endpoint(args.tilt, args.t_end)
    prev = None
    print(f"{'dt':>8} {'endpoint error':>15} {'ratio':>8} {'order':>6}")
    for dt in (0.4, 0.2, 0.1, 0.05, 0.025, 0.0125):
        tr = integrate_trajectory(model, zero_force(2), init, IntegratorConfig(dt, args.t_end))
        err = float(np.linalg.norm(tr.x[-1] - exact))
        if prev is None:
            print(f"{dt:8.4f} {err:15.3e}")
        else:
            print(f"{dt:8.4f} {err:15.3e} {prev / err:8.2f} {math.log2(prev / err):6.2f}")
        prev = err


if __name__ == "__main__":
    main()
