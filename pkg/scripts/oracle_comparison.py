"""Which dual coefficients certify deviation fields?

For each model, deviation fields are computed independently by
differencing perturbed trajectories (no connection involved). The v2
residual of those fields is then evaluated with three coefficient pairs:
ours, Miron's, and ours with the force term L.F entering with a plus sign.
Only a pair whose residual stays at discretisation level certifies them.

    python3 scripts/oracle_comparison.py [--seed 42] [--cases 5]
"""
import argparse

import numpy as np

from osculator import (FirstOrderState, ForceSpec, IntegratorConfig, ModelSpec, SecondOrderState, build_force,
                       build_model, deviation_oracle, our_dual_coefficients, v2_residual)
from osculator.connections import spray_jet
from osculator.dynamics import miron_provider, ours_provider, sup_interior

SCENARIOS = [
    ("sphere", {}, "zero", {}),
    ("sphere", {}, "linear_drag", {"k": 0.8}),
    ("hyperbolic_half_plane", {}, "position_spring", {"K": 0.5}),
    ("randers", {"b": [0.3, 0.0]}, "zero", {}),
    ("minkowski_norm", {}, "linear_drag", {"k": 1.0}),
]
START = {"sphere": [1.2, 0.0], "hyperbolic_half_plane": [0.0, 1.0], "randers": [1.3, 0.0],
         "minkowski_norm": [0.0, 0.0]}


def plus_lf_provider(model, force):
    def provider(x, y, y2):
        mc = our_dual_coefficients(model, force, SecondOrderState(x, y, y2))
        LF = np.einsum("...ijk,...k->...ij", spray_jet(model, x, y).Lb, force(x, y))
        return mc.M1, mc.M2 + LF
    return provider


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--cases", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'model':<22} {'force':<16} {'ours':>10} {'miron':>10} {'+L.F':>10}")
    for kind, mp, fkind, fp in SCENARIOS:
        model = build_model(ModelSpec(kind, 2, mp))
        force = build_force(ForceSpec(fkind, fp), 2)
        cfg = IntegratorConfig(5e-3 if kind == "randers" else 2e-3, 1.0)
        worst = np.zeros(3)
        for _ in range(args.cases):
            x0 = np.array(START[kind]) + rng.uniform(-0.2, 0.2, 2)
            ang = rng.uniform(0, 2 * np.pi)
            y0 = rng.uniform(0.4, 0.9) * np.array([np.cos(ang), np.sin(ang)])
            tr = deviation_oracle(model, force, FirstOrderState(x0, y0), rng.normal(size=2), rng.normal(size=2),
                                  cfg, richardson=True)
            provs = (ours_provider(model, force), miron_provider(model), plus_lf_provider(model, force))
            worst = np.maximum(worst, [sup_interior(v2_residual(tr, p)) for p in provs])
        print(f"{kind:<22} {fkind:<16} {worst[0]:10.2e} {worst[1]:10.2e} {worst[2]:10.2e}")


if __name__ == "__main__":
    main()
