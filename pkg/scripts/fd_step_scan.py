"""Forced finite-difference accuracy versus the spray third-derivative step.

Reports the contraction defect max|y^h R_h^i_jk - R^i_jk| over random states
for a range of ``hs3`` values; this is how the default was chosen.

    python3 scripts/fd_step_scan.py [--count 40]
"""
import argparse

import numpy as np

from osculator import DiffStrategy, FirstOrderState, ModelSpec, berwald_curvatures, build_model
from osculator.verify import BOXES, sample_states

MODELS = {"sphere": {}, "flat_polar": {}, "hyperbolic_half_plane": {}, "randers": {"b": [0.3, 0.0]}}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=40)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    states = {k: FirstOrderState(*sample_states(k, args.count, rng)) for k in MODELS if k in BOXES}
    models = {k: build_model(ModelSpec(k, 2, p)) for k, p in MODELS.items()}
    print(f"{'hs3':>7} " + " ".join(f"{k[:12]:>12}" for k in MODELS))
    for hs3 in (5e-3, 1e-2, 1.5e-2, 2e-2, 3e-2, 5e-2):
        d = DiffStrategy(mode="fd", hs3=hs3)
        row = [berwald_curvatures(models[k], states[k], d).contraction_defect for k in MODELS]
        print(f"{hs3:7.3f} " + " ".join(f"{v:12.2e}" for v in row))


if __name__ == "__main__":
    main()
