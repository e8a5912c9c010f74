"""Sweep the noise Hölder index and report fitted temporal exponents of X and A X."""
import argparse

import numpy as np

from stochevol.evolution import FROZEN, EvolutionScheme
from stochevol.presets import build_problem, merged
from stochevol.regularity import default_lags, estimate_holder_exponent, simulate_ensemble, structure_function
from stochevol.stochastic import time_grid


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sigmas", type=float, nargs="+", default=[0.1, 0.3, 0.5, 0.7])
    ap.add_argument("--mode", type=int, default=1, help="sine mode of the noise profile")
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--steps", type=int, default=512)
    ap.add_argument("--paths", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    grid = time_grid(1.0, args.steps)
    print(f"{'sigma':>6} {'holder_X':>9} {'holder_AX':>10}")
    for s in args.sigmas:
        params = merged("section4", {"n": args.n, "sigma": s,
                                     "phi2": {"form": "sine", "mode": args.mode, "amplitude": 1.0}})
        prob = build_problem(params, "section4")
        ens = simulate_ensemble(prob, EvolutionScheme(prob.family, FROZEN, args.steps), grid, args.paths, args.seed)
        hx = estimate_holder_exponent(structure_function(ens, 2.0)).holder_hat
        hax = estimate_holder_exponent(structure_function(ens.mapped(1.0), 2.0, default_lags(grid), t_min=0.1)).holder_hat
        print(f"{s:6.2f} {hx:9.3f} {hax:10.3f}")


if __name__ == "__main__":
    main()
