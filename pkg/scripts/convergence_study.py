"""Time-step refinement study: strict residual, Fubini defect and cross-scheme distance.

All levels reuse one fine Brownian path per sample, restricted to the coarser grids.
"""
import argparse

import numpy as np

from stochevol.evolution import FROZEN, EvolutionScheme
from stochevol.presets import PRESETS, build_problem, merged
from stochevol.solver import cross_scheme_distance, fubini_defect, strict_residual, strict_solve
from stochevol.stochastic import sample_brownian, time_grid


def study(prob, levels, paths, seed):
    fine = max(levels)
    out = np.zeros((len(levels), 3))
    for p in range(paths):
        path = sample_brownian(prob.noise.d, time_grid(prob.T, fine), seed, p)
        for i, m in enumerate(levels):
            sub = path.restrict_to(time_grid(prob.T, m))
            sol = strict_solve(prob, sub, EvolutionScheme(prob.family, FROZEN, m))
            out[i] += strict_residual(prob, sol), fubini_defect(sol), cross_scheme_distance(prob, sub, m)
    return out / paths


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", choices=sorted(PRESETS), default="section4")
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--levels", type=int, nargs="+", default=[64, 128, 256, 512])
    ap.add_argument("--paths", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    prob = build_problem(merged(args.preset, {"n": args.n}), args.preset)
    levels = sorted(args.levels)
    res = study(prob, levels, args.paths, args.seed)
    print(f"{'steps':>6} {'residual':>12} {'fubini':>12} {'cross':>12}")
    for m, row in zip(levels, res):
        print(f"{m:>6d} " + " ".join(f"{v:12.4e}" for v in row))
    logm = np.log(levels)
    for j, name in enumerate(["residual", "fubini", "cross"]):
        if np.all(res[:, j] > 0):
            print(f"observed order ({name}): {-np.polyfit(logm, np.log(res[:, j]), 1)[0]:.3f}")


if __name__ == "__main__":
    main()
