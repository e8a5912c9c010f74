"""Command-line entry point: ``stochevol --config run.yaml [--out DIR] [--seed N] ...``.

Exit codes: 0 success, 1 validation error, 2 runtime error, 3 acceptance failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import acceptance
from .artifacts import RunArtifacts, csv_bytes, emit_outputs, json_bytes, matrix_csv, svg_plot, trajectory_csv
from .config import KINDS, RunConfig, load_config, with_overrides
from .errors import ConfigError, HypothesisError, StochevolError
from .evolution import EvolutionScheme, evolution_constants_scan
from .operators import dyadic_pairs, fractional_difference_constant, resolvent_scan, temporal_holder_scan
from .presets import build_problem
from .regularity import (
    default_lags,
    estimate_holder_exponent,
    moment_bound_check,
    moment_curve,
    simulate_ensemble,
    structure_function,
)
from .solver import cross_scheme_distance, fubini_defect, strict_residual, strict_solve
from .stochastic import noise_condition_check, sample_brownian, time_grid

log = logging.getLogger("stochevol")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_ACCEPTANCE = 0, 1, 2, 3


class ExperimentError(StochevolError):
    """A module error raised while running an experiment, with the experiment named."""


def _setup(cfg: RunConfig):
    problem = build_problem(cfg.problem_params(), cfg.preset or "custom")
    grid = time_grid(problem.T, cfg.grid.steps)
    scheme = EvolutionScheme(problem.family, cfg.scheme, cfg.substeps())
    return problem, grid, scheme


def _ensemble(cfg, problem, grid, scheme):
    e = cfg.ensemble
    return simulate_ensemble(problem, scheme, grid, e.paths, e.seed, e.chunk, e.threads)


def run_solve(cfg: RunConfig, art: RunArtifacts):
    problem, grid, scheme = _setup(cfg)
    path = sample_brownian(problem.noise.d, grid, cfg.ensemble.seed, 0)
    sol = strict_solve(problem, path, scheme)
    art.data["solution.csv"] = trajectory_csv(grid, {"X": sol.X.states, "I1": sol.I1.states,
                                                     "W0": sol.W0.states, "W1": sol.W1.states})
    art.data["brownian.csv"] = trajectory_csv(grid, {"w": path.values})
    art.reports["solution.json"] = json_bytes({"seed": cfg.ensemble.seed, "path_index": 0,
                                               "scheme": sol.scheme_tag, "problem_hash": problem.digest()})
    art.reports["residuals.json"] = json_bytes({
        "strict_residual": strict_residual(problem, sol),
        "fubini_defect": fubini_defect(sol),
        "cross_scheme_distance": cross_scheme_distance(problem, path, cfg.substeps()),
    })
    norms = problem.family.norm(sol.X.states)
    art.plots["solution_norm.svg"] = svg_plot([{"x": grid, "y": norms, "label": "|X(t)|"}],
                                              "strict solution", "t", "dual norm")


def run_ensemble(cfg: RunConfig, art: RunArtifacts):
    problem, grid, scheme = _setup(cfg)
    ens = _ensemble(cfg, problem, grid, scheme)
    m0, s0 = moment_curve(ens, 0.0)
    mb, sb = moment_curve(ens, problem.beta)
    rows = np.column_stack([grid, m0, s0, mb, sb]).tolist()
    art.data["ensemble_moments.csv"] = csv_bytes(["t", "mean_X2", "se_X2", "mean_AbetaX2", "se_AbetaX2"], rows)
    rep = moment_bound_check(ens, problem)
    art.data["moment_bound.csv"] = csv_bytes(["t", "curve", "bound"],
                                             np.column_stack([grid, rep.details["curve"],
                                                              rep.C_hat * rep.details["rhs"]]).tolist())
    art.reports["ensemble.json"] = json_bytes({
        "paths": ens.n_paths, "seed": cfg.ensemble.seed, "problem_hash": ens.problem_hash, "scheme": scheme.tag,
        "C_hat": rep.C_hat, "binding_time": rep.binding_time, "dominated": rep.dominated,
        "regime": rep.details["regime"], "xi_term": rep.details["xi_term"],
        "forcing_norm": rep.details["forcing_norm"], "g0_term": rep.details["g0_term"],
    })
    art.plots["moment_curve.svg"] = svg_plot(
        [{"x": grid, "y": mb, "label": "E|A^beta X|^2"},
         {"x": grid, "y": rep.C_hat * rep.details["rhs"], "label": "C_hat * bound", "style": "--"}],
        "second moment and bound", "t", "moment")


def run_constants_scan(cfg: RunConfig, art: RunArtifacts):
    problem, grid, scheme = _setup(cfg)
    fam = problem.family
    T = problem.T
    art.data["operator_A0.csv"] = matrix_csv(fam.matrix(0.0), 0.0, fam.grid.h)
    sect = {}
    for t in (0.0, T / 2, T):
        r = resolvent_scan(fam, t)
        sect[f"{t:g}"] = {"varpi": r.varpi, "M_hat": r.M_hat}
        if t == 0.0:
            art.data["resolvent_t0.csv"] = csv_bytes(["re_lambda", "im_lambda", "scaled_norm"],
                                                     [[lam.real, lam.imag, v] for lam, v in r.scan])
    coarse = time_grid(T, 16)
    th = temporal_holder_scan(fam, fam.nu, time_grid(T, 32))
    pairs = [(coarse[i], coarse[j]) for i, j in dyadic_pairs(coarse)]
    consts = evolution_constants_scan(scheme, [0.0, 0.25, 0.5, 0.75, 1.0], pairs)
    report = {"sectorial": sect,
              "temporal_holder": {"mu_hat": th.mu_hat, "N_hat": th.N_hat, "N_fit": th.N_fit,
                                  "mu_defined": th.mu_defined, "binding_pair": th.binding_pair},
              "evolution": consts.to_dict() | {"scan_grid": len(pairs)}}
    if problem.delta1 is not None:
        nc = noise_condition_check(problem.noise, fam, problem.delta, problem.delta1, problem.sigma, time_grid(T, 32))
        report["noise_conditions"] = {k: getattr(nc, k) for k in
                                      ("delta", "zeta_hat", "delta1", "zeta_bar_hat", "g1_holds", "g2_holds",
                                       "derived_g1_constant", "g0_delta_norm", "g_delta1_sup", "fractional_terms")}
        report["fractional_difference"] = fractional_difference_constant(fam, problem.delta, problem.delta1,
                                                                         time_grid(T, 32))
    if th.mu_defined:
        art.data["temporal_holder.csv"] = csv_bytes(["lag", "sup_defect"], np.column_stack([th.lags, th.sup_defects]).tolist())
    art.reports["constants.json"] = json_bytes(report)


def run_regularity(cfg: RunConfig, art: RunArtifacts):
    problem, grid, scheme = _setup(cfg)
    ens = _ensemble(cfg, problem, grid, scheme)
    r = cfg.regularity
    lags = default_lags(grid, r.lo_steps, r.hi_fraction)
    fits = {}
    for name, e, t_min in (("X", ens, 0.0), ("AX", ens.mapped(1.0), r.t_min_fraction * problem.T)):
        table = structure_function(e, r.p, lags, t_min)
        fit = estimate_holder_exponent(table)
        art.data[f"structure_{name}.csv"] = csv_bytes(
            ["lag", "moment", "standard_error"],
            np.column_stack([table.lags, table.moments, table.standard_errors]).tolist())
        fits[name] = {"epsilon_hat": fit.epsilon_hat, "epsilon_ci": fit.epsilon_ci, "holder_hat": fit.holder_hat,
                      "kolmogorov_exponent": fit.kolmogorov_exponent, "C_hat": fit.C_hat, "window": fit.window,
                      "p": fit.p, "t_min": t_min, "degenerate": fit.degenerate}
        series = [{"x": table.lags, "y": table.moments, "label": "structure function", "style": "o"}]
        if not fit.degenerate:
            series.append({"x": table.lags, "y": fit.C_hat * table.lags ** fit.epsilon_hat,
                           "label": f"fit, slope {fit.epsilon_hat:.3f}", "style": "--"})
        art.plots[f"structure_{name}.svg"] = svg_plot(series, f"structure function of {name}", "lag",
                                                      f"E|increment|^{r.p:g}", loglog=True)
    art.reports["fits.json"] = json_bytes({"paths": ens.n_paths, "seed": cfg.ensemble.seed,
                                           "problem_hash": ens.problem_hash, "fits": fits})


def run_acceptance(cfg: RunConfig, art: RunArtifacts) -> bool:
    seed = cfg.ensemble.seed
    wanted = set(cfg.acceptance.criteria or range(1, 15))
    numbers = wanted - {14}
    if 14 in wanted:
        numbers = set(range(1, 14)) if wanted == {14} else numbers

    results = acceptance.run_suite(seed, numbers, log=log.info)
    first = acceptance.table_bytes(results)
    if 14 in wanted:
        second = acceptance.table_bytes(acceptance.run_suite(seed, numbers, log=None))
        results.append(acceptance.determinism(first, second))
        log.info(results[-1].line())
    results = [r for r in results if r.number in wanted]
    art.data.update({k: v for k, v in first.items() if int(k.split("_")[1]) in wanted})
    passed = all(r.passed for r in results)
    art.reports["acceptance.json"] = json_bytes({"seed": seed, "passed": passed,
                                                 "criteria": [r.to_dict() for r in results]})
    return passed


RUNNERS = {"solve": run_solve, "ensemble": run_ensemble, "constants-scan": run_constants_scan,
           "regularity": run_regularity, "acceptance": run_acceptance}
assert set(RUNNERS) == set(KINDS)


def run_experiment(cfg: RunConfig) -> RunArtifacts:
    art = RunArtifacts(config=cfg.to_dict(), seed=cfg.ensemble.seed)
    try:
        ok = RUNNERS[cfg.kind](cfg, art)
    except HypothesisError:
        raise
    except StochevolError as exc:
        raise ExperimentError(f"{cfg.kind}: {exc}") from exc
    if ok is False:
        art.status = "acceptance-failed"
    return art


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stochevol", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, type=Path, help="YAML run description")
    ap.add_argument("--out", type=Path, default=None, help="output directory (overrides config)")
    ap.add_argument("--seed", type=int, default=None, help="base seed (overrides config)")
    ap.add_argument("--paths", type=int, default=None, help="ensemble size (overrides config)")
    ap.add_argument("--threads", type=int, default=None, help="worker threads for ensembles")
    ap.add_argument("--kind", choices=KINDS, default=None, help="experiment kind (overrides config)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        cfg = with_overrides(cfg, args.seed, args.paths, args.threads, args.kind, args.out)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    try:
        art = run_experiment(cfg)
    except HypothesisError as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - any failure past validation is a runtime error
        log.error("runtime error: %s", exc)
        return EXIT_RUNTIME
    try:
        manifest = emit_outputs(art, cfg.output)
    except OSError as exc:
        log.error("could not write artifacts: %s", exc)
        return EXIT_RUNTIME
    log.info("wrote %s", manifest)
    return EXIT_ACCEPTANCE if art.status == "acceptance-failed" else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
