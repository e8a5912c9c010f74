"""The acceptance suite: fourteen numbered checks with closed-form or refinement oracles.

Every check returns a :class:`CriterionResult` whose ``tables`` are the
numbers behind the verdict; they are emitted as CSV and must be
byte-identical across runs with the same seed.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .artifacts import csv_bytes
from .evolution import FROZEN, IMPLICIT, EvolutionScheme, evolution_constants_scan, propagate
from .presets import (
    autonomous_grid_problem,
    build_problem,
    low_beta_problem,
    merged,
    scalar_ou_problem,
    section4_problem,
)
from .regularity import (
    Ensemble,
    default_lags,
    estimate_holder_exponent,
    moment_bound_check,
    simulate_ensemble,
    structure_function,
)
from .solver import cross_scheme_distance, fubini_defect, solve_batch, strict_residual, strict_solve
from .stochastic import batch_stats, moment_diagnostics, noise_condition_check, sample_brownian, \
    sample_brownian_batch, time_grid

DEFAULT_SEED = 20240613

Table = tuple[list[str], list[list]]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict
    threshold: str
    tables: dict[str, Table] = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{verdict}] {self.number:2d} {self.name}: {shown} (need {self.threshold})"

    def to_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "measured": self.measured, "threshold": self.threshold}


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _orders(errors) -> list[float]:
    e = np.asarray(errors, dtype=float)
    return [float(x) for x in np.log2(e[:-1] / e[1:])]


def _slope(steps, errors) -> float:
    return float(np.polyfit(np.log(steps), np.log(errors), 1)[0])


# 1
def cocycle(seed: int) -> CriterionResult:
    triples = [(0.0, 0.3, 1.0), (0.1, 0.45, 0.9), (0.2, 1 / 3, 0.7)]
    fam = autonomous_grid_problem().family
    sch = EvolutionScheme(fam, FROZEN, 1000)
    auto = max(fam.op_norm(sch.propagator(r, t) - sch.propagator(s, t) @ sch.propagator(r, s))
               for r, s, t in triples)
    s4 = section4_problem().family
    levels = [25, 50, 100, 200]
    r, s, t = 0.0, 1 / 3, 1.0
    defects = []
    for k in levels:
        sc = EvolutionScheme(s4, FROZEN, k)
        defects.append(s4.op_norm(sc.propagator(r, t) - sc.propagator(s, t) @ sc.propagator(r, s)))
    orders = _orders(defects)
    passed = auto < 1e-8 and min(orders) >= 0.9
    rows = [[k, d] for k, d in zip(levels, defects)]
    return CriterionResult(1, "cocycle", passed, {"autonomous_defect": auto, "orders": orders},
                           "autonomous < 1e-8, order >= 0.9",
                           {"cocycle": (["substeps_per_unit", "defect"], rows)})


# 2
def semigroup(seed: int) -> CriterionResult:
    fam = autonomous_grid_problem().family
    sch = EvolutionScheme(fam, FROZEN, 1000)
    A = fam.matrix(0.0)
    v = np.random.default_rng(seed).standard_normal((fam.dim, 4))
    rows, worst = [], 0.0
    for s, t in [(0.0, 0.001), (0.0, 0.5), (0.25, 0.75), (0.1234, 0.98765), (0.0, 1.0)]:
        ref = scipy.linalg.expm(-(t - s) * A) @ v
        err = float(np.linalg.norm(propagate(sch, s, t, v) - ref) / np.linalg.norm(ref))
        rows.append([s, t, err])
        worst = max(worst, err)
    return CriterionResult(2, "semigroup", worst < 1e-6, {"max_relative_error": worst}, "< 1e-6",
                           {"semigroup": (["s", "t", "relative_error"], rows)})


# 3
def smoothing_constant(seed: int) -> CriterionResult:
    fam = autonomous_grid_problem().family
    sch = EvolutionScheme(fam, FROZEN, 1000)
    thetas = [0.0, 0.25, 0.5, 0.75, 1.0]
    pairs = [(0.0, float(t)) for t in np.geomspace(1e-3, 1.0, 97)]
    consts = evolution_constants_scan(sch, thetas, pairs, kappa_pairs=[])
    rows, ok = [], consts.iota[0.0] <= 1 + 1e-12
    for th in thetas[1:]:
        ref = th**th * np.exp(-th)
        rel = abs(consts.iota[th] - ref) / ref
        ok = ok and rel < 0.1
        rows.append([th, consts.iota[th], ref, rel])
    return CriterionResult(3, "smoothing constant", bool(ok),
                           {"iota_0": consts.iota[0.0], "max_relative_error": max(r[3] for r in rows)},
                           "within 10% of theta^theta e^-theta, iota_0 <= 1 + 1e-12",
                           {"smoothing": (["theta", "iota_hat", "oracle", "relative_error"], rows)})


# 4
def degenerate_constant(seed: int) -> CriterionResult:
    fam = autonomous_grid_problem().family
    sch = EvolutionScheme(fam, FROZEN, 1000)
    pairs = [(s, t) for s in (0.0, 0.2, 0.5) for t in (0.55, 0.8, 1.0)]
    c = evolution_constants_scan(sch, [0.5], pairs, kappa_pairs=[]).c_mu_nu
    return CriterionResult(4, "degenerate c_mu_nu", c <= 1e-10, {"c_mu_nu": c}, "<= 1e-10",
                           {"degenerate": (["c_mu_nu"], [[c]])})


# 5
def ito_isometry(seed: int) -> CriterionResult:
    grid = time_grid(1.0, 1000)
    diag = moment_diagnostics(lambda t, w: t, 100_000, 2.0, grid, seed)
    dev = abs(diag.lhs_isometry - 1 / 3)
    passed = dev <= 3 * diag.lhs_se and diag.martingale_ok
    rows = [[t, m, s] for t, m, s in zip(diag.martingale_times, diag.martingale_means, diag.martingale_se)]
    return CriterionResult(5, "Ito isometry", bool(passed),
                           {"second_moment": diag.lhs_isometry, "se": diag.lhs_se, "martingale_ok": diag.martingale_ok},
                           "|m - 1/3| <= 3 se, martingale means within 3 se",
                           {"isometry": (["second_moment", "standard_error", "oracle"],
                                         [[diag.lhs_isometry, diag.lhs_se, 1 / 3]]),
                            "martingale": (["t", "mean", "standard_error"], rows)})


# 6
def ou_variance(seed: int, paths: int = 100_000, steps: int = 1024, chunk: int = 8192) -> CriterionResult:
    prob = scalar_ou_problem()
    grid = time_grid(1.0, steps)
    sch = EvolutionScheme(prob.family, FROZEN, steps)
    mats = sch.step_matrices(grid)
    finals = []
    for lo in range(0, paths, chunk):
        inc = sample_brownian_batch(1, grid, seed, min(chunk, paths - lo), lo)
        finals.append(solve_batch(prob, sch, grid, inc, mats)[0][:, -1, 0])
    sq = np.concatenate(finals) ** 2
    mean, se = batch_stats(sq, 20)
    ref = (1 - np.exp(-2.0)) / 2
    return CriterionResult(6, "OU variance", bool(abs(mean - ref) <= 3 * se),
                           {"second_moment": float(mean), "se": float(se), "oracle": ref}, "within 3 se",
                           {"ou_variance": (["second_moment", "standard_error", "oracle"], [[mean, se, ref]])})


def _refinement(prob, seed, levels, measure, n_paths):
    """Mean of ``measure(path)`` over paths sampled on the finest level and restricted to each level."""
    fine = max(levels)
    out = np.zeros(len(levels))
    for p in range(n_paths):
        path = sample_brownian(prob.noise.d, time_grid(prob.T, fine), seed, p)
        for i, m in enumerate(levels):
            out[i] += measure(path.restrict_to(time_grid(prob.T, m)), m)
    return out / n_paths


# 7
def strict_residual_order(seed: int) -> CriterionResult:
    prob = scalar_ou_problem()
    levels = [128, 256, 512, 1024]
    res = _refinement(prob, seed, levels,
                      lambda path, m: strict_residual(prob, strict_solve(prob, path, EvolutionScheme(prob.family, FROZEN, m))),
                      16)
    slope = -_slope(levels, res)
    passed = slope >= 0.4 and bool(np.all(np.diff(res) < 0))
    return CriterionResult(7, "strict residual", passed, {"order": slope, "residuals": res.tolist()},
                           "order >= 0.4, decreasing",
                           {"residual": (["steps", "mean_sup_residual"], [[m, r] for m, r in zip(levels, res)])})


# 8
def fubini_order(seed: int) -> CriterionResult:
    levels = [256, 512, 1024]
    tables, measured, ok = {}, {}, True
    for label, prob in (("scalar_ou", scalar_ou_problem()), ("autonomous8", autonomous_grid_problem())):
        d = _refinement(prob, seed, levels,
                        lambda path, m: fubini_defect(strict_solve(prob, path, EvolutionScheme(prob.family, FROZEN, m))),
                        16)
        ratios = (d[:-1] / d[1:]).tolist()
        ok = ok and all(1.6 <= r <= 2.4 for r in ratios)
        measured[f"{label}_ratios"] = ratios
        tables[f"fubini_{label}"] = (["steps", "mean_sup_defect"], [[m, x] for m, x in zip(levels, d)])
    return CriterionResult(8, "Fubini identity", bool(ok), measured, "halving ratios in [1.6, 2.4]", tables)


# 9
def uniqueness(seed: int) -> CriterionResult:
    prob = section4_problem()
    levels = [128, 256, 512, 1024]
    dist = _refinement(prob, seed, levels, lambda path, m: cross_scheme_distance(prob, path, m), 4)
    slope = -_slope(levels, dist)
    det = autonomous_grid_problem(forcing=1.0, xi_mode=1, noise=False)
    path = sample_brownian(1, time_grid(1.0, 1000), seed, 0)
    det_dist = cross_scheme_distance(det, path, 1000)
    passed = slope >= 0.5 and det_dist < 1e-3
    return CriterionResult(9, "cross-scheme uniqueness", bool(passed),
                           {"order": slope, "deterministic_distance": det_dist},
                           "order >= 0.5, G = 0 distance < 1e-3",
                           {"cross_scheme": (["steps", "mean_distance"], [[m, x] for m, x in zip(levels, dist)]),
                            "cross_scheme_deterministic": (["steps", "distance"], [[1000, det_dist]])})


def _fit_rows(table, fit):
    rows = [[lag, m, s] for lag, m, s in zip(table.lags, table.moments, table.standard_errors)]
    return rows, [[fit.epsilon_hat, fit.epsilon_ci[0], fit.epsilon_ci[1], fit.holder_hat,
                   fit.kolmogorov_exponent, fit.C_hat]]


FIT_HEADER = ["epsilon_hat", "epsilon_lo", "epsilon_hi", "holder_hat", "kolmogorov_exponent", "C_hat"]
TABLE_HEADER = ["lag", "moment", "standard_error"]


# 10
def brownian_holder(seed: int, paths: int = 1000, steps: int = 4096) -> CriterionResult:
    grid = time_grid(1.0, steps)
    inc = sample_brownian_batch(1, grid, seed, paths)
    w = np.concatenate([np.zeros((paths, 1, 1)), np.cumsum(inc, axis=1)], axis=1)
    ens = Ensemble(grid, w, np.arange(paths))
    table = structure_function(ens, 2.0)
    fit = estimate_holder_exponent(table)
    rows, frow = _fit_rows(table, fit)
    return CriterionResult(10, "Brownian Hölder exponent", bool(abs(fit.holder_hat - 0.5) <= 0.05),
                           {"holder_hat": fit.holder_hat}, "0.50 +- 0.05",
                           {"brownian_structure": (TABLE_HEADER, rows), "brownian_fit": (FIT_HEADER, frow)})


# 11
def regularity_window(seed: int, paths: int = 1000, steps: int = 1024) -> CriterionResult:
    prob = section4_problem()
    grid = time_grid(prob.T, steps)
    ens = simulate_ensemble(prob, EvolutionScheme(prob.family, FROZEN, steps), grid, paths, seed)
    tx = structure_function(ens, 2.0)
    fx = estimate_holder_exponent(tx)
    tax = structure_function(ens.mapped(1.0), 2.0, default_lags(grid), t_min=0.1 * prob.T)
    fax = estimate_holder_exponent(tax)
    cap = min(prob.delta - 0.5, prob.sigma) + 0.1
    passed = 0.3 <= fx.holder_hat <= 0.55 and fax.holder_hat <= cap
    rx, fxr = _fit_rows(tx, fx)
    rax, faxr = _fit_rows(tax, fax)
    return CriterionResult(11, "regularity window", bool(passed),
                           {"holder_X": fx.holder_hat, "holder_AX": fax.holder_hat, "AX_cap": cap},
                           f"X in [0.3, 0.55], AX <= {cap:g}",
                           {"structure_X": (TABLE_HEADER, rx), "fit_X": (FIT_HEADER, fxr),
                            "structure_AX": (TABLE_HEADER, rax), "fit_AX": (FIT_HEADER, faxr)})


# 12
def moment_bound(seed: int, paths: int = 1000) -> CriterionResult:
    prob = low_beta_problem()
    levels = [128, 256, 512]
    rows, cs, dominated = [], [], True
    for m in levels:
        grid = time_grid(prob.T, m)
        ens = simulate_ensemble(prob, EvolutionScheme(prob.family, FROZEN, m), grid, paths, seed)
        rep = moment_bound_check(ens, prob)
        cs.append(rep.C_hat)
        dominated = dominated and bool(rep.dominated)
        rows.append([m, rep.C_hat, rep.binding_time, int(bool(rep.dominated))])
    cs = np.array(cs)
    spread = float(cs.max() / cs.min()) if np.all(np.isfinite(cs)) and cs.min() > 0 else float("inf")
    passed = np.isfinite(spread) and spread <= 2 and dominated
    return CriterionResult(12, "moment bound", bool(passed), {"C_hat": cs.tolist(), "spread": spread},
                           "finite, max/min <= 2, dominated",
                           {"moment_bound": (["steps", "C_hat", "binding_time", "dominated"], rows)})


# 13
def noise_conditions(seed: int) -> CriterionResult:
    times = time_grid(1.0, 32)
    prob = section4_problem()
    rep = noise_condition_check(prob.noise, prob.family, prob.delta, prob.delta1, prob.sigma, times)
    const = {"form": "constant", "value": 1.0}
    auto = build_problem(merged("section4", {"a": const, "b": const}), "section4-autonomous")
    arep = noise_condition_check(auto.noise, auto.family, auto.delta, auto.delta1, auto.sigma, times)
    fa = arep.fractional_terms
    frozen = fa["inverse_norm"] ** (auto.delta1 - auto.delta) * arep.zeta_bar_hat
    frac_zero = all(fa[k] == 0 for k in ("alpha_delta_delta1", "alpha_delta_mid", "alpha_mid_delta1"))
    reduces = frac_zero and abs(arep.derived_g1_constant - frozen) <= 1e-12 * max(frozen, 1.0)
    passed = np.isfinite(rep.derived_g1_constant) and rep.derived_g1_constant >= rep.zeta_hat and reduces
    rows = [["section4", rep.zeta_hat, rep.zeta_bar_hat, rep.derived_g1_constant],
            ["section4-autonomous", arep.zeta_hat, arep.zeta_bar_hat, arep.derived_g1_constant]]
    return CriterionResult(13, "(G2) implies (G1)", bool(passed),
                           {"zeta_hat": rep.zeta_hat, "derived": rep.derived_g1_constant,
                            "autonomous_derived": arep.derived_g1_constant, "frozen_bound": frozen},
                           "derived finite and >= zeta_hat; autonomous derived = frozen bound",
                           {"noise_conditions": (["problem", "zeta_hat", "zeta_bar_hat", "derived_g1_constant"], rows)})


CRITERIA: list[Callable[[int], CriterionResult]] = [
    cocycle, semigroup, smoothing_constant, degenerate_constant, ito_isometry, ou_variance,
    strict_residual_order, fubini_order, uniqueness, brownian_holder, regularity_window,
    moment_bound, noise_conditions,
]


def run_criterion(fn: Callable[[int], CriterionResult], seed: int) -> CriterionResult:
    t0 = time.perf_counter()
    res = fn(seed)
    res.seconds = time.perf_counter() - t0
    return res


def table_bytes(results: list[CriterionResult]) -> dict[str, bytes]:
    out = {}
    for res in results:
        for name, (header, rows) in res.tables.items():
            out[f"acceptance_{res.number:02d}_{name}.csv"] = csv_bytes(header, rows)
    return out


def determinism(first: dict[str, bytes], second: dict[str, bytes]) -> CriterionResult:
    differing = sorted(k for k in set(first) | set(second) if first.get(k) != second.get(k))
    return CriterionResult(14, "determinism", not differing and bool(first),
                           {"files": len(first), "differing": differing}, "byte-identical CSV artifacts")


def run_suite(seed: int = DEFAULT_SEED, numbers=None, log=print) -> list[CriterionResult]:
    """Criteria 1-13 (or the selected ``numbers``)."""
    out = []
    for fn in CRITERIA:
        k = CRITERIA.index(fn) + 1
        if numbers is not None and k not in numbers:
            continue
        res = run_criterion(fn, seed)
        if log:
            log(res.line())
        out.append(res)
    return out
