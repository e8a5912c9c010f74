"""Kolmogorov-type structure functions, Hölder exponent fits and moment-bound checks over ensembles."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, ParameterError, ShapeError
from .evolution import EvolutionScheme
from .holder import SampledPath, WeightedHolderParams, weighted_holder_norm
from .operators import OperatorFamily
from .solver import ProblemSpec, solve_batch
from .stochastic import apply_power, batch_stats, sample_brownian_batch

DEFAULT_BATCHES = 20
REGIME_SMOOTH = "beta>=delta"
REGIME_ROUGH = "beta<delta"


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Paths on a shared grid, ``states`` of shape ``(P, M+1, n)``."""

    times: np.ndarray
    states: np.ndarray
    seeds: np.ndarray
    problem_hash: str = ""
    family: OperatorFamily | None = None
    norm_kind: str = "l2"

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 2:
            states = states[..., None]
        if states.ndim != 3 or states.shape[1] != times.size:
            raise ShapeError(f"states of shape {states.shape} for {times.size} times")
        seeds = np.asarray(self.seeds)
        if seeds.shape[0] != states.shape[0]:
            raise ShapeError(f"{seeds.shape[0]} seeds for {states.shape[0]} paths")
        if np.unique(seeds, axis=0).shape[0] != seeds.shape[0]:
            raise ParameterError("ensemble seeds must be distinct")
        if self.norm_kind == "dual" and self.family is None:
            raise ParameterError("dual norm requires an operator family")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "seeds", seeds)

    @property
    def n_paths(self) -> int:
        return self.states.shape[0]

    def norms(self, x) -> np.ndarray:
        if self.norm_kind == "dual":
            return self.family.norm(x)
        return np.linalg.norm(x, axis=-1)

    def euclidean_states(self) -> np.ndarray:
        """States in coordinates where ``norms`` is the Euclidean norm."""
        if self.norm_kind == "dual":
            return self.family.to_euclidean(self.states)
        return self.states

    def scaled(self, factor: float) -> "Ensemble":
        return Ensemble(self.times, factor * self.states, self.seeds, self.problem_hash, self.family, self.norm_kind)

    def subset(self, index) -> "Ensemble":
        return Ensemble(self.times, self.states[index], self.seeds[index], self.problem_hash,
                        self.family, self.norm_kind)

    def mapped(self, theta: float) -> "Ensemble":
        """The ensemble of ``A(t)^theta X(t)``."""
        if self.family is None:
            raise ParameterError("operator powers need an operator family")
        return Ensemble(self.times, apply_power(self.family, self.times, self.states, theta), self.seeds,
                        self.problem_hash, self.family, self.norm_kind)


def simulate_ensemble(problem: ProblemSpec, scheme: EvolutionScheme, grid, n_paths: int, seed: int,
                      chunk: int = 256, threads: int = 1, start: int = 0) -> Ensemble:
    """Solve ``n_paths`` independent paths (path ``p`` keyed by ``(seed, start + p)``).

    Chunks are fixed in size and reassembled in order, so results do not
    depend on ``threads``.
    """
    grid = np.asarray(grid, dtype=float)
    step_mats = scheme.step_matrices(grid)
    d = problem.noise.d

    def run(lo):
        P = min(chunk, n_paths - lo)
        inc = sample_brownian_batch(d, grid, seed, P, start + lo)
        return solve_batch(problem, scheme, grid, inc, step_mats)[0]

    starts = list(range(0, n_paths, chunk))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            blocks = list(pool.map(run, starts))
    else:
        blocks = [run(lo) for lo in starts]
    seeds = np.array([[seed, start + p] for p in range(n_paths)], dtype=np.uint64)
    return Ensemble(grid, np.concatenate(blocks), seeds, problem.digest(), problem.family, "dual")


@dataclass
class StructureTable:
    lags: np.ndarray
    moments: np.ndarray
    standard_errors: np.ndarray
    p: float
    norm_kind: str = "l2"
    t_min: float = 0.0


def default_lags(times, lo_steps: int = 4, hi_fraction: float = 1 / 8) -> np.ndarray:
    """Dyadic lags from ``lo_steps`` grid steps up to ``hi_fraction * T``."""
    times = np.asarray(times, dtype=float)
    dt = times[1] - times[0]
    span = times[-1] - times[0]
    lags = []
    k = lo_steps
    while k * dt <= hi_fraction * span * (1 + 1e-12):
        lags.append(k * dt)
        k *= 2
    return np.array(lags)


def structure_function(ensemble: Ensemble, p: float, lags=None, t_min: float = 0.0,
                       n_batches: int = DEFAULT_BATCHES) -> StructureTable:
    """``E |zeta(t + tau) - zeta(t)|^p`` per lag, averaged over paths and start times ``t >= t_min``."""
    if p < 1:
        raise ParameterError(f"moment order must be >= 1, got {p}")
    times = ensemble.times
    dt = np.diff(times)
    if not np.allclose(dt, dt[0], rtol=1e-9):
        raise ShapeError("structure functions need a uniform time grid")
    dt = dt[0]
    lags = default_lags(times) if lags is None else np.asarray(lags, dtype=float)
    start = int(np.searchsorted(times, t_min - 1e-12))
    x = ensemble.euclidean_states()
    moments, ses = [], []
    for tau in lags:
        k = int(round(tau / dt))
        if k < 1 or abs(k * dt - tau) > 1e-9 * max(tau, dt):
            raise ParameterError(f"lag {tau} is not a positive multiple of the grid step {dt}")
        if start + k >= times.size:
            raise ParameterError(f"lag {tau} leaves no admissible start time")
        diff = x[:, start + k:, :] - x[:, start:-k, :]
        per_path = np.mean(np.linalg.norm(diff, axis=-1) ** p, axis=1)
        nb = min(n_batches, per_path.size)
        if nb < 2:
            mean, se = float(per_path.mean()), 0.0
        else:
            mean, se = batch_stats(per_path, nb)
        moments.append(float(mean))
        ses.append(float(se))
    return StructureTable(lags, np.array(moments), np.array(ses), p, ensemble.norm_kind, float(t_min))


@dataclass
class FitReport:
    epsilon_hat: float
    epsilon_ci: tuple[float, float]
    holder_hat: float
    kolmogorov_exponent: float
    C_hat: float
    window: tuple[float, float]
    p: float = 2.0
    degenerate: bool = False
    binding_time: float | None = None
    dominated: bool | None = None
    details: dict = field(default_factory=dict)


def estimate_holder_exponent(table: StructureTable) -> FitReport:
    """Weighted least squares of log moments on log lags.

    ``holder_hat = slope / p`` (``epsilon / 2`` for ``p = 2``);
    ``kolmogorov_exponent = (slope - 1) / p`` is the general-moment bound.
    """
    lags, m, se = table.lags, table.moments, table.standard_errors
    if lags.size < 4:
        raise InsufficientDataError(f"exponent fit needs at least 4 lags, got {lags.size}")
    window = (float(lags.min()), float(lags.max()))
    nan = float("nan")
    if np.any(m <= 0):
        return FitReport(nan, (nan, nan), nan, nan, 0.0, window, table.p, degenerate=True)
    x, y = np.log(lags), np.log(m)
    rel = se / m
    if np.all(rel > 0) and np.all(np.isfinite(rel)):
        coef, cov = np.polyfit(x, y, 1, w=1.0 / rel, cov="unscaled")
    else:
        coef, cov = np.polyfit(x, y, 1, cov=True)
    slope, intercept = float(coef[0]), float(coef[1])
    half = 1.96 * float(np.sqrt(max(cov[0, 0], 0.0)))
    return FitReport(slope, (slope - half, slope + half), slope / table.p, (slope - 1) / table.p,
                     float(np.exp(intercept)), window, table.p)


def bound_shape(problem: ProblemSpec, times, regime: str | None = None) -> tuple[str, np.ndarray, dict]:
    """Right-hand side of the second-moment bound for ``A^beta X`` without the constant."""
    fam = problem.family
    beta, delta, sigma = problem.beta, problem.delta, problem.sigma
    natural = REGIME_SMOOTH if beta >= delta else REGIME_ROUGH
    if regime is not None and regime != natural:
        raise ParameterError(f"regime {regime} requested but beta={beta}, delta={delta} selects {natural}")
    times = np.asarray(times, dtype=float)
    xi_term = float(fam.norm(fam.power(0.0, beta) @ problem.xi)) ** 2
    positive = times > 0
    f_path = SampledPath(times[positive], problem.forcing_on(times)[positive], "dual", fam)
    f_norm = weighted_holder_norm(f_path, WeightedHolderParams(beta, sigma)).norm if positive.sum() >= 2 else 0.0
    g0 = fam.noise_norm(fam.power(0.0, delta) @ problem.noise(0.0)) ** 2
    if natural == REGIME_SMOOTH:
        e = 1 - 2 * (beta - delta)
        rhs = xi_term + f_norm**2 + g0 * times**e + times ** (e + 2 * sigma)
    else:
        rhs = xi_term + f_norm**2 + g0 * times + times ** (1 + 2 * sigma)
    return natural, rhs, {"xi_term": xi_term, "forcing_norm": f_norm, "g0_term": g0}


def moment_curve(ensemble: Ensemble, theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Mean and batch standard error of ``|A(t)^theta X(t)|^2`` on the grid."""
    sq = ensemble.norms(ensemble.mapped(theta).states if theta else ensemble.states) ** 2
    nb = min(DEFAULT_BATCHES, ensemble.n_paths)
    if nb < 2:
        return sq.mean(axis=0), np.zeros(sq.shape[1])
    return batch_stats(sq, nb)


def moment_bound_check(ensemble: Ensemble, problem: ProblemSpec, regime: str | None = None) -> FitReport:
    """Smallest constant making the bound dominate ``E|A(t)^beta X(t)|^2`` at every grid time."""
    regime, rhs, ingredients = bound_shape(problem, ensemble.times, regime)
    curve, se = moment_curve(ensemble, problem.beta)
    window = (float(ensemble.times[0]), float(ensemble.times[-1]))
    nan = float("nan")
    if np.all(curve == 0):
        return FitReport(nan, (nan, nan), nan, nan, 0.0, window, 2.0, binding_time=None, dominated=True,
                         details={"regime": regime, **ingredients})
    if np.any((rhs <= 0) & (curve > 0)):
        c_hat, binding = float("inf"), float(ensemble.times[np.argmax((rhs <= 0) & (curve > 0))])
    else:
        ratio = np.where(rhs > 0, curve / np.where(rhs > 0, rhs, 1.0), 0.0)
        k = int(np.argmax(ratio))
        c_hat, binding = float(ratio[k]), float(ensemble.times[k])
    dominated = bool(np.isfinite(c_hat) and np.all(curve <= c_hat * rhs * (1 + 1e-12)))
    return FitReport(nan, (nan, nan), nan, nan, c_hat, window, 2.0, binding_time=binding, dominated=dominated,
                     details={"regime": regime, **ingredients, "curve": curve, "curve_se": se, "rhs": rhs})


def summarize_ensemble(ensemble: Ensemble, weights=(0.0,)) -> dict:
    """Per-``theta`` mean curves of ``|A^theta X|^2`` with 3-sigma batch bands."""
    out = {"times": ensemble.times.tolist(), "paths": ensemble.n_paths, "problem_hash": ensemble.problem_hash,
           "curves": {}}
    for th in weights:
        mean, se = moment_curve(ensemble, th)
        out["curves"][f"{th:g}"] = {"mean": mean.tolist(), "se": se.tolist(),
                                    "lo": (mean - 3 * se).tolist(), "hi": (mean + 3 * se).tolist()}
    return out
