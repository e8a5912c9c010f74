"""Brownian drivers, Itô sums, stochastic convolutions and noise conditions.

Integrands are evaluated at left endpoints of the step grid, the discrete
counterpart of predictability.  Every path draws from its own Philox stream
keyed by ``(seed, path_index)``; the ``k``-th increment of a path is a fixed
function of ``(seed, path_index, k)`` regardless of how paths are batched.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InsufficientDataError, OrderingError, ParameterError, ShapeError
from .evolution import EvolutionScheme, Trajectory, convolve, weighted_piece
from .operators import OperatorFamily, fractional_difference_constant

_MASK64 = (1 << 64) - 1


def rng_for(seed: int, path_index: int = 0) -> np.random.Generator:
    key = np.array([int(seed) & _MASK64, int(path_index) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise OrderingError("time grid needs at least two points")
    if np.any(np.diff(grid) <= 0):
        raise OrderingError("time grid must be strictly increasing")
    return grid


@dataclass(frozen=True, eq=False)
class BrownianPath:
    d: int
    times: np.ndarray
    increments: np.ndarray
    seed: int = 0
    path_index: int = 0

    def __post_init__(self):
        inc = np.asarray(self.increments, dtype=float)
        if inc.ndim == 1:
            inc = inc[:, None]
        if inc.shape != (len(self.times) - 1, self.d):
            raise ShapeError(f"increments of shape {inc.shape} for {len(self.times)} times, d={self.d}")
        object.__setattr__(self, "increments", inc)
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))

    @property
    def values(self) -> np.ndarray:
        """``w`` on the grid, starting from 0."""
        return np.vstack([np.zeros((1, self.d)), np.cumsum(self.increments, axis=0)])

    def restrict_to(self, grid) -> "BrownianPath":
        """Sum increments onto a coarser grid made of path times."""
        grid = _check_grid(grid)
        idx = np.searchsorted(self.times, grid)
        if np.any(idx >= self.times.size) or not np.allclose(self.times[idx], grid, rtol=0, atol=1e-12):
            raise ShapeError("grid is not a sub-grid of the path grid")
        w = self.values[idx]
        return BrownianPath(self.d, grid, np.diff(w, axis=0), self.seed, self.path_index)

    def coarsen(self, factor: int) -> "BrownianPath":
        return self.restrict_to(self.times[::factor])


def brownian_increments(d: int, grid, seed: int, path_index: int = 0) -> np.ndarray:
    grid = _check_grid(grid)
    if d < 1:
        raise ParameterError(f"driver dimension must be >= 1, got {d}")
    z = rng_for(seed, path_index).standard_normal((grid.size - 1, d))
    return z * np.sqrt(np.diff(grid))[:, None]


def sample_brownian(d: int, grid, seed: int, path_index: int = 0) -> BrownianPath:
    grid = _check_grid(grid)
    return BrownianPath(d, grid, brownian_increments(d, grid, seed, path_index), seed, path_index)


def sample_brownian_batch(d: int, grid, seed: int, n_paths: int, start: int = 0) -> np.ndarray:
    """Increments of paths ``start .. start + n_paths - 1``, shape ``(P, M, d)``."""
    grid = _check_grid(grid)
    out = np.empty((n_paths, grid.size - 1, d))
    for p in range(n_paths):
        out[p] = brownian_increments(d, grid, seed, start + p)
    return out


@dataclass(frozen=True, eq=False)
class NoiseMap:
    """``t -> G(t)``, an ``n x d`` matrix."""

    G: Callable[[float], np.ndarray]
    d: int = 1
    description: str = ""

    def __call__(self, t: float) -> np.ndarray:
        g = np.asarray(self.G(t), dtype=float)
        if g.ndim == 1:
            g = g[:, None]
        return g

    def sample(self, times) -> np.ndarray:
        return np.array([self(t) for t in times])

    @classmethod
    def zero(cls, n: int, d: int = 1) -> "NoiseMap":
        z = np.zeros((n, d))
        return cls(lambda t: z, d, "zero")

    @classmethod
    def separable(cls, g: Callable[[float], float], phi, description: str = "") -> "NoiseMap":
        phi = np.asarray(phi, dtype=float).reshape(-1, 1)
        return cls(lambda t: g(t) * phi, 1, description or "g(t) * phi(x)")


def ito_integral(phi, path: BrownianPath) -> np.ndarray:
    """``sum_k phi(t_k) dw_k`` with ``phi`` given per step, shape ``(M, n, d)`` or ``(M,)``."""
    phi = np.asarray(phi, dtype=float)
    M = path.increments.shape[0]
    if phi.ndim == 1:
        phi = phi[:, None, None]
    if phi.shape[0] != M or phi.ndim != 3 or phi.shape[2] != path.d:
        raise ShapeError(f"integrand of shape {phi.shape} for {M} steps and d={path.d}")
    return np.einsum("knd,kd->n", phi, path.increments)


def _noise_increments(noise: NoiseMap, times, increments) -> np.ndarray:
    """``G(t_k) dw_k`` for every step; ``increments`` of shape ``(..., M, d)``."""
    g = noise.sample(times[:-1])
    return np.einsum("knd,...kd->...kn", g, increments)


def stochastic_convolution(scheme: EvolutionScheme, noise: NoiseMap, path: BrownianPath,
                           theta: float = 0.0, grid=None, method: str = "recursive") -> Trajectory:
    """``W_theta(t_m) = sum_{k<m} A(t_m)^theta U(t_m, t_k) G(t_k) dw_k``.

    ``method="recursive"`` runs ``W_0`` through the step cocycle and applies
    ``A(t_m)^theta`` afterwards; ``method="direct"`` evaluates the double sum
    literally (quadratic cost, for cross-checks).
    """
    if not 0 <= theta <= 1:
        raise ParameterError(f"theta must lie in [0, 1], got {theta}")
    if grid is not None:
        path = path.restrict_to(grid)
    times = path.times
    fam = scheme.family
    if noise.d != path.d:
        raise ShapeError(f"noise expects d={noise.d}, driver has d={path.d}")
    inc = _noise_increments(noise, times, path.increments)
    if method == "recursive":
        w0 = convolve(scheme.step_matrices(times), np.zeros(fam.dim), inc)
        states = apply_power(fam, times, w0, theta)
    elif method == "direct":
        states = np.zeros((times.size, fam.dim))
        for m in range(1, times.size):
            acc = np.zeros(fam.dim)
            for k in range(m):
                acc += scheme.propagator(times[k], times[m]) @ inc[k]
            states[m] = fam.power(times[m], theta) @ acc if theta else acc
    else:
        raise ParameterError(f"unknown method {method!r}")
    return Trajectory(times, states, scheme.tag, weighted_piece(theta))


def apply_power(family: OperatorFamily, times, states, theta: float) -> np.ndarray:
    """``A(t_m)^theta x_m`` along the time axis of ``states`` (shape ``(..., M+1, n)``)."""
    if theta == 0:
        return np.array(states, dtype=float)
    out = np.empty_like(states)
    for m, t in enumerate(times):
        op = family.matrix(t) if theta == 1 else family.power(t, theta)
        out[..., m, :] = states[..., m, :] @ op.T
    return out


@dataclass
class NoiseConditionReport:
    delta: float
    zeta_hat: float
    delta1: float
    zeta_bar_hat: float
    g1_holds: bool
    g2_holds: bool
    derived_g1_constant: float
    sigma: float = 0.0
    g0_delta_norm: float = 0.0
    g_delta1_sup: float = 0.0
    fractional_terms: dict = field(default_factory=dict)


def _quotient_sup(values, times, sigma, norm):
    best = 0.0
    for j in range(1, len(times)):
        for i in range(j):
            best = max(best, norm(values[j] - values[i]) / (times[j] - times[i]) ** sigma)
    return best


def _stable_under_halving(values, times, sigma, norm):
    fine = _quotient_sup(values, times, sigma, norm)
    coarse = _quotient_sup(values[::2], times[::2], sigma, norm)
    if not np.isfinite(fine):
        return False, fine
    if coarse == 0:
        return fine == 0, fine
    return fine / coarse < 0.5 * (1 + 2**sigma), fine


def noise_condition_check(noise: NoiseMap, family: OperatorFamily, delta: float, delta1: float,
                          sigma: float, times) -> NoiseConditionReport:
    """Measure the Hölder constants of both noise conditions and the constant implied by (G2).

    The implied constant follows the splitting
    ``A(t)^d G(t) - A(s)^d G(s) = A(t)^d [G(t) - G(s)] + [A(t)^d - A(s)^d] G(s)``
    with the fractional-difference constants measured on the same pairs, using
    the intermediate exponent ``(delta + delta1) / 2``.
    """
    if not 0.5 < delta < delta1 <= 1:
        raise ParameterError(f"need 1/2 < delta < delta1 <= 1, got {delta}, {delta1}")
    if not 0 < sigma <= 1:
        raise ParameterError(f"sigma must lie in (0, 1], got {sigma}")
    times = np.asarray(times, dtype=float)
    if times[0] > 0:
        times = np.concatenate(([0.0], times))
    if np.any(np.diff(times) <= 0):
        raise OrderingError("times must be strictly increasing")
    g = noise.sample(times)
    norm = family.noise_norm
    a_delta_g = np.array([family.power(t, delta) @ gt for t, gt in zip(times, g)])
    a0_d1 = family.power(0.0, delta1)
    a0_d1_g = np.array([a0_d1 @ gt for gt in g])

    g1_ok, zeta_hat = _stable_under_halving(a_delta_g, times, sigma, norm)
    g2_ok, zeta_bar = _stable_under_halving(a0_d1_g, times, sigma, norm)
    g0_norm = norm(a_delta_g[0])
    gd1 = np.array([norm(x) for x in a0_d1_g])

    mu = family.mu
    delta_mid = 0.5 * (delta + delta1)
    alpha_1 = fractional_difference_constant(family, delta, delta1, times)
    alpha_2 = fractional_difference_constant(family, delta, delta_mid, times)
    alpha_3 = fractional_difference_constant(family, delta_mid, delta1, times)
    inv_norm = 1.0 / family.spectral(0.0).lambda_min
    derived = 0.0
    for j in range(1, times.size):
        t = times[j]
        for i in range(j):
            s = times[i]
            lag = t - s
            first = (alpha_1 * t**mu + inv_norm ** (delta1 - delta)) * zeta_bar
            second = alpha_2 * (alpha_3 * s**mu + inv_norm ** (delta1 - delta_mid)) * gd1[i] * lag ** (mu - sigma)
            derived = max(derived, first + second)
    return NoiseConditionReport(
        delta=delta, zeta_hat=float(zeta_hat), delta1=delta1, zeta_bar_hat=float(zeta_bar),
        g1_holds=bool(g1_ok and np.isfinite(g0_norm)), g2_holds=bool(g2_ok and np.all(np.isfinite(gd1))),
        derived_g1_constant=float(derived), sigma=sigma, g0_delta_norm=float(g0_norm),
        g_delta1_sup=float(gd1.max()),
        fractional_terms={"alpha_delta_delta1": alpha_1, "alpha_delta_mid": alpha_2,
                          "alpha_mid_delta1": alpha_3, "delta_mid": delta_mid,
                          "inverse_norm": inv_norm},
    )


@dataclass
class MomentDiagnostics:
    isometry_ratio: float
    isometry_se: float
    bdg_ratio: float
    bdg_se: float
    c_E: float
    c_p_E: float
    p: float
    paths: int
    seed: int
    lhs_isometry: float = 0.0
    rhs_isometry: float = 0.0
    martingale_times: list = field(default_factory=list)
    martingale_means: list = field(default_factory=list)
    martingale_se: list = field(default_factory=list)
    exact_zero: bool = False
    lhs_se: float = 0.0

    @property
    def isometry_ci(self) -> tuple[float, float]:
        return (self.isometry_ratio - 3 * self.isometry_se, self.isometry_ratio + 3 * self.isometry_se)

    @property
    def martingale_ok(self) -> bool:
        return all(abs(m) <= 3 * s or (m == 0 and s == 0)
                   for m, s in zip(self.martingale_means, self.martingale_se))


def batch_stats(values, n_batches: int):
    """Mean over batches of contiguous samples and the standard error of that mean."""
    values = np.asarray(values, dtype=float)
    batches = np.array_split(values, n_batches)
    means = np.array([b.mean(axis=0) for b in batches])
    return means.mean(axis=0), means.std(axis=0, ddof=1) / np.sqrt(n_batches)


def moment_diagnostics(phi: Callable[[float, np.ndarray], np.ndarray], paths: int, p: float,
                       grid, seed: int = 0, d: int = 1, n_batches: int = 20,
                       chunk: int = 4096, martingale_points: int = 8) -> MomentDiagnostics:
    """Monte Carlo estimates of both sides of the Itô isometry and the BDG bound.

    ``phi(t, w_t)`` receives the left-endpoint time and the Brownian values of
    every path in the chunk (shape ``(P, d)``) and returns values broadcastable
    to ``(P, n, d)``.  Norms are Euclidean/Hilbert-Schmidt.
    """
    if not p > 1:
        raise ParameterError(f"moment order p must exceed 1, got {p}")
    if paths < 1000:
        raise InsufficientDataError(f"moment diagnostics need at least 1000 paths, got {paths}")
    grid = _check_grid(grid)
    M = grid.size - 1
    dt = np.diff(grid)
    mart_idx = np.unique(np.linspace(1, M, martingale_points).round().astype(int))

    lhs2, rhs2, sup_p, quad_p, mart = [], [], [], [], []
    for start in range(0, paths, chunk):
        P = min(chunk, paths - start)
        inc = sample_brownian_batch(d, grid, seed, P, start)
        w = np.zeros((P, d))
        acc = None
        sup_norm = np.zeros(P)
        quad = np.zeros(P)
        snaps = []
        for k in range(M):
            f = np.asarray(phi(grid[k], w), dtype=float)
            if f.ndim < 3:
                f = f.reshape((1,) * (3 - f.ndim) + f.shape) if f.ndim else f.reshape(1, 1, 1)
            f = np.broadcast_to(f, (P,) + f.shape[1:])
            step = np.einsum("pnd,pd->pn", f, inc[:, k, :])
            acc = step if acc is None else acc + step
            quad += np.sum(f**2, axis=(1, 2)) * dt[k]
            sup_norm = np.maximum(sup_norm, np.linalg.norm(acc, axis=1))
            w = w + inc[:, k, :]
            if k + 1 in mart_idx:
                snaps.append(acc.copy())
        lhs2.append(np.sum(acc**2, axis=1))
        rhs2.append(quad)
        sup_p.append(sup_norm**p)
        quad_p.append(quad ** (p / 2))
        mart.append(np.stack(snaps, axis=1))
    lhs2, rhs2 = np.concatenate(lhs2), np.concatenate(rhs2)
    sup_p, quad_p = np.concatenate(sup_p), np.concatenate(quad_p)
    mart = np.concatenate(mart)

    doob = (p / (p - 1)) ** p
    if np.all(rhs2 == 0):
        return MomentDiagnostics(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, p, paths, seed, 0.0, 0.0,
                                 list(grid[mart_idx]), [0.0] * len(mart_idx), [0.0] * len(mart_idx),
                                 exact_zero=True)

    def ratio_stats(num, den):
        nb = np.array([b.mean() for b in np.array_split(num, n_batches)])
        db = np.array([b.mean() for b in np.array_split(den, n_batches)])
        r = nb / db
        return num.mean() / den.mean(), r.std(ddof=1) / np.sqrt(n_batches)

    iso, iso_se = ratio_stats(lhs2, rhs2)
    bdg, bdg_se = ratio_stats(sup_p, quad_p)
    mm, mse = batch_stats(mart, n_batches)
    # one martingale component per sampled time: the Euclidean-largest deviation
    z_idx = np.argmax(np.abs(mm) / np.where(mse > 0, mse, np.inf), axis=-1)
    means = [float(mm[i, z_idx[i]]) for i in range(mm.shape[0])]
    ses = [float(mse[i, z_idx[i]]) for i in range(mse.shape[0])]
    return MomentDiagnostics(
        isometry_ratio=float(iso), isometry_se=float(iso_se), bdg_ratio=float(bdg), bdg_se=float(bdg_se),
        c_E=float(iso), c_p_E=float(bdg / doob), p=p, paths=paths, seed=seed,
        lhs_isometry=float(lhs2.mean()), rhs_isometry=float(rhs2.mean()),
        martingale_times=[float(x) for x in grid[mart_idx]], martingale_means=means, martingale_se=ses,
        lhs_se=float(batch_stats(lhs2, n_batches)[1]),
    )


def time_grid(T: float, steps: int) -> np.ndarray:
    return np.linspace(0.0, T, steps + 1)
