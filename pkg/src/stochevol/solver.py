"""Strict solutions ``X = I1 + W0`` and their consistency diagnostics.

All time integrals use left endpoints on the shared step grid so that the
Itô sum, the drift integral and the convolution quadrature form one discrete
calculus.  Defects are measured in the dual norm of the operator family.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import HypothesisError, ShapeError
from .evolution import (
    DETERMINISTIC,
    FROZEN,
    FULL,
    IMPLICIT,
    STOCHASTIC,
    EvolutionScheme,
    Trajectory,
    convolve,
    weighted_piece,
)
from .operators import OperatorFamily
from .stochastic import BrownianPath, NoiseMap, apply_power


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Data of ``dX + A(t) X dt = F(t) dt + G(t) dw``, ``X(0) = xi``.

    ``forcing`` maps ``t`` to an ``n``-vector.  ``delta1`` is only needed for
    the frozen-operator noise condition.
    """

    family: OperatorFamily
    forcing: Callable[[float], np.ndarray]
    beta: float
    sigma: float
    noise: NoiseMap
    delta: float
    xi: np.ndarray
    delta1: float | None = None
    preset: str = ""
    label: str = ""

    def __post_init__(self):
        fam = self.family
        if not 0 < self.beta <= 1:
            raise HypothesisError("(F1)", f"beta must lie in (0, 1], got {self.beta}")
        cap = min(self.beta, fam.mu + fam.nu - 1)
        if not 0 < self.sigma < cap:
            raise HypothesisError("(F1)", f"sigma = {self.sigma} must lie in (0, min(beta, mu + nu - 1)) = (0, {cap:g})")
        if not self.delta > 0.5:
            raise HypothesisError("(G1)", f"delta must exceed 1/2, got {self.delta}")
        if self.delta1 is not None and not (self.delta < self.delta1 <= 1):
            raise HypothesisError("(G2)", f"need delta < delta1 <= 1, got delta={self.delta}, delta1={self.delta1}")
        xi = np.asarray(self.xi, dtype=float)
        if xi.shape != (fam.dim,):
            raise ShapeError(f"initial value of shape {xi.shape} for state dimension {fam.dim}")
        if not np.isfinite(fam.norm(fam.power(0.0, self.beta) @ xi)):
            raise HypothesisError("xi", "A(0)^beta xi is not finite")
        object.__setattr__(self, "xi", xi)

    @property
    def T(self) -> float:
        return self.family.T

    def forcing_on(self, grid) -> np.ndarray:
        """Forcing at left endpoints; a singular value at ``t = 0`` is replaced by the midpoint value of the first cell."""
        grid = np.asarray(grid, dtype=float)
        vals = np.array([np.asarray(self.forcing(t), dtype=float) for t in grid])
        if not np.all(np.isfinite(vals[0])) and grid.size > 1:
            vals[0] = np.asarray(self.forcing(0.5 * (grid[0] + grid[1])), dtype=float)
        return vals

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(repr((self.preset, self.label, self.beta, self.sigma, self.delta, self.delta1,
                       self.family.name, self.family.dim, self.T)).encode())
        h.update(np.ascontiguousarray(self.xi).tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class SolutionPath:
    X: Trajectory
    I1: Trajectory
    W0: Trajectory
    W1: Trajectory
    driving: BrownianPath
    scheme_tag: str
    family: OperatorFamily
    noise_increments: np.ndarray


def solve_batch(problem: ProblemSpec, scheme: EvolutionScheme, grid, increments,
                step_mats=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized solve for Brownian increments of shape ``(P, M, d)``.

    Returns ``(X, I1, W0)``; ``I1`` has shape ``(M+1, n)``, the others
    ``(P, M+1, n)``.
    """
    grid = np.asarray(grid, dtype=float)
    if step_mats is None:
        step_mats = scheme.step_matrices(grid)
    dt = np.diff(grid)[:, None]
    i1 = convolve(step_mats, problem.xi, dt * problem.forcing_on(grid)[:-1])
    g = problem.noise.sample(grid[:-1])
    inc = np.einsum("knd,pkd->pkn", g, increments)
    w0 = convolve(step_mats, np.zeros(problem.family.dim), inc)
    return i1[None] + w0, i1, w0


def strict_solve(problem: ProblemSpec, path: BrownianPath, scheme: EvolutionScheme, grid=None) -> SolutionPath:
    if grid is not None:
        path = path.restrict_to(grid)
    if path.d != problem.noise.d:
        raise ShapeError(f"noise expects d={problem.noise.d}, driver has d={path.d}")
    if abs(path.times[-1] - problem.T) > 1e-12 or path.times[0] != 0:
        raise ShapeError("driving path must cover [0, T]")
    times = path.times
    X, i1, w0 = solve_batch(problem, scheme, times, path.increments[None])
    fam = problem.family
    w1 = apply_power(fam, times, w0[0], 1.0)
    tag = scheme.tag
    g = problem.noise.sample(times[:-1])
    return SolutionPath(
        X=Trajectory(times, X[0], tag, FULL),
        I1=Trajectory(times, i1, tag, DETERMINISTIC),
        W0=Trajectory(times, w0[0], tag, STOCHASTIC),
        W1=Trajectory(times, w1, tag, weighted_piece(1.0)),
        driving=path,
        scheme_tag=tag,
        family=fam,
        noise_increments=np.einsum("knd,kd->kn", g, path.increments),
    )


def _left_cumsum(values, dt):
    """``sum_{k<m} values_k dt_k`` for ``m = 0 .. M`` along axis -2."""
    v = np.asarray(values)[..., :-1, :] * dt[:, None]
    z = np.zeros(v.shape[:-2] + (1, v.shape[-1]))
    return np.concatenate([z, np.cumsum(v, axis=-2)], axis=-2)


def _stoch_cumsum(noise_inc):
    z = np.zeros(noise_inc.shape[:-2] + (1, noise_inc.shape[-1]))
    return np.concatenate([z, np.cumsum(noise_inc, axis=-2)], axis=-2)


def residual_curve(problem: ProblemSpec, times, X, noise_inc) -> np.ndarray:
    """Dual norm of ``X(t) - xi + int A X - int F - int G dw`` on the grid (any leading axes)."""
    fam = problem.family
    dt = np.diff(times)
    ax = apply_power(fam, times, X, 1.0)
    F = problem.forcing_on(times)
    defect = X - problem.xi + _left_cumsum(ax, dt) - _left_cumsum(F, dt) - _stoch_cumsum(noise_inc)
    return fam.norm(defect)


def strict_residual(problem: ProblemSpec, sol: SolutionPath) -> float:
    """Largest grid defect of the integrated strict-solution identity."""
    return float(residual_curve(problem, sol.X.times, sol.X.states, sol.noise_increments).max())


def fubini_curve(family: OperatorFamily, times, W0, W1, noise_inc) -> np.ndarray:
    dt = np.diff(times)
    defect = W0 + _left_cumsum(W1, dt) - _stoch_cumsum(noise_inc)
    return family.norm(defect)


def fubini_defect(sol: SolutionPath) -> float:
    """Largest grid defect of ``W0(t) + int_0^t W1 ds = int_0^t G dw``."""
    return float(fubini_curve(sol.family, sol.X.times, sol.W0.states, sol.W1.states,
                              sol.noise_increments).max())


def cross_scheme_distance(problem: ProblemSpec, path: BrownianPath, substeps_per_unit: int | None = None,
                          grid=None) -> float:
    """Sup-over-grid dual-norm distance of frozen-exponential and implicit-Euler solutions on one noise path."""
    if grid is not None:
        path = path.restrict_to(grid)
    if substeps_per_unit is None:
        substeps_per_unit = max(1, int(round((path.times.size - 1) / problem.T)))
    a = strict_solve(problem, path, EvolutionScheme(problem.family, FROZEN, substeps_per_unit))
    b = strict_solve(problem, path, EvolutionScheme(problem.family, IMPLICIT, substeps_per_unit))
    return float(problem.family.norm(a.X.states - b.X.states).max())
