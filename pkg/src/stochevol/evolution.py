"""Evolution operators ``U(t, s)`` of ``dX/dt + A(t) X = 0`` and the deterministic solve.

Two schemes realize ``U``: piecewise-frozen exponentials (coefficients frozen
at the left end of every substep) and implicit Euler.  Substep nodes are the
union of the global grid ``k / substeps_per_unit`` with the requested end
points, so propagators between global nodes compose exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import NumericError, OrderingError, ParameterError, ShapeError
from .operators import OperatorFamily

FROZEN = "frozen-exponential"
IMPLICIT = "implicit-euler"
SCHEME_KINDS = (FROZEN, IMPLICIT)

FULL, DETERMINISTIC, STOCHASTIC = "full", "I1", "W0"


def weighted_piece(theta: float) -> str:
    return f"W{theta:g}"


def matrix_exponential(A) -> np.ndarray:
    """``exp(A)``: spectral path for symmetric input, scaling-and-squaring otherwise."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericError("matrix exponential of a non-finite matrix")
    if np.array_equal(A, A.T):
        lam, v = np.linalg.eigh(A)
        return (v * np.exp(lam)) @ v.T
    return scipy.linalg.expm(A)


@dataclass(frozen=True, eq=False)
class EvolutionScheme:
    family: OperatorFamily
    kind: str = FROZEN
    substeps_per_unit: int = 1000

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ParameterError(f"unknown scheme kind {self.kind!r}")
        if int(self.substeps_per_unit) != self.substeps_per_unit or self.substeps_per_unit < 1:
            raise ParameterError(f"substeps_per_unit must be a positive integer, got {self.substeps_per_unit}")

    @property
    def tag(self) -> str:
        return f"{self.kind}/{self.substeps_per_unit}"

    def nodes(self, s: float, t: float) -> np.ndarray:
        if t < s:
            raise OrderingError(f"propagation needs s <= t, got s={s}, t={t}")
        if t == s:
            return np.array([s], dtype=float)
        k = self.substeps_per_unit
        eps = 1e-9 / k
        inner = np.arange(np.floor(s * k) + 1, np.ceil(t * k)) / k
        inner = inner[(inner > s + eps) & (inner < t - eps)]
        return np.concatenate(([s], inner, [t]))

    def factor(self, t0: float, t1: float) -> np.ndarray:
        """One substep ``[t0, t1]``."""
        dt = t1 - t0
        if self.kind == FROZEN:
            return self.family.spectral(t0).apply(lambda lam: np.exp(-dt * lam))
        return self.family.spectral(t1).apply(lambda lam: 1.0 / (1.0 + dt * lam))

    def propagator(self, s: float, t: float) -> np.ndarray:
        """Matrix of ``U(t, s)``."""
        nodes = self.nodes(s, t)
        u = np.eye(self.family.dim)
        for t0, t1 in zip(nodes[:-1], nodes[1:]):
            u = self.factor(t0, t1) @ u
        return u

    def step_matrices(self, times: Sequence[float]) -> list[np.ndarray]:
        """``U(t_{m+1}, t_m)`` for consecutive grid times."""
        times = np.asarray(times, dtype=float)
        return [self.propagator(a, b) for a, b in zip(times[:-1], times[1:])]


def propagate(scheme: EvolutionScheme, s: float, t: float, v) -> np.ndarray:
    """``U(t, s) v``; ``v`` may carry extra trailing columns."""
    if t < s:
        raise OrderingError(f"propagation needs s <= t, got s={s}, t={t}")
    v = np.array(v, dtype=float)
    if s == t:
        return v
    nodes = scheme.nodes(s, t)
    for t0, t1 in zip(nodes[:-1], nodes[1:]):
        v = scheme.factor(t0, t1) @ v
    return v


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    scheme_tag: str = ""
    piece: str = FULL

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2 or states.shape[0] != times.size:
            raise ShapeError(f"{times.size} times but states of shape {states.shape}")
        if np.any(np.diff(times) <= 0):
            raise OrderingError("trajectory times must be strictly increasing")
        states = states.copy()
        states.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    def __add__(self, other: "Trajectory") -> "Trajectory":
        if not np.array_equal(self.times, other.times):
            raise ShapeError("trajectories live on different grids")
        return Trajectory(self.times, self.states + other.states, self.scheme_tag, FULL)


def convolve(step_mats: Sequence[np.ndarray], x0, increments) -> np.ndarray:
    """Left-point convolution ``x_{m+1} = U_m (x_m + inc_m)``.

    ``x0`` has shape ``(..., n)`` and ``increments`` shape ``(..., M, n)``;
    the result has shape ``(..., M + 1, n)``.  This is the discrete form of
    ``U(t,0) x0 + sum_k U(t, t_k) inc_k`` with exact grid cocycles.
    """
    increments = np.asarray(increments, dtype=float)
    M = increments.shape[-2]
    if len(step_mats) != M:
        raise ShapeError(f"{len(step_mats)} step matrices for {M} increments")
    x = np.broadcast_to(np.asarray(x0, dtype=float), increments.shape[:-2] + increments.shape[-1:]).copy()
    out = np.empty(increments.shape[:-2] + (M + 1, increments.shape[-1]))
    out[..., 0, :] = x
    for m, u in enumerate(step_mats):
        x = (x + increments[..., m, :]) @ u.T
        out[..., m + 1, :] = x
    return out


def deterministic_solve(scheme: EvolutionScheme, xi, F, grid) -> Trajectory:
    """``X(t) = U(t,0) xi + int_0^t U(t,s) F(s) ds`` with left-endpoint quadrature.

    ``F`` is a :class:`~stochevol.holder.SampledPath` or an array of values
    sampled on ``grid``.
    """
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(getattr(F, "values", F), dtype=float)
    f_times = getattr(F, "times", None)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[0] != grid.size or (f_times is not None and not np.allclose(f_times, grid)):
        raise ShapeError("forcing is not sampled on the solver grid")
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (values.shape[1],) or xi.size != scheme.family.dim:
        raise ShapeError(f"initial value of shape {xi.shape} does not match state dimension")
    if not np.all(np.isfinite(values[:-1])):
        raise NumericError("forcing has non-finite left-endpoint samples")
    dt = np.diff(grid)[:, None]
    states = convolve(scheme.step_matrices(grid), xi, dt * values[:-1])
    return Trajectory(grid, states, scheme.tag, DETERMINISTIC)


@dataclass
class EvolutionConstants:
    iota: dict[float, float]
    kappa: dict[tuple[float, float], float]
    c_mu_nu: float
    scan_grid: list[tuple[float, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "iota": {f"{k:g}": v for k, v in self.iota.items()},
            "kappa": {f"{a:g},{b:g}": v for (a, b), v in self.kappa.items()},
            "c_mu_nu": self.c_mu_nu,
            "scan_grid": [list(p) for p in self.scan_grid],
        }


def evolution_constants_scan(scheme: EvolutionScheme, thetas: Sequence[float],
                             pairs: Sequence[tuple[float, float]],
                             kappa_pairs: Sequence[tuple[float, float]] | None = None) -> EvolutionConstants:
    """Measured constants of the smoothing estimates over the given ``(s, t)`` pairs.

    ``kappa_pairs`` are ``(theta1, theta2)`` with ``theta1 <= theta2``; by
    default every ordered pair drawn from ``thetas`` with ``theta1 <= 1``.
    """
    fam = scheme.family
    bound = fam.mu + fam.nu
    thetas = [float(x) for x in thetas]
    for th in thetas:
        if not 0 <= th < bound:
            raise ParameterError(f"theta = {th} outside [0, mu + nu) = [0, {bound})")
    if kappa_pairs is None:
        kappa_pairs = [(a, b) for a in thetas for b in thetas if a <= b and a <= 1]
    for a, b in kappa_pairs:
        if not (0 <= a <= 1 and a <= b < bound):
            raise ParameterError(f"kappa pair ({a}, {b}) violates 0 <= theta1 <= 1, theta1 <= theta2 < mu + nu")
    pairs = [(float(s), float(t)) for s, t in pairs]
    if any(not t > s for s, t in pairs):
        raise OrderingError("constant scans need strictly ordered pairs s < t")

    iota = dict.fromkeys(thetas, 0.0)
    kappa = dict.fromkeys([tuple(p) for p in kappa_pairs], 0.0)
    c_mu_nu = 0.0
    for s, t in pairs:
        tau = t - s
        u = scheme.propagator(s, t)
        sd_t, sd_s = fam.spectral(t), fam.spectral(s)
        for th in thetas:
            iota[th] = max(iota[th], tau**th * fam.op_norm(sd_t.power(th) @ u))
        for a, b in kappa:
            m = sd_t.power(b) @ u @ sd_s.power(a - b)
            kappa[(a, b)] = max(kappa[(a, b)], tau**a * fam.op_norm(m))
        a_s = fam.matrix(s)
        semigroup = sd_s.apply(lambda lam: np.exp(-tau * lam))
        defect = (fam.matrix(t) @ u @ sd_s.power(-1.0) - semigroup) @ a_s
        c_mu_nu = max(c_mu_nu, tau ** (1 - bound) * fam.op_norm(defect))
    return EvolutionConstants(iota, kappa, c_mu_nu, pairs)
