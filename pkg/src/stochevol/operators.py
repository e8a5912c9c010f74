"""Discretized non-autonomous elliptic operators and their spectral calculus.

The state space is the interior of a uniform grid on an interval with
homogeneous Dirichlet conditions.  ``A(t)`` is the conservative three-point
discretization of ``-d/dx(a(x,t) d/dx) + b(x,t)``.  Vectors are measured in
the discrete dual norm ``|u|_E = sqrt(h) * |A(0)^{-1/2} u|_2`` and operator
norms are the induced norms of that geometry.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from .errors import (
    CoefficientError,
    OrderingError,
    ParameterError,
    ShapeError,
    SingularityError,
    SpectralError,
)

TOL_SPEC = 1e-10
_AUTONOMOUS_FLOOR = 1e-14


@dataclass(frozen=True)
class Grid:
    """Uniform interior grid of ``n`` points on ``domain``."""

    n: int
    domain: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ParameterError(f"grid needs n >= 2 interior points, got {self.n}")
        lo, hi = self.domain
        if not hi > lo:
            raise ParameterError(f"empty domain {self.domain}")

    @property
    def h(self) -> float:
        lo, hi = self.domain
        return (hi - lo) / (self.n + 1)

    @property
    def points(self) -> np.ndarray:
        return self.domain[0] + self.h * np.arange(1, self.n + 1)

    @property
    def midpoints(self) -> np.ndarray:
        # n + 1 cell interfaces, including the two boundary half-cells
        return self.domain[0] + self.h * (np.arange(self.n + 1) + 0.5)


@dataclass(frozen=True)
class CoefficientField:
    """Diffusion ``a(x, t)`` and reaction ``b(x, t)``, vectorized in ``x``."""

    a: Callable[[np.ndarray, float], np.ndarray]
    b: Callable[[np.ndarray, float], np.ndarray]
    a0: float
    b0: float = 0.0
    description: str = ""

    def __post_init__(self):
        if not self.a0 > 0:
            raise CoefficientError(f"ellipticity bound a0 must be positive, got {self.a0}")
        if self.b0 < 0:
            raise CoefficientError(f"reaction bound b0 must be non-negative, got {self.b0}")


def _sample(fn, x, t):
    return np.broadcast_to(np.asarray(fn(x, t), dtype=float), x.shape)


def assemble_operator(coeffs: CoefficientField, t: float, grid: Grid, T: float | None = None) -> np.ndarray:
    """Symmetric tridiagonal stiffness matrix of ``A(t)``.

    ``a`` is sampled at cell interfaces, ``b`` at the nodes.
    """
    if T is not None and not (0.0 <= t <= T):
        raise ParameterError(f"t = {t} outside [0, {T}]")
    a_mid = _sample(coeffs.a, grid.midpoints, t)
    b_node = _sample(coeffs.b, grid.points, t)
    if not (np.all(np.isfinite(a_mid)) and np.all(np.isfinite(b_node))):
        raise CoefficientError(f"non-finite coefficient sample at t = {t}")
    if np.any(a_mid <= 0) or np.any(a_mid < coeffs.a0 * (1 - 1e-12)):
        raise CoefficientError(f"a(x, {t}) drops below a0 = {coeffs.a0} (min {a_mid.min():.6g})")
    if np.any(b_node < 0) or np.any(b_node < coeffs.b0 * (1 - 1e-12)):
        raise CoefficientError(f"b(x, {t}) drops below b0 = {coeffs.b0} (min {b_node.min():.6g})")
    inv_h2 = 1.0 / grid.h**2
    diag = (a_mid[:-1] + a_mid[1:]) * inv_h2 + b_node
    off = -a_mid[1:-1] * inv_h2
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def apply(self, fn) -> np.ndarray:
        """``V fn(Lambda) V^T``."""
        v = self.eigenvectors
        return (v * fn(self.eigenvalues)) @ v.T

    def power(self, theta: float) -> np.ndarray:
        if theta == 0:
            return np.eye(len(self.eigenvalues))
        return self.apply(lambda lam: lam**theta)

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])


def spectral_decomposition(A: np.ndarray, tol: float = TOL_SPEC) -> SpectralDecomposition:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise SpectralError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise SpectralError("matrix has non-finite entries")
    scale = np.linalg.norm(A, 2)
    if np.linalg.norm(A - A.T, 2) > 1e-12 * max(scale, 1e-300):
        raise SpectralError("matrix is not symmetric")
    lam, v = np.linalg.eigh(A)
    if lam[0] <= 0:
        raise SpectralError(f"matrix is not positive definite (lambda_min = {lam[0]:.3g})")
    recon = (v * lam) @ v.T
    if np.linalg.norm(recon - A, 2) > tol * scale:
        raise SpectralError("eigendecomposition failed the reconstruction check")
    return SpectralDecomposition(lam, v)


def fractional_power(A: np.ndarray, theta: float) -> np.ndarray:
    """``A^theta`` of a symmetric positive definite matrix, ``|theta| <= 2``."""
    if abs(theta) > 2:
        raise ParameterError(f"|theta| must be <= 2, got {theta}")
    return spectral_decomposition(A).power(theta)


@dataclass(frozen=True, eq=False)
class OperatorFamily:
    """A time-indexed family ``t -> A(t)`` of SPD matrices on ``[0, T]``.

    ``weight`` is the quadrature weight (the mesh width for grid families)
    entering the dual norm.  ``mu`` and ``nu`` are the Hölder exponent and
    domain exponent the family is declared to satisfy.
    """

    operator: Callable[[float], np.ndarray]
    T: float = 1.0
    nu: float = 1.0
    mu: float = 1.0
    weight: float = 1.0
    grid: Grid | None = None
    coeffs: CoefficientField | None = None
    autonomous: bool = False
    N_hat: float | None = None
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not 0 < self.nu <= 1:
            raise ParameterError(f"nu must lie in (0, 1], got {self.nu}")
        if not 1 - self.nu < self.mu <= 1:
            raise ParameterError(f"mu must lie in (1 - nu, 1], got {self.mu}")
        if not self.T > 0:
            raise ParameterError(f"horizon T must be positive, got {self.T}")
        spectral = lru_cache(maxsize=8192)(self._spectral_uncached)
        object.__setattr__(self, "_spectral", spectral)

    # constructors

    @classmethod
    def from_coefficients(cls, coeffs: CoefficientField, grid: Grid, T: float = 1.0,
                          mu: float = 1.0, nu: float = 1.0, autonomous: bool = False,
                          name: str = "") -> "OperatorFamily":
        return cls(lambda t: assemble_operator(coeffs, t, grid, T), T=T, nu=nu, mu=mu,
                   weight=grid.h, grid=grid, coeffs=coeffs, autonomous=autonomous,
                   name=name or coeffs.description)

    @classmethod
    def constant(cls, matrix, T: float = 1.0, weight: float = 1.0, name: str = "") -> "OperatorFamily":
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float)).copy()
        matrix.setflags(write=False)
        return cls(lambda t: matrix, T=T, weight=weight, autonomous=True, name=name or "constant")

    @classmethod
    def scalar(cls, a: float, T: float = 1.0) -> "OperatorFamily":
        return cls.constant([[a]], T=T, name=f"scalar a={a}")

    # spectral calculus

    def _spectral_uncached(self, t: float) -> SpectralDecomposition:
        return spectral_decomposition(self.operator(t))

    def _key(self, t: float) -> float:
        if not (-1e-12 <= t <= self.T * (1 + 1e-12)):
            raise ParameterError(f"t = {t} outside [0, {self.T}]")
        return 0.0 if self.autonomous else float(t)

    def spectral(self, t: float) -> SpectralDecomposition:
        return self._spectral(self._key(t))

    def matrix(self, t: float) -> np.ndarray:
        return self.operator(self._key(t))

    def power(self, t: float, theta: float) -> np.ndarray:
        if abs(theta) > 2:
            raise ParameterError(f"|theta| must be <= 2, got {theta}")
        return self.spectral(t).power(theta)

    @property
    def dim(self) -> int:
        return self.spectral(0.0).eigenvalues.size

    # norms of the state space E

    @property
    def _to_l2(self) -> np.ndarray:
        """Matrix ``S`` with ``|u|_E = |S u|_2``."""
        if "to_l2" not in self._cache:
            s = np.sqrt(self.weight) * self.spectral(0.0).power(-0.5)
            self._cache["to_l2"] = s
            self._cache["from_l2"] = self.spectral(0.0).power(0.5) / np.sqrt(self.weight)
        return self._cache["to_l2"]

    def to_euclidean(self, u) -> np.ndarray:
        """Coordinates ``S u`` in which the dual norm is Euclidean."""
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.dim:
            raise ShapeError(f"vector dimension {u.shape[-1]} != state dimension {self.dim}")
        return u @ self._to_l2.T

    def norm(self, u) -> np.ndarray:
        """Dual norm along the last axis."""
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.dim:
            raise ShapeError(f"vector dimension {u.shape[-1]} != state dimension {self.dim}")
        return np.linalg.norm(u @ self._to_l2.T, axis=-1)

    def op_norm(self, M) -> float:
        """Induced operator norm on E."""
        s = self._to_l2
        return float(np.linalg.norm(s @ np.asarray(M) @ self._cache["from_l2"], 2))

    def noise_norm(self, B) -> float:
        """Norm of an ``n x d`` matrix as an operator from R^d into E."""
        B = np.asarray(B, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        return float(np.linalg.norm(self._to_l2 @ B, 2))


def dual_norm(u, family: OperatorFamily) -> float:
    """Discrete H^{-1} norm ``sqrt(h) |A(0)^{-1/2} u|_2``."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 1:
        raise ShapeError(f"expected a vector, got shape {u.shape}")
    return float(family.norm(u))


@dataclass(frozen=True)
class SectorialReport:
    varpi: float
    M_hat: float
    scan: list[tuple[complex, float]]
    t: float = 0.0


def resolvent_scan(family: OperatorFamily, t: float, ray_angle: float = 3 * np.pi / 4,
                   ray_points: int = 64) -> SectorialReport:
    """Sample ``|lambda| |(lambda - A(t))^{-1}|`` on two rays outside the sector.

    Radii are log-spaced three decades beyond the spectrum on each side.  The
    Euclidean operator norm is used; for symmetric ``A(t)`` it equals
    ``|lambda| / dist(lambda, spectrum)``.
    """
    if not (np.pi / 2 < ray_angle <= np.pi):
        raise ParameterError(f"ray angle must lie in (pi/2, pi], got {ray_angle}")
    if ray_points < 8:
        raise ParameterError(f"need at least 8 ray points, got {ray_points}")
    A = family.matrix(t)
    sd = family.spectral(t)
    radii = np.logspace(np.log10(sd.lambda_min) - 3, np.log10(sd.lambda_max) + 3, ray_points)
    eye = np.eye(A.shape[0])
    scan = []
    for sign in (1.0, -1.0):
        for r in radii:
            lam = r * np.exp(1j * sign * ray_angle)
            smin = np.linalg.svd(lam * eye - A, compute_uv=False)[-1]
            if smin <= 1e-14 * max(abs(lam), sd.lambda_max):
                raise SingularityError(f"lambda = {lam} hits the spectrum")
            scan.append((complex(lam), float(abs(lam) / smin)))
    return SectorialReport(varpi=np.pi / 4, M_hat=max(v for _, v in scan), scan=scan, t=float(t))


def dyadic_pairs(times) -> list[tuple[int, int]]:
    """Index pairs ``(i, i + 2^k)`` of a sorted grid, ordered by ``(s, t)``."""
    times = np.asarray(times, dtype=float)
    m = len(times)
    pairs = []
    k = 1
    while k < m:
        pairs.extend((i, i + k) for i in range(m - k))
        k *= 2
    pairs.sort()
    return pairs


class TemporalHolderScan(NamedTuple):
    mu_hat: float
    N_hat: float
    N_fit: float
    mu_defined: bool
    lags: np.ndarray
    sup_defects: np.ndarray
    binding_pair: tuple[float, float] | None


def _check_times(times, T):
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) <= 0):
        raise OrderingError("times must be strictly increasing")
    if times[0] < 0 or times[-1] > T * (1 + 1e-12):
        raise ParameterError(f"times must lie in [0, {T}]")
    return times


def loglog_fit(x, y, weights=None) -> tuple[float, float]:
    """Least-squares slope and intercept of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    w = np.ones_like(lx) if weights is None else np.asarray(weights, float)
    slope, intercept = np.polyfit(lx, ly, 1, w=np.sqrt(w))
    return float(slope), float(intercept)


def temporal_holder_scan(family: OperatorFamily, nu: float, times) -> TemporalHolderScan:
    """Measure the exponent and constant of ``|A(t)^nu [A(t)^{-1} - A(s)^{-1}]|``.

    For every dyadic index lag the supremum of the defect over ``s`` is taken;
    ``mu_hat`` is the log-log slope of those suprema.  ``N_hat`` is the raw
    supremum of ``defect / (t - s)^mu`` with the family's declared ``mu``.
    """
    if not 0 < nu <= 1:
        raise ParameterError(f"nu must lie in (0, 1], got {nu}")
    times = _check_times(times, family.T)
    pairs = dyadic_pairs(times)
    if len(pairs) < 8:
        raise ParameterError(f"need at least 8 time pairs, got {len(pairs)}")
    inv = {i: family.power(t, -1.0) for i, t in enumerate(times)}
    defects = {}
    for i, j in pairs:
        d = family.power(times[j], nu) @ (inv[j] - inv[i])
        defects[(i, j)] = family.op_norm(d)
    if max(defects.values()) < _AUTONOMOUS_FLOOR:
        return TemporalHolderScan(float("nan"), 0.0, 0.0, False, np.array([]), np.array([]), None)

    by_lag: dict[int, list[tuple[float, float]]] = {}
    for (i, j), d in defects.items():
        by_lag.setdefault(j - i, []).append((times[j] - times[i], d))
    lags, sups = [], []
    for k in sorted(by_lag):
        vals = by_lag[k]
        lags.append(np.mean([v[0] for v in vals]))
        sups.append(max(v[1] for v in vals))
    lags, sups = np.array(lags), np.array(sups)
    ok = sups > _AUTONOMOUS_FLOOR
    if ok.sum() >= 2:
        mu_hat, intercept = loglog_fit(lags[ok], sups[ok])
        n_fit = float(np.exp(intercept))
    else:
        mu_hat, n_fit = float("nan"), 0.0

    best, best_pair = -1.0, None
    for (i, j), d in defects.items():
        q = d / (times[j] - times[i]) ** family.mu
        if q > best:
            best, best_pair = q, (float(times[i]), float(times[j]))
    return TemporalHolderScan(mu_hat, float(best), n_fit, bool(ok.sum() >= 2), lags, sups, best_pair)


def fractional_difference_constant(family: OperatorFamily, theta1: float, theta2: float, times) -> float:
    """``sup |[A(t)^theta1 - A(s)^theta1] A(s)^{-theta2}| / (t - s)^mu`` over sampled pairs."""
    if not 0 < theta1 < theta2 <= 1:
        raise ParameterError(f"need 0 < theta1 < theta2 <= 1, got {theta1}, {theta2}")
    times = _check_times(times, family.T)
    if family.autonomous:
        return 0.0
    p1 = [family.power(t, theta1) for t in times]
    p2 = [family.power(t, -theta2) for t in times]
    best = 0.0
    for j in range(1, len(times)):
        for i in range(j):
            d = family.op_norm((p1[j] - p1[i]) @ p2[i]) / (times[j] - times[i]) ** family.mu
            best = max(best, d)
    return float(best)
