"""Weighted Hölder norms ``F^{beta,sigma}`` and plain Hölder norms on sampled paths.

Suprema over the continuum are replaced by suprema over sampled pairs, so
every quantity here is monotone under grid restriction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, OrderingError, ParameterError, ShapeError
from .operators import OperatorFamily

MEMBERSHIP_MIN_SAMPLES = 8
CAUCHY_SAMPLES = 8
TAIL_RATIO = 0.1


@dataclass(frozen=True, eq=False)
class SampledPath:
    """Values ``f(t_k)`` on a sorted time grid.

    ``norm_kind`` is ``"l2"`` or ``"dual"``; the dual norm needs ``family``.
    """

    times: np.ndarray
    values: np.ndarray
    norm_kind: str = "l2"
    family: OperatorFamily | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if times.ndim != 1 or values.shape[0] != times.size:
            raise ShapeError(f"{times.size} times but values of shape {values.shape}")
        if np.any(np.diff(times) <= 0):
            raise OrderingError("sample times must be strictly increasing")
        if times.size and times[0] < 0:
            raise ParameterError("sample times must be non-negative")
        if self.norm_kind not in ("l2", "dual"):
            raise ParameterError(f"unknown norm kind {self.norm_kind!r}")
        if self.norm_kind == "dual" and self.family is None:
            raise ParameterError("dual norm requires an operator family")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.times.size

    def euclidean_values(self) -> np.ndarray:
        """Values mapped so that the chosen norm becomes the Euclidean one."""
        if self.norm_kind == "l2":
            return self.values
        return self.values @ self.family._to_l2.T

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.euclidean_values(), axis=1)

    def restrict(self, mask) -> "SampledPath":
        return SampledPath(self.times[mask], self.values[mask], self.norm_kind, self.family)

    @classmethod
    def from_function(cls, fn, times, **kw) -> "SampledPath":
        times = np.asarray(times, dtype=float)
        return cls(times, np.array([np.atleast_1d(fn(t)) for t in times], dtype=float), **kw)


@dataclass(frozen=True)
class WeightedHolderParams:
    beta: float
    sigma: float
    mu: float | None = None
    nu: float | None = None

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise ParameterError(f"beta must lie in (0, 1], got {self.beta}")
        if not 0 < self.sigma < self.beta:
            raise ParameterError(f"sigma must lie in (0, beta), got {self.sigma}")
        if self.mu is not None and self.nu is not None and not self.sigma < self.mu + self.nu - 1:
            raise ParameterError(f"sigma must be < mu + nu - 1 = {self.mu + self.nu - 1}")


@dataclass
class WeightedHolderReport:
    norm: float
    sup_term: float
    holder_term: float
    modulus_times: np.ndarray
    modulus: np.ndarray
    passes: tuple[bool, bool, bool] = (False, False, False)
    caveat: str = field(default=(
        "sampled membership cannot tell continuity on (0,T] from [0,T]; "
        "one-sided limits at 0 are not resolved"))


def _pair_quotients(times, vals, sigma, weight_exp, lo=None, hi=None):
    """Row ``k``: ``s^w |f(t_k) - f(s)| / (t_k - s)^sigma`` for sampled ``s < t_k``.

    Returns the per-``t`` supremum (0 where no admissible ``s`` exists).
    """
    m = times.size
    out = np.zeros(m)
    for k in range(1, m):
        s = times[:k]
        keep = np.ones(k, dtype=bool)
        if weight_exp > 0:
            keep &= s > 0
        if lo is not None:
            keep &= s >= lo
        if not keep.any():
            continue
        diff = np.linalg.norm(vals[k] - vals[:k][keep], axis=1)
        w = s[keep] ** weight_exp if weight_exp else 1.0
        q = w * diff / (times[k] - s[keep]) ** sigma
        out[k] = np.max(q)
    return out


def _sup_term(path: SampledPath, beta: float) -> float:
    t = path.times
    n = path.norms()
    if beta < 1:
        keep = t > 0
        return float(np.max(t[keep] ** (1 - beta) * n[keep])) if keep.any() else 0.0
    return float(np.max(n))


def weighted_modulus_curve(path: SampledPath, params: WeightedHolderParams) -> np.ndarray:
    vals = path.euclidean_values()
    return _pair_quotients(path.times, vals, params.sigma, 1 - params.beta + params.sigma)


def weighted_holder_norm(path: SampledPath, params: WeightedHolderParams) -> WeightedHolderReport:
    """``sup t^{1-beta}|f(t)| + sup s^{1-beta+sigma}|f(t)-f(s)|/(t-s)^sigma``."""
    if len(path) < 2:
        raise InsufficientDataError("weighted Hölder norm needs at least 2 samples")
    sup_term = _sup_term(path, params.beta)
    modulus = weighted_modulus_curve(path, params)
    holder_term = float(modulus.max())
    report = WeightedHolderReport(sup_term + holder_term, sup_term, holder_term,
                                  path.times.copy(), modulus)
    if len(path) >= MEMBERSHIP_MIN_SAMPLES:
        report.passes = _membership(path, params, modulus)
    return report


def weighted_modulus(path: SampledPath, params: WeightedHolderParams, t: float) -> float:
    """``w_f(t)`` at a sampled time ``t``."""
    if len(path) < 2 or t < path.times[0]:
        raise InsufficientDataError(f"no samples at or below t = {t}")
    k = int(np.searchsorted(path.times, t, side="right")) - 1
    if not np.isclose(path.times[k], t, rtol=1e-12, atol=1e-15):
        raise ParameterError(f"t = {t} is not a sample time")
    sub = path.restrict(slice(0, k + 1))
    return float(weighted_modulus_curve(sub, params)[-1])


def _dyadic_indices(times, count):
    """Indices of the samples closest to ``t_first * 2^j``, walking away from 0."""
    t = times[times > 0]
    offset = times.size - t.size
    idx = []
    target = t[0]
    while len(idx) < count and target <= t[-1] * (1 + 1e-12):
        k = int(np.argmin(np.abs(t - target)))
        if not idx or k != idx[-1]:
            idx.append(k)
        target *= 2
    return [offset + k for k in idx]


def _membership(path, params, modulus) -> tuple[bool, bool, bool]:
    beta, sigma = params.beta, params.sigma
    vals = path.euclidean_values()
    times = path.times

    # (i) Cauchy tail of t^{1-beta} f(t) over the dyadic samples nearest 0
    idx = _dyadic_indices(times, CAUCHY_SAMPLES)
    g = np.array([times[k] ** (1 - beta) * vals[k] for k in idx])
    scale = max(float(np.max(np.linalg.norm(g, axis=1))), 1e-300)
    first_step = float(np.linalg.norm(g[0] - g[1])) if len(g) > 1 else 0.0
    ok_limit = bool(np.all(np.isfinite(g)) and first_step <= TAIL_RATIO * scale)

    # (ii) weighted Hölder quotient stays put when the grid is halved
    fine = float(modulus.max())
    coarse_path = path.restrict(slice(0, None, 2))
    coarse = float(weighted_modulus_curve(coarse_path, params).max())
    if not np.isfinite(fine):
        ok_holder = False
    elif coarse == 0:
        ok_holder = fine == 0
    else:
        ok_holder = fine / coarse < 0.5 * (1 + 2**sigma)

    # (iii) w_f small at the first time that has a full set of earlier samples
    peak = float(modulus.max())
    early = modulus[min(MEMBERSHIP_MIN_SAMPLES, modulus.size - 1)]
    ok_tail = peak == 0 or early < TAIL_RATIO * peak
    return ok_limit, ok_holder, bool(ok_tail)


def check_weighted_membership(path: SampledPath, params: WeightedHolderParams) -> tuple[bool, bool, bool]:
    """Sampled tests of properties (i) limit, (ii) weighted Hölder, (iii) vanishing modulus."""
    if len(path) < MEMBERSHIP_MIN_SAMPLES:
        raise InsufficientDataError(
            f"membership needs at least {MEMBERSHIP_MIN_SAMPLES} samples, got {len(path)}")
    return _membership(path, params, weighted_modulus_curve(path, params))


def holder_norm(path: SampledPath, gamma: float, interval: tuple[float, float] | None = None) -> float:
    """``sup |f| + sup |f(t) - f(s)| / (t - s)^gamma`` over samples in ``interval``."""
    if not 0 < gamma <= 1:
        raise ParameterError(f"gamma must lie in (0, 1], got {gamma}")
    lo, hi = interval if interval is not None else (path.times[0], path.times[-1])
    if not hi > lo:
        raise ParameterError(f"empty interval [{lo}, {hi}]")
    mask = (path.times >= lo - 1e-12) & (path.times <= hi + 1e-12)
    sub = path.restrict(mask)
    if len(sub) < 2:
        raise InsufficientDataError("interval holds fewer than 2 samples")
    return float(sub.norms().max() + holder_seminorm(sub, gamma))


def holder_seminorm(path: SampledPath, gamma: float) -> float:
    vals = path.euclidean_values()
    return float(_pair_quotients(path.times, vals, gamma, 0.0).max())
