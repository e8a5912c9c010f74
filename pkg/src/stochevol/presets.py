"""Closed vocabulary of coefficient forms and the built-in problems.

Time forms (``g(t)``)::

    {form: constant, value: c}
    {form: affine, c0: .., c1: ..}          c0 + c1 t
    {form: power, c0: .., c1: .., p: ..}    c0 + c1 t^p
    {form: cosine, c0: .., c1: .., omega: ..}  c0 + c1 cos(omega t)

Space forms (``phi(x)``)::

    {form: sine, mode: k, amplitude: A}     A sin(k pi x)
    {form: constant, value: c}
    {form: zero}

Diffusion and reaction coefficients are a time form, or
``{time: <time form>, space: <space form>}`` for a product ``g(t) phi(x)``.
"""
from __future__ import annotations

import copy
import json
from typing import Any

import numpy as np

from .errors import CoefficientError, ConfigError, HypothesisError, ParameterError
from .operators import CoefficientField, Grid, OperatorFamily
from .solver import ProblemSpec
from .stochastic import NoiseMap

TIME_FORMS = {
    "constant": ("value",),
    "affine": ("c0", "c1"),
    "power": ("c0", "c1", "p"),
    "cosine": ("c0", "c1", "omega"),
}
SPACE_FORMS = {"sine": ("mode", "amplitude"), "constant": ("value",), "zero": ()}
_SPACE_DEFAULTS = {"amplitude": 1.0, "mode": 1}

SECTION4 = {
    "T": 1.0,
    "n": 64,
    "beta": 1.0,
    "sigma": 0.3,
    "delta": 0.7,
    "delta1": 0.9,
    "a": {"form": "affine", "c0": 1.0, "c1": 0.5},
    "b": {"form": "affine", "c0": 1.0, "c1": 0.5},
    "f": {"form": "power", "c0": 0.0, "c1": 1.0, "p": "beta-1"},
    "g": {"form": "power", "c0": 1.0, "c1": 1.0, "p": "sigma"},
    "phi1": {"form": "sine", "mode": 1, "amplitude": 1.0},
    "phi2": {"form": "sine", "mode": 1, "amplitude": 1.0},
    "xi": {"form": "zero"},
}

# beta < delta regime; t^(beta-1) has a non-vanishing weighted modulus, so F is constant here
SECTION4_LOW_BETA = dict(SECTION4, beta=0.5, f={"form": "constant", "value": 1.0})

PRESETS = {"section4": SECTION4, "section4-low-beta": SECTION4_LOW_BETA}
PROBLEM_KEYS = frozenset(SECTION4)


def _check_keys(spec: dict, allowed, what: str):
    extra = set(spec) - set(allowed) - {"form"}
    if extra:
        raise ConfigError(f"unknown keys in {what}: {sorted(extra)}")


def _resolve(value, params):
    if isinstance(value, str):
        expr = {"beta-1": params.get("beta", 1.0) - 1, "sigma": params.get("sigma"), "beta": params.get("beta")}
        if value not in expr or expr[value] is None:
            raise ConfigError(f"unknown symbolic parameter {value!r}")
        return float(expr[value])
    return float(value)


def time_function(spec: dict, params: dict | None = None):
    """Vectorized ``t -> g(t)`` and its Hölder exponent in time."""
    params = params or {}
    form = spec.get("form")
    if form not in TIME_FORMS:
        raise ConfigError(f"unknown time form {form!r}; choose from {sorted(TIME_FORMS)}")
    _check_keys(spec, TIME_FORMS[form], f"time form {form!r}")
    try:
        v = {k: _resolve(spec[k], params) for k in TIME_FORMS[form]}
    except KeyError as exc:
        raise ConfigError(f"time form {form!r} is missing {exc.args[0]!r}") from None
    if form == "constant":
        return (lambda t: v["value"] + 0.0 * np.asarray(t, float)), 1.0, True
    if form == "affine":
        return (lambda t: v["c0"] + v["c1"] * np.asarray(t, float)), 1.0, v["c1"] == 0
    if form == "cosine":
        return (lambda t: v["c0"] + v["c1"] * np.cos(v["omega"] * np.asarray(t, float))), 1.0, v["c1"] == 0

    def power(t):
        t = np.asarray(t, float)
        with np.errstate(divide="ignore"):
            return v["c0"] + v["c1"] * t ** v["p"]

    p = v["p"]
    if v["c1"] == 0 or p == 0:
        return power, 1.0, True
    return power, (min(p, 1.0) if p > 0 else 0.0), False


def space_function(spec: dict):
    form = spec.get("form")
    if form not in SPACE_FORMS:
        raise ConfigError(f"unknown space form {form!r}; choose from {sorted(SPACE_FORMS)}")
    _check_keys(spec, SPACE_FORMS[form], f"space form {form!r}")
    if form == "zero":
        return lambda x: np.zeros_like(np.asarray(x, float))
    if form == "constant":
        c = float(spec["value"])
        return lambda x: c + np.zeros_like(np.asarray(x, float))
    k = int(spec.get("mode", _SPACE_DEFAULTS["mode"]))
    amp = float(spec.get("amplitude", _SPACE_DEFAULTS["amplitude"]))
    return lambda x: amp * np.sin(k * np.pi * np.asarray(x, float))


def coefficient_function(spec: dict, params: dict):
    """``(x, t) -> c(x, t)`` with its time exponent and autonomy flag."""
    if "time" in spec or "space" in spec:
        _check_keys(spec, ("time", "space"), "coefficient")
        g, mu, const = time_function(spec.get("time", {"form": "constant", "value": 1.0}), params)
        phi = space_function(spec.get("space", {"form": "constant", "value": 1.0}))
        return (lambda x, t: g(t) * phi(x)), mu, const
    g, mu, const = time_function(spec, params)
    return (lambda x, t: g(t) + np.zeros_like(np.asarray(x, float))), mu, const


def merged(preset: str | None, overrides: dict | None = None) -> dict:
    if preset is None:
        base = {}
    elif preset in PRESETS:
        base = copy.deepcopy(PRESETS[preset])
    else:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    base.update(copy.deepcopy(overrides or {}))
    return base


def coefficient_bounds(a_fn, b_fn, grid: Grid, T: float, samples: int = 65):
    """Sampled lower bounds of ``a`` (at cell interfaces) and ``b`` (at nodes) over ``[0, T]``."""
    ts = np.linspace(0.0, T, samples)
    a_min = min(float(np.min(a_fn(grid.midpoints, t))) for t in ts)
    b_min = min(float(np.min(b_fn(grid.points, t))) for t in ts)
    return a_min, b_min


def build_problem(params: dict[str, Any], preset: str = "") -> ProblemSpec:
    """Problem on ``(0, 1)`` with Dirichlet conditions from a parameter dictionary."""
    missing = sorted(PROBLEM_KEYS - set(params))
    if missing:
        raise ConfigError("problem description is incomplete", [f"missing field {m!r}" for m in missing])
    extra = sorted(set(params) - PROBLEM_KEYS)
    if extra:
        raise ConfigError(f"unknown problem keys: {extra}")
    T = float(params["T"])
    grid = Grid(int(params["n"]))
    a_fn, mu_a, const_a = coefficient_function(params["a"], params)
    b_fn, mu_b, const_b = coefficient_function(params["b"], params)
    mu = min(mu_a, mu_b)
    if not 0.5 < mu <= 1:
        raise HypothesisError("(A3)", f"coefficients must be Hölder in t with exponent in (1/2, 1], got {mu}")
    a0, b0 = coefficient_bounds(a_fn, b_fn, grid, T)
    if a0 <= 0:
        raise CoefficientError(f"(A1): diffusion coefficient is not uniformly positive (min {a0:.4g})")
    if b0 < 0:
        raise CoefficientError(f"(A1): reaction coefficient takes negative values (min {b0:.4g})")
    coeffs = CoefficientField(a_fn, b_fn, a0, max(b0, 0.0), description=preset or "custom")
    family = OperatorFamily.from_coefficients(coeffs, grid, T, mu=mu, nu=1.0,
                                              autonomous=const_a and const_b, name=preset or "custom")
    x = grid.points
    f_fn, _, _ = time_function(params["f"], params)
    phi1 = space_function(params["phi1"])(x)
    g_fn, _, _ = time_function(params["g"], params)
    phi2 = space_function(params["phi2"])(x)
    xi = space_function(params["xi"])(x)
    return ProblemSpec(
        family=family,
        forcing=lambda t: float(f_fn(t)) * phi1,
        beta=float(params["beta"]),
        sigma=float(params["sigma"]),
        noise=NoiseMap.separable(lambda t: float(g_fn(t)), phi2, "g(t) phi2(x)"),
        delta=float(params["delta"]),
        delta1=float(params["delta1"]) if params.get("delta1") is not None else None,
        xi=xi,
        preset=preset,
        label=json.dumps(params, sort_keys=True, default=str),
    )


def section4_problem(**overrides) -> ProblemSpec:
    return build_problem(merged("section4", overrides), "section4")


def low_beta_problem(**overrides) -> ProblemSpec:
    return build_problem(merged("section4-low-beta", overrides), "section4-low-beta")


def scalar_ou_problem(a: float = 1.0, g: float = 1.0, T: float = 1.0, beta: float = 1.0,
                      sigma: float = 0.3, delta: float = 0.75, xi: float = 0.0) -> ProblemSpec:
    """``dX + a X dt = g dw`` on the real line."""
    fam = OperatorFamily.scalar(a, T)
    gm = np.array([[g]])
    zero = np.zeros(1)
    return ProblemSpec(fam, lambda t: zero, beta, sigma, NoiseMap(lambda t: gm, 1, f"constant g={g}"),
                       delta, np.array([xi]), delta1=None, preset="scalar-ou", label=f"a={a},g={g}")


def autonomous_grid_problem(n: int = 8, a: float = 1.0, b: float = 1.0, g: float = 1.0, T: float = 1.0,
                            forcing: float = 0.0, xi_mode: int | None = None, noise: bool = True) -> ProblemSpec:
    """Constant-coefficient problem on an ``n``-point grid with noise ``g sin(pi x)``."""
    if a <= 0 or b < 0:
        raise ParameterError("need a > 0 and b >= 0")
    grid = Grid(n)
    coeffs = CoefficientField(lambda x, t: a + 0 * x, lambda x, t: b + 0 * x, a, b, "autonomous")
    A = OperatorFamily.from_coefficients(coeffs, grid, T, autonomous=True).matrix(0.0)
    fam = OperatorFamily.constant(A, T, weight=grid.h, name=f"autonomous n={n}")
    object.__setattr__(fam, "grid", grid)
    x = grid.points
    phi = np.sin(np.pi * x)
    xi = np.zeros(n) if xi_mode is None else np.sin(xi_mode * np.pi * x)
    f_vec = forcing * phi
    noise_map = NoiseMap.separable(lambda t: g, phi, "g sin(pi x)") if noise else NoiseMap.zero(n)
    return ProblemSpec(fam, lambda t: f_vec, 1.0, 0.3, noise_map, 0.75, xi, delta1=0.9,
                       preset="autonomous", label=f"n={n},a={a},b={b},g={g},f={forcing},xi={xi_mode},noise={noise}")
