"""YAML run descriptions.

Schema (every section except ``kind`` and one of ``preset``/``problem`` is optional)::

    kind: solve              # solve | ensemble | constants-scan | regularity | acceptance
    preset: section4         # section4 | section4-low-beta; omitted means problem is complete
    problem:                 # overrides of preset fields
      T: 1.0
      beta: 1.0
      sigma: 0.3
      delta: 0.7
      delta1: 0.9
      a: {form: affine, c0: 1.0, c1: 0.5}
      b: {form: affine, c0: 1.0, c1: 0.5}
      f: {form: power, c0: 0.0, c1: 1.0, p: beta-1}
      g: {form: power, c0: 1.0, c1: 1.0, p: sigma}
      phi1: {form: sine, mode: 1}
      phi2: {form: sine, mode: 1}
      xi: {form: zero}
    grid: {n: 64, steps: 1024, substeps_per_unit: 1024}
    scheme: frozen-exponential   # or implicit-euler
    ensemble: {paths: 200, seed: 0, chunk: 256, threads: 1}
    regularity: {p: 2.0, t_min_fraction: 0.1, lo_steps: 4, hi_fraction: 0.125}
    acceptance: {criteria: [1, 2, 3]}   # default: all
    output: runs/example

Coefficient forms are documented in :mod:`stochevol.presets`.
"""
from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import CoefficientError, ConfigError, HypothesisError, StochevolError
from .evolution import SCHEME_KINDS
from .presets import PRESETS, PROBLEM_KEYS, SECTION4, build_problem, coefficient_bounds, coefficient_function, merged
from .operators import Grid

KINDS = ("solve", "ensemble", "constants-scan", "regularity", "acceptance")


@dataclass
class GridConfig:
    n: int | None = None
    steps: int = 1024
    substeps_per_unit: int | None = None


@dataclass
class EnsembleConfig:
    paths: int = 200
    seed: int = 0
    chunk: int = 256
    threads: int = 1


@dataclass
class RegularityConfig:
    p: float = 2.0
    t_min_fraction: float = 0.1
    lo_steps: int = 4
    hi_fraction: float = 0.125


@dataclass
class AcceptanceConfig:
    criteria: list[int] | None = None


@dataclass
class RunConfig:
    kind: str
    preset: str | None = None
    problem: dict = field(default_factory=dict)
    grid: GridConfig = field(default_factory=GridConfig)
    scheme: str = SCHEME_KINDS[0]
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    regularity: RegularityConfig = field(default_factory=RegularityConfig)
    acceptance: AcceptanceConfig = field(default_factory=AcceptanceConfig)
    output: str = "runs/out"

    def problem_params(self) -> dict:
        params = merged(self.preset, self.problem)
        if self.grid.n is not None:
            params["n"] = self.grid.n
        return params

    def substeps(self) -> int:
        if self.grid.substeps_per_unit is not None:
            return self.grid.substeps_per_unit
        return max(1, int(round(self.grid.steps / float(self.problem_params()["T"]))))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {"grid": GridConfig, "ensemble": EnsembleConfig, "regularity": RegularityConfig,
             "acceptance": AcceptanceConfig}
_TOP = {f.name for f in dataclasses.fields(RunConfig)}


def _section(name, cls, raw, problems):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        problems.append(f"section {name!r} must be a mapping")
        return cls()
    known = {f.name for f in dataclasses.fields(cls)}
    for k in sorted(set(raw) - known):
        problems.append(f"unknown key {name}.{k}")
    return cls(**{k: v for k, v in raw.items() if k in known})


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _check_numbers(cfg: RunConfig, problems: list[str]):
    g, e, r = cfg.grid, cfg.ensemble, cfg.regularity
    if g.n is not None and (not _is_int(g.n) or g.n < 2):
        problems.append(f"grid.n must be an integer >= 2, got {g.n!r}")
    if not _is_int(g.steps) or g.steps < 1:
        problems.append(f"grid.steps must be a positive integer, got {g.steps!r}")
    if g.substeps_per_unit is not None and (not _is_int(g.substeps_per_unit) or g.substeps_per_unit < 1):
        problems.append(f"grid.substeps_per_unit must be a positive integer, got {g.substeps_per_unit!r}")
    for name in ("paths", "chunk", "threads"):
        v = getattr(e, name)
        if not _is_int(v) or v < 1:
            problems.append(f"ensemble.{name} must be a positive integer, got {v!r}")
    if not _is_int(e.seed) or e.seed < 0:
        problems.append(f"ensemble.seed must be a non-negative integer, got {e.seed!r}")
    if not isinstance(r.p, (int, float)) or not 1 <= r.p <= 8:
        problems.append(f"regularity.p must lie in [1, 8], got {r.p!r}")
    if not isinstance(r.t_min_fraction, (int, float)) or not 0 <= r.t_min_fraction < 1:
        problems.append(f"regularity.t_min_fraction must lie in [0, 1), got {r.t_min_fraction!r}")
    if not _is_int(r.lo_steps) or r.lo_steps < 1:
        problems.append(f"regularity.lo_steps must be a positive integer, got {r.lo_steps!r}")
    if not isinstance(r.hi_fraction, (int, float)) or not 0 < r.hi_fraction < 1:
        problems.append(f"regularity.hi_fraction must lie in (0, 1), got {r.hi_fraction!r}")
    crit = cfg.acceptance.criteria
    if crit is not None and (not isinstance(crit, list) or any(not _is_int(c) or not 1 <= c <= 14 for c in crit)):
        problems.append(f"acceptance.criteria must be a list of integers in 1..14, got {crit!r}")


def check_hypotheses(params: dict) -> list[str]:
    """Every violated structural condition, each prefixed by its name."""
    problems = []
    num = {}
    for k in ("T", "beta", "sigma", "delta", "delta1", "n"):
        v = params.get(k)
        if k == "delta1" and v is None:
            continue
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            problems.append(f"problem.{k} must be a number, got {v!r}")
        else:
            num[k] = float(v)
    if "T" in num and num["T"] <= 0:
        problems.append(f"problem.T must be positive, got {num['T']}")
    if "n" in num and (num["n"] != int(num["n"]) or num["n"] < 2):
        problems.append(f"problem.n must be an integer >= 2, got {params['n']!r}")
    mu = None
    try:
        a_fn, mu_a, _ = coefficient_function(params["a"], params)
        b_fn, mu_b, _ = coefficient_function(params["b"], params)
        mu = min(mu_a, mu_b)
        if not 0.5 < mu <= 1:
            problems.append(f"(A3): coefficients must be Hölder in t with exponent in (1/2, 1], got {mu:g}")
        if "T" in num and num["T"] > 0 and "n" in num and num["n"] >= 2 and num["n"] == int(num["n"]):
            a0, b0 = coefficient_bounds(a_fn, b_fn, Grid(int(num["n"])), num["T"])
            if a0 <= 0:
                problems.append(f"(A1): diffusion coefficient a must be uniformly positive, min {a0:.4g}")
            if b0 < 0:
                problems.append(f"(A1): reaction coefficient b must be non-negative, min {b0:.4g}")
    except (ConfigError, TypeError, ValueError) as exc:
        problems.append(f"coefficients: {exc}")
    beta, sigma, delta, delta1 = (num.get(k) for k in ("beta", "sigma", "delta", "delta1"))
    if beta is not None and not 0 < beta <= 1:
        problems.append(f"(F1): beta must lie in (0, 1], got {beta:g}")
    if beta is not None and sigma is not None:
        cap = min(beta, mu if mu is not None else 1.0)  # nu = 1 for the elliptic family
        if not 0 < sigma < cap:
            problems.append(f"(F1): sigma must lie in (0, min(beta, mu + nu - 1)) = (0, {cap:g}), got {sigma:g}")
    if delta is not None and not delta > 0.5:
        problems.append(f"(G1): delta must exceed 1/2, got {delta:g}")
    if delta is not None and delta1 is not None and not delta < delta1 <= 1:
        problems.append(f"(G2): need delta < delta1 <= 1, got delta={delta:g}, delta1={delta1:g}")
    return problems


def validate(raw: Any, source: str = "<config>") -> RunConfig:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    problems = []
    if "kind" not in raw:
        problems.append("missing required field 'kind'")
    if "preset" not in raw and "problem" not in raw:
        problems.append("missing required field 'preset' (or a complete 'problem' section)")
    for k in sorted(set(raw) - _TOP):
        problems.append(f"unknown key {k!r}")
    if "kind" not in raw or ("preset" not in raw and "problem" not in raw):
        raise ConfigError(f"{source}: invalid configuration", problems)

    kind = raw["kind"]
    if kind not in KINDS:
        problems.append(f"kind must be one of {list(KINDS)}, got {kind!r}")
    preset = raw.get("preset")
    if preset is not None and preset not in PRESETS:
        problems.append(f"preset must be one of {sorted(PRESETS)}, got {preset!r}")
    problem = raw.get("problem") or {}
    if not isinstance(problem, dict):
        problems.append("section 'problem' must be a mapping")
        problem = {}
    for k in sorted(set(problem) - PROBLEM_KEYS):
        problems.append(f"unknown key problem.{k}")
    scheme = raw.get("scheme", SCHEME_KINDS[0])
    if scheme not in SCHEME_KINDS:
        problems.append(f"scheme must be one of {list(SCHEME_KINDS)}, got {scheme!r}")
    sections = {name: _section(name, cls, raw.get(name), problems) for name, cls in _SECTIONS.items()}
    cfg = RunConfig(kind=kind, preset=preset, problem=copy.deepcopy(problem), scheme=scheme,
                    output=str(raw.get("output", "runs/out")), **sections)
    _check_numbers(cfg, problems)
    if preset in PRESETS or preset is None:
        params = cfg.problem_params()
        missing = sorted(PROBLEM_KEYS - set(params))
        if missing:
            problems.extend(f"missing problem field {m!r}" for m in missing)
        else:
            problems.extend(check_hypotheses({k: v for k, v in params.items() if k in PROBLEM_KEYS}))
    if problems:
        raise ConfigError(f"{source}: invalid configuration", problems)
    try:
        build_problem(cfg.problem_params(), cfg.preset or "custom")
    except (HypothesisError, CoefficientError, ConfigError) as exc:
        raise ConfigError(f"{source}: invalid configuration", [str(exc)]) from exc
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from exc
    return validate(raw, str(path))


def with_overrides(cfg: RunConfig, seed=None, paths=None, threads=None, kind=None, output=None) -> RunConfig:
    """CLI overrides, re-validated."""
    raw = cfg.to_dict()
    if seed is not None:
        raw["ensemble"]["seed"] = seed
    if paths is not None:
        raw["ensemble"]["paths"] = paths
    if threads is not None:
        raw["ensemble"]["threads"] = threads
    if kind is not None:
        raw["kind"] = kind
    if output is not None:
        raw["output"] = str(output)
    return validate(raw, "<overrides>")


__all__ = ["RunConfig", "load_config", "validate", "check_hypotheses", "with_overrides", "KINDS", "SECTION4",
           "StochevolError"]
