import numpy as np
import pytest
import yaml

from stochevol.config import check_hypotheses, load_config, validate, with_overrides
from stochevol.errors import ConfigError, HypothesisError
from stochevol.presets import (
    SECTION4,
    build_problem,
    merged,
    section4_problem,
    space_function,
    time_function,
)


def _write(tmp_path, obj, name="run.yaml"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else yaml.safe_dump(obj))
    return p


def test_empty_file_lists_required_fields(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config(_write(tmp_path, ""))
    text = str(info.value)
    assert "kind" in text and "preset" in text
    assert len(info.value.problems) == 2


def test_parse_error(tmp_path):
    with pytest.raises(ConfigError, match="parse error"):
        load_config(_write(tmp_path, "kind: [\n"))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")


def test_preset_loads_documented_defaults(tmp_path):
    cfg = load_config(_write(tmp_path, {"kind": "solve", "preset": "section4"}))
    params = cfg.problem_params()
    assert params == SECTION4
    prob = build_problem(params, "section4")
    fam = prob.family
    x = fam.grid.points
    assert fam.dim == 64 and prob.T == 1.0
    assert (prob.beta, prob.sigma, prob.delta, prob.delta1) == (1.0, 0.3, 0.7, 0.9)
    # a = b = 1 + t/2: A(t) = (1 + t/2) A(0)
    np.testing.assert_allclose(fam.matrix(1.0), 1.5 * fam.matrix(0.0), rtol=1e-14)
    np.testing.assert_allclose(prob.forcing(0.3), np.sin(np.pi * x))  # t^{beta-1} = 1
    np.testing.assert_allclose(prob.noise(0.5)[:, 0], (1 + 0.5**0.3) * np.sin(np.pi * x))
    np.testing.assert_array_equal(prob.xi, 0)


def test_sigma_not_below_beta_names_f1(tmp_path):
    p = _write(tmp_path, {"kind": "solve", "preset": "section4", "problem": {"beta": 0.5, "sigma": 0.6}})
    with pytest.raises(ConfigError) as info:
        load_config(p)
    assert any(s.startswith("(F1)") for s in info.value.problems)


@pytest.mark.parametrize("override, cond", [
    ({"delta": 0.4}, "(G1)"),
    ({"delta1": 0.6}, "(G2)"),
    ({"a": {"form": "affine", "c0": -1.0, "c1": 0.5}}, "(A1)"),
    ({"b": {"form": "constant", "value": -0.1}}, "(A1)"),
    ({"a": {"form": "power", "c0": 1.0, "c1": 1.0, "p": 0.4}}, "(A3)"),
    ({"beta": 1.2}, "(F1)"),
])
def test_violations_are_named(override, cond):
    problems = check_hypotheses(merged("section4", override))
    assert any(p.startswith(cond) for p in problems), problems


def test_all_violations_reported_together():
    problems = check_hypotheses(merged("section4", {"delta": 0.4, "sigma": 2.0}))
    assert {p.split(":")[0] for p in problems} >= {"(G1)", "(F1)"}


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError) as info:
        validate({"kind": "solve", "preset": "section4", "extra": 1, "grid": {"stepz": 2},
                  "problem": {"gamma": 1}})
    assert set(info.value.problems) == {"unknown key 'extra'", "unknown key grid.stepz", "unknown key problem.gamma"}


def test_unknown_form_and_form_keys():
    with pytest.raises(ConfigError):
        validate({"kind": "solve", "preset": "section4", "problem": {"a": {"form": "exp", "c0": 1}}})
    with pytest.raises(ConfigError):
        validate({"kind": "solve", "preset": "section4", "problem": {"g": {"form": "constant", "value": 1, "x": 2}}})


def test_bad_kind_and_numbers():
    with pytest.raises(ConfigError) as info:
        validate({"kind": "fly", "preset": "section4", "grid": {"steps": 0},
                  "ensemble": {"paths": -1, "seed": "x"}, "scheme": "rk4"})
    assert len(info.value.problems) == 5


def test_explicit_problem_without_preset():
    cfg = validate({"kind": "ensemble", "problem": dict(SECTION4, n=8)})
    assert cfg.preset is None
    with pytest.raises(ConfigError, match="missing problem field"):
        validate({"kind": "ensemble", "problem": {"T": 1.0}})


def test_overrides_revalidate():
    cfg = validate({"kind": "solve", "preset": "section4"})
    new = with_overrides(cfg, seed=9, paths=5, threads=2, kind="ensemble", output="x")
    assert (new.ensemble.seed, new.ensemble.paths, new.ensemble.threads, new.kind, new.output) == (9, 5, 2, "ensemble", "x")
    with pytest.raises(ConfigError):
        with_overrides(cfg, paths=0)


def test_substeps_default_to_step_size():
    cfg = validate({"kind": "solve", "preset": "section4", "problem": {"T": 2.0}, "grid": {"steps": 512}})
    assert cfg.substeps() == 256


def test_time_forms():
    f, mu, const = time_function({"form": "cosine", "c0": 1, "c1": 2, "omega": np.pi})
    assert f(1.0) == pytest.approx(-1.0) and mu == 1.0 and not const
    f, mu, const = time_function({"form": "power", "c0": 1, "c1": 1, "p": 0.7})
    assert f(0.0) == 1.0 and mu == 0.7
    f, _, const = time_function({"form": "power", "c0": 0, "c1": 1, "p": "beta-1"}, {"beta": 1.0})
    assert f(0.0) == 1.0 and const
    with pytest.raises(ConfigError):
        time_function({"form": "affine", "c0": 1})


def test_space_forms():
    x = np.linspace(0, 1, 5)
    np.testing.assert_allclose(space_function({"form": "sine", "mode": 2, "amplitude": 3})(x), 3 * np.sin(2 * np.pi * x))
    np.testing.assert_array_equal(space_function({"form": "zero"})(x), 0)


def test_product_coefficient():
    prob = section4_problem(n=8, b={"time": {"form": "affine", "c0": 1, "c1": 1},
                                    "space": {"form": "constant", "value": 2.0}})
    assert not prob.family.autonomous
    with pytest.raises(HypothesisError):
        section4_problem(n=8, a={"form": "power", "c0": 1.0, "c1": 1.0, "p": 0.3})
