"""Scenario grammar, canonical serialization, CLI exit codes and artifacts."""
import json
import math
from pathlib import Path

import pytest

from levypme.cli import main
from levypme.reporting import PropertyCheck, StudyReport
from levypme.scenario import (
    REPORT_VERSION,
    Scenario,
    ScenarioError,
    build_noise,
    build_operator,
    build_plan,
    build_psi,
    load_scenario,
    parse_scenario,
    scenario_hash,
    serialize_scenario,
)

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

_BASE = {
    "mode_cutoff": "4",
    "alpha": "0.5",
    "psi": "soft_monotone",
    "noise": "multiplicative",
    "noise_intensity": "2.0 1.0",
    "noise_scale": "0.08 -0.05",
    "initial": "smooth",
    "lambda_ladder": "0.2 0.1",
    "epsilon_ladder": "0.2 0.1",
    "paths": "2",
    "step_size": "0.125",
    "horizon": "0.5",
    "master_seed": "7",
}


def _text(overrides=None, drop=(), extra_lines=()):
    entries = dict(_BASE)
    if overrides:
        entries.update(overrides)
    for key in drop:
        entries.pop(key)
    lines = [f"{k} = {v}" for k, v in entries.items()]
    lines.extend(extra_lines)
    return "\n".join(lines) + "\n"


def test_parse_minimal_and_defaults():
    sc = parse_scenario(_text())
    assert sc.mode_cutoff == 4
    assert sc.lambda_ladder == (0.2, 0.1)
    assert sc.noise_scale == (0.08, -0.05)
    # defaults
    assert sc.length == 2.0 * math.pi
    assert sc.psi_param is None
    assert sc.transform_lipschitz == 1.0
    assert sc.initial_amplitude == 1.0
    assert sc.initial_seed == 7
    assert sc.inner_tolerance == 1e-10
    assert sc.max_inner_iterations == 600
    assert sc.report_version == REPORT_VERSION


def test_comments_and_blank_lines_ignored():
    sc = parse_scenario("# header\n\n" + _text() + "\n# trailing\n")
    assert sc.paths == 2


@pytest.mark.parametrize("mutation,pattern", [
    ({"alpha": "1.5"}, r"outside \(0, 1\]"),
    ({"alpha": "zero"}, "expected a number"),
    ({"mode_cutoff": "0"}, r"\[1, inf\)"),
    ({"paths": "1"}, r"\[2, inf\)"),
    ({"lambda_ladder": "0.1 0.2"}, "strictly decreasing"),
    ({"lambda_ladder": "1.0 0.5"}, r"outside \(0, 1\)"),
    ({"psi": "cubic"}, "expected one of"),
    ({"step_size": "2.0"}, "must not exceed horizon"),
    ({"report_version": "2"}, "unsupported report version"),
    ({"transform_lipschitz": "1.5"}, r"outside \(0, 1\]"),
])
def test_value_errors(mutation, pattern):
    with pytest.raises(ScenarioError, match=pattern):
        parse_scenario(_text(mutation))


def test_unknown_key_names_line():
    with pytest.raises(ScenarioError, match=r"\[line 14\] unknown key 'bogus'"):
        parse_scenario(_text(extra_lines=["bogus = 3"]))


def test_duplicate_key_names_both_lines():
    with pytest.raises(
        ScenarioError, match=r"\[line 14, key 'alpha'\] duplicate key \(first set on line 2\)"
    ):
        parse_scenario(_text(extra_lines=["alpha = 0.4"]))


def test_missing_value_and_missing_required():
    with pytest.raises(ScenarioError, match=r"key 'alpha'\] missing value"):
        parse_scenario(_text({"alpha": ""}))
    with pytest.raises(ScenarioError, match=r"\[key 'master_seed'\] required key missing"):
        parse_scenario(_text(drop=("master_seed",)))
    with pytest.raises(ScenarioError, match="expected 'key = value'"):
        parse_scenario("mode_cutoff 4\n")


def test_error_carries_location_attributes():
    try:
        parse_scenario(_text({"alpha": "1.5"}))
    except ScenarioError as exc:
        assert exc.line == 2 and exc.key == "alpha"
    else:
        pytest.fail("expected ScenarioError")


def test_psi_param_pairing():
    with pytest.raises(ScenarioError, match="requires psi_param"):
        parse_scenario(_text({"psi": "saturating"}))
    with pytest.raises(ScenarioError, match="takes no psi_param"):
        parse_scenario(_text({"psi": "identity"}, extra_lines=["psi_param = 1.0"]))
    sc = parse_scenario(_text({"psi": "saturating"}, extra_lines=["psi_param = 1.0"]))
    assert build_psi(sc).kind == "saturating"


def test_noise_key_pairing():
    with pytest.raises(ScenarioError, match="not used when noise = zero"):
        parse_scenario(_text({"noise": "zero"}))
    with pytest.raises(ScenarioError, match="requires noise_intensity"):
        parse_scenario(_text(drop=("noise_intensity",)))
    with pytest.raises(ScenarioError, match="one entry per mark"):
        parse_scenario(_text({"noise_scale": "0.08"}))
    with pytest.raises(ScenarioError, match="only used when noise = multiplicative"):
        parse_scenario(
            _text({"noise": "additive"}, extra_lines=["transform_lipschitz = 1.0"])
        )
    with pytest.raises(ScenarioError, match="only used when initial = random"):
        parse_scenario(_text(extra_lines=["initial_seed = 3"]))


def test_builders_respect_kinds():
    zero_sc = parse_scenario(_text({"noise": "zero"}, drop=("noise_intensity", "noise_scale")))
    op = build_operator(zero_sc)
    assert op.mode_count == 9
    model = build_noise(zero_sc, op)
    assert model.h2_closed_form(op) == 0.0

    additive_sc = parse_scenario(_text({"noise": "additive"}))
    add_model = build_noise(additive_sc, build_operator(additive_sc))
    assert add_model.coefficient.state_dependent is False
    assert add_model.mark_count == 2

    random_sc = parse_scenario(
        _text({"initial": "random"}, extra_lines=["initial_seed = 12"])
    )
    plan = build_plan(random_sc)
    assert plan.paths == 2
    plan_bigger = build_plan(random_sc, paths=5, master_seed=1)
    assert plan_bigger.paths == 5 and plan_bigger.master_seed == 1


def test_shipped_scenarios_round_trip():
    files = sorted(SCENARIO_DIR.glob("*.scn"))
    assert len(files) == 4
    for path in files:
        sc = load_scenario(path)
        again = parse_scenario(serialize_scenario(sc))
        assert again == sc, path.name
        assert scenario_hash(again) == scenario_hash(sc)


def test_hash_sensitivity():
    a = parse_scenario(_text())
    b = parse_scenario(_text({"master_seed": "8"}))
    assert scenario_hash(a) == scenario_hash(parse_scenario(_text()))
    assert scenario_hash(a) != scenario_hash(b)


def test_serialize_skips_inapplicable_keys():
    sc = parse_scenario(_text({"noise": "zero"}, drop=("noise_intensity", "noise_scale")))
    text = serialize_scenario(sc)
    assert "noise_intensity" not in text
    assert "transform_lipschitz" not in text
    assert "initial_seed" not in text


# -- CLI ----------------------------------------------------------------------


def _write_scenario(tmp_path, text, name="run.scn"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_cli_simulate_success(tmp_path, capsys):
    scn = _write_scenario(tmp_path, _text())
    out = tmp_path / "out"
    assert main(["simulate", "--scenario", scn, "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "[PASS] solver_converged" in printed
    assert "all checks passed" in printed
    for artifact in (
        "report.json", "scenario.txt", "metadata.json",
        "trajectory.csv", "noise_path.csv", "norm_summary.csv",
    ):
        assert (out / artifact).exists(), artifact
    report = json.loads((out / "report.json").read_text())
    assert report["kind"] == "simulate" and report["passed"] is True
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["scenario_hash"] == scenario_hash(parse_scenario(_text()))
    assert meta["overrides"] == {}


def test_cli_linear_oracle_gates(tmp_path, capsys):
    text = _text(
        {"psi": "identity", "noise": "zero"},
        drop=("noise_intensity", "noise_scale"),
    )
    scn = _write_scenario(tmp_path, text)
    out = tmp_path / "out"
    assert main(["simulate", "--scenario", scn, "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "[PASS] linear_recursion_oracle" in printed
    assert "[PASS] continuum_flow_bound" in printed


def test_cli_rerun_byte_identical(tmp_path):
    scn = _write_scenario(tmp_path, _text())
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--scenario", scn, "--out", str(out1)]) == 0
    assert main(["simulate", "--scenario", scn, "--out", str(out2)]) == 0
    for name in ("report.json", "norm_summary.csv", "trajectory.csv",
                 "noise_path.csv", "scenario.txt"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
    meta1 = json.loads((out1 / "metadata.json").read_text())
    meta2 = json.loads((out2 / "metadata.json").read_text())
    meta1.pop("created"), meta2.pop("created")
    assert meta1 == meta2


def test_cli_seed_override_recorded(tmp_path):
    scn = _write_scenario(tmp_path, _text())
    out = tmp_path / "out"
    assert main(["simulate", "--scenario", scn, "--out", str(out), "--seed", "5"]) == 0
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["overrides"] == {"seed": 5}
    report = json.loads((out / "report.json").read_text())
    assert report["parameters"]["master_seed"] == 5


def test_cli_inequalities_success(tmp_path, capsys):
    scn = _write_scenario(tmp_path, _text())
    out = tmp_path / "out"
    assert main(["inequalities", "--scenario", scn, "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    for name in ("psi_pointwise", "local_monotonicity", "noise_h2_h3"):
        assert f"[PASS] {name}" in printed
    assert (out / "variational_conditions.csv").exists()


def test_cli_usage_errors(tmp_path, capsys):
    missing = str(tmp_path / "nope.scn")
    assert main(["simulate", "--scenario", missing, "--out", str(tmp_path / "o")]) == 2
    assert "not found" in capsys.readouterr().err

    bad = _write_scenario(tmp_path, _text({"alpha": "1.5"}), name="bad.scn")
    assert main(["simulate", "--scenario", bad, "--out", str(tmp_path / "o")]) == 2
    assert "outside (0, 1]" in capsys.readouterr().err

    short = _write_scenario(tmp_path, _text({"lambda_ladder": "0.1"}), name="short.scn")
    assert main(["lambda-study", "--scenario", short, "--out", str(tmp_path / "o")]) == 2
    assert "at least two" in capsys.readouterr().err


def test_cli_numerical_failure(tmp_path, capsys):
    text = _text(
        {"psi": "saturating", "step_size": "0.5"},
        extra_lines=[
            "psi_param = 1.0",
            "inner_tolerance = 1e-14",
            "max_inner_iterations = 1",
        ],
    )
    scn = _write_scenario(tmp_path, text)
    assert main(["simulate", "--scenario", scn, "--out", str(tmp_path / "o")]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_cli_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "levypme" in capsys.readouterr().out


def test_failures_file_written(tmp_path):
    report = StudyReport(kind="demo", checks=[PropertyCheck("broken", False, "nope")])
    report.write(tmp_path)
    failures = json.loads((tmp_path / "failures.json").read_text())
    assert failures["failures"][0]["name"] == "broken"
