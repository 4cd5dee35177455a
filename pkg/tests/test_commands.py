import json
import logging
import math
import shlex
import sys

import docopt
import pytest
import yaml

import asp_toolbox.commands
import asp_toolbox.functionals
from asp_toolbox.bodies import TrigSupport2D
from asp_toolbox.model import EvaluationError


def set_command(command, more_options=""):
    command = f"asp-toolbox {more_options} {command}"
    sys.argv = shlex.split(command)


def run_exit_code():
    with pytest.raises(SystemExit) as ex:
        asp_toolbox.commands.run()
    return ex.value.code


@pytest.fixture(autouse=True)
def _argv(reset_argv):
    yield


def test_compute_volume_json(capsys):
    # Run command and capture output.
    set_command('compute volume --body="{kind: ellipsoid, diag: [2, 3]}"', "--format=json")
    asp_toolbox.commands.run()
    captured = capsys.readouterr()

    # Verify output.
    data = json.loads(captured.out)
    assert len(data) == 1
    assert data[0]["functional"] == "volume"
    assert data[0]["value"] == pytest.approx(6 * math.pi, rel=1e-10)
    assert data[0]["abs_error"] >= 0
    assert data[0]["rule"]


def test_compute_lp_affine_yaml(capsys):
    set_command('compute lp_affine --body="{kind: ball}" --p=3', "--format=yaml")
    asp_toolbox.commands.run()
    captured = capsys.readouterr()

    data = yaml.safe_load(captured.out)
    assert data[0]["p"] == 3.0
    assert data[0]["value"] == pytest.approx(2 * math.pi, rel=1e-12)


def test_compute_mixed_minus_n_tabular(capsys):
    set_command('compute mixed_minus_n --body="{kind: ball}" --body="{kind: ball}"')
    asp_toolbox.commands.run()
    captured = capsys.readouterr()

    assert "mixed_minus_n" in captured.out
    assert "functional" in captured.out
    assert "+--" in captured.out


def test_compute_infinite_exponent(capsys):
    set_command('compute lp_affine --body="{kind: ellipsoid, diag: [1, 2]}" --p=inf', "--format=json")
    asp_toolbox.commands.run()
    data = json.loads(capsys.readouterr().out)
    # as_∞ is n times the volume of the polar body, 2 |K°| = 2π / 2 for this ellipse.
    assert data[0]["p"] == math.inf
    assert data[0]["value"] == pytest.approx(math.pi, rel=1e-10)


def test_compute_csv_file(tmp_path, caplog):
    output = tmp_path / "volume.csv"
    set_command('compute volume --body="{kind: ball, radius: 2}"', f"--output={output}")
    with caplog.at_level(logging.INFO):
        asp_toolbox.commands.run()

    lines = output.read_text().splitlines()
    assert lines[0] == "# asp-toolbox functional schema v1"
    assert lines[1] == "functional,dimension,p,i,value,abs_error,rule,bodies"
    assert lines[2].startswith("volume,2,,,12.56637061435917")
    assert "Wrote 1 functional records" in caplog.text


def test_compute_unknown_functional(caplog):
    set_command('compute curvature --body="{kind: ball}"')
    assert run_exit_code() == 2
    assert "Unknown functional 'curvature'" in caplog.text


def test_compute_invalid_body(caplog):
    set_command('compute volume --body="{kind: ball, radius: -1}"')
    assert run_exit_code() == 2
    assert "Ball radius must be positive" in caplog.text


def test_compute_unsupported_kind(caplog):
    set_command('compute surface_area --body="{kind: square}"')
    assert run_exit_code() == 2
    assert "not defined for polygon bodies" in caplog.text


def test_usage_error():
    set_command("frobnicate")
    with pytest.raises(docopt.DocoptExit) as ex:
        asp_toolbox.commands.run()
    assert ex.value.code == 2


def test_version(capsys):
    set_command("--version")
    with pytest.raises(SystemExit):
        asp_toolbox.commands.run()
    assert "asp-toolbox" in capsys.readouterr().out


def test_config_file_unknown_key(tmp_path, caplog):
    path = tmp_path / "asp.yaml"
    path.write_text("colour: blue\n")
    set_command("verify", f"--config={path}")
    assert run_exit_code() == 2
    assert "Unknown keys in configuration file" in caplog.text


def test_verify_negative_tolerance(caplog):
    set_command("verify", "--tolerance=-1")
    assert run_exit_code() == 2
    assert "Tolerance must be a non-negative number" in caplog.text


def test_verify_rule_size_too_small():
    set_command("verify", "--rule-size=2")
    assert run_exit_code() == 2


@pytest.fixture
def suite_config(tmp_path):
    path = tmp_path / "suite.yaml"
    path.write_text(
        """
suite:
  checks: [ISO-I, HOLDER-DUAL, ITH-ISO-I]
  dimensions: [2]
  corpus: {trig: 1, ellipsoids2: 1}
"""
    )
    return path


def test_verify_json(suite_config, capsys):
    set_command("verify", f"--config={suite_config} --format=json")
    asp_toolbox.commands.run()
    data = json.loads(capsys.readouterr().out)
    assert data
    assert {entry["check_id"] for entry in data} == {"ISO-I", "HOLDER-DUAL", "ITH-ISO-I"}
    assert "fail" not in {entry["verdict"] for entry in data}
    assert list(data[0]) == [
        "check_id",
        "inputs_digest",
        "part",
        "relation",
        "lhs",
        "rhs",
        "margin",
        "tolerance",
        "verdict",
        "equality_flag",
        "anchor",
        "note",
    ]


def test_verify_equality_only(suite_config, capsys):
    set_command("verify --equality-only", f"--config={suite_config} --format=json")
    asp_toolbox.commands.run()
    data = json.loads(capsys.readouterr().out)
    assert data
    assert all(entry["equality_flag"] for entry in data)


def test_verify_sql(suite_config, capsys):
    set_command(
        """verify --sql="
            SELECT check_id, COUNT(*) AS reports
            FROM reports
            GROUP BY check_id
            ORDER BY check_id
        "
        """,
        f"--config={suite_config} --format=yaml",
    )
    asp_toolbox.commands.run()
    data = yaml.safe_load(capsys.readouterr().out)
    assert [entry["check_id"] for entry in data] == ["HOLDER-DUAL", "ISO-I", "ITH-ISO-I"]
    assert all(entry["reports"] > 0 for entry in data)


def test_verify_evaluation_error(tmp_path, monkeypatch, caplog):
    # Polar bodies of trigonometric bodies can not be refit at degree 2.
    monkeypatch.setattr(TrigSupport2D, "refit_degrees", (2,))
    path = tmp_path / "santalo.yaml"
    path.write_text("suite: {checks: [SANTALO-MIXED], dimensions: [2], corpus: {trig: 1}}\n")
    set_command("verify", f"--config={path}")
    assert run_exit_code() == 2
    assert "EvaluationError" in caplog.text
    assert "Polar body refit did not reach relative accuracy" in caplog.text


def test_compute_evaluation_error(monkeypatch, caplog):
    def volume(*args):
        raise EvaluationError("Integrand is not finite at node 3")

    monkeypatch.setattr(asp_toolbox.functionals, "volume", volume)
    set_command('compute volume --body="{kind: ball}"')
    assert run_exit_code() == 2
    assert "Integrand is not finite at node 3" in caplog.text


def test_verify_concurrency_deterministic(suite_config, tmp_path):
    sequential = tmp_path / "sequential.csv"
    parallel = tmp_path / "parallel.csv"
    set_command("verify", f"--config={suite_config} --output={sequential}")
    asp_toolbox.commands.run()
    set_command("verify", f"--config={suite_config} --output={parallel} --concurrency=4")
    asp_toolbox.commands.run()
    assert sequential.read_bytes() == parallel.read_bytes()
    assert sequential.read_text().startswith("# asp-toolbox inequality schema v1\n")


def test_illuminate_sweep_csv(tmp_path):
    output = tmp_path / "sweep.csv"
    set_command("illuminate --study=sweep", f"--output={output}")
    asp_toolbox.commands.run()

    lines = output.read_text().splitlines()
    assert lines[0] == "# asp-toolbox membership schema v1"
    assert lines[1] == "x,y,s,measure,membership"
    assert len(lines) == 2 + 60
    row = next(line for line in lines if line.startswith("5,0,0.20000000000000001,"))
    measure, membership = row.split(",")[3:]
    assert float(measure) == pytest.approx(1 / 6, abs=1e-9)
    assert membership == "inside"


def test_illuminate_trace_deterministic(tmp_path):
    first = tmp_path / "first.csv"
    second = tmp_path / "second.csv"
    for output in [first, second]:
        set_command("illuminate --study=trace", f"--output={output} --seed=5")
        asp_toolbox.commands.run()
    assert first.read_bytes() == second.read_bytes()
    lines = first.read_text().splitlines()
    assert lines[0] == "# asp-toolbox trace schema v1"
    assert lines[1] == "angle,t0,t_s,delta,measure,bounded"
    angle, t0, t_s, *_ = lines[2].split(",")
    assert float(angle) == 0.0
    assert float(t_s) == pytest.approx(1 / math.cos(math.pi / 20), abs=1e-9)


def test_illuminate_convergence_config(tmp_path, capsys):
    path = tmp_path / "study.yaml"
    path.write_text(
        """
study:
  kind: convergence
  body: {kind: ball}
  weight: {kind: constant, c: 1}
  s_list: [0.1, 0.05, 0.025, 0.0125]
  rays: 64
"""
    )
    set_command("illuminate", f"--config={path} --format=json")
    asp_toolbox.commands.run()
    data = json.loads(capsys.readouterr().out)
    assert [entry["s"] for entry in data] == [0.1, 0.05, 0.025, 0.0125, 0.0]
    assert data[-1]["rhs"] == pytest.approx(2 * math.pi, rel=1e-12)
    assert data[-1]["rel_dev"] < 1e-4


def test_illuminate_unbounded(tmp_path, capsys, caplog):
    path = tmp_path / "study.yaml"
    path.write_text("study: {body: {kind: square}, weight: {kind: edges}, s_list: [0.2]}\n")
    set_command("illuminate", f"--config={path} --format=csv")
    assert run_exit_code() == 1
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "# asp-toolbox convergence schema v1"
    assert "0.20000000000000001,inf,inf" in out
    assert "unbounded" in caplog.text


def test_illuminate_unknown_study():
    set_command("illuminate --study=spiral")
    assert run_exit_code() == 2


def test_demo_example_textual(capsys):
    set_command("demo example-3-1", "--format=textual")
    asp_toolbox.commands.run()
    out = capsys.readouterr().out
    assert "Membership" in out
    assert "60" in out
    assert "records." in out
    assert "outside" in out


def test_demo_degenerate_grid(capsys):
    set_command("demo degenerate-kre", "--format=tabular:grid")
    asp_toolbox.commands.run()
    out = capsys.readouterr().out
    assert "within_bound" in out
    assert "+==" in out


def test_demo_nonconvex_disk_json(capsys):
    set_command("demo nonconvex-disk", "--format=json")
    asp_toolbox.commands.run()
    data = json.loads(capsys.readouterr().out)
    items = {entry["item"]: entry for entry in data}
    assert items["certified"]["value"] == 1.0
    assert items["axis boundary point"]["value"] == pytest.approx(1 / math.cos(math.pi / 20), abs=1e-6)


def test_demo_unknown(caplog):
    set_command("demo example-9-9")
    assert run_exit_code() == 2
    assert "Unknown demo" in caplog.text
