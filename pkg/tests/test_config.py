import math

import numpy as np
import pytest

from asp_toolbox.bodies import Ball, Ellipsoid, LinearImage, Polygon2D, RoundedSquare2D, TrigSupport2D
from asp_toolbox.config import (
    STUDY_DEFAULTS,
    RunConfig,
    build_body,
    build_weight,
    study_settings,
)
from asp_toolbox.illumination import (
    Constant,
    GpWeight,
    MixedWeight,
    PiecewiseEdge,
    QuadrantDisk,
    SqrtKappa,
    example_weights,
    quadrant_disk,
)
from asp_toolbox.model import ConfigError, InputError
from asp_toolbox.util import normalize_options


def test_build_ball():
    body = build_body({"kind": "ball", "radius": 2, "dimension": 3})
    assert isinstance(body, Ball)
    assert body.radius == 2.0
    assert body.dimension == 3
    assert build_body({"kind": "ball"}).describe() == Ball(1.0).describe()


def test_build_ellipsoid():
    body = build_body({"kind": "ellipsoid", "diag": [2, 3]})
    assert isinstance(body, Ellipsoid)
    assert body.det == pytest.approx(6.0)
    matrix = build_body({"kind": "ellipsoid", "matrix": [[1, 0.5], [0, 2]]})
    assert np.allclose(matrix.matrix, [[1, 0.5], [0, 2]])
    with pytest.raises(ConfigError):
        build_body({"kind": "ellipsoid"})
    with pytest.raises(ConfigError):
        build_body({"kind": "ellipsoid", "diag": [1, 2], "matrix": [[1, 0], [0, 2]]})
    with pytest.raises(ConfigError):
        build_body({"kind": "ellipsoid", "matrix": [[1, 1], [1, 1]]})


def test_build_planar_kinds():
    trig = build_body({"kind": "trig", "a0": 1.0, "a": [0, 0.1], "centered": False})
    assert isinstance(trig, TrigSupport2D)
    assert trig.degree == 2
    rounded = build_body("{kind: rounded-square, R: 10, eps: 0.1}")
    assert isinstance(rounded, RoundedSquare2D)
    assert rounded.R == 10.0
    polygon = build_body({"kind": "polygon", "vertices": [[0, 0], [2, 0], [0, 2]]})
    assert isinstance(polygon, Polygon2D)
    square = build_body({"kind": "square"})
    assert square.support(np.array([[1.0, 0.0]]))[0] == pytest.approx(1.0)


def test_build_body_wrappers():
    scaled = build_body({"kind": "ball", "radius": 1.5, "scale": 2})
    assert isinstance(scaled, Ball)
    assert scaled.radius == 3.0
    transformed = build_body({"kind": "trig", "a": [0, 0.1], "transform": [[2, 0], [0, 1]]})
    assert isinstance(transformed, LinearImage)
    assert transformed.det == pytest.approx(2.0)


@pytest.mark.parametrize(
    "spec",
    [
        {"kind": "cube"},
        {"radius": 1},
        {"kind": "ball", "colour": "red"},
        {"kind": "ball", "radius": -1},
        {"kind": "ball", "scale": 0},
        {"kind": "rounded-square", "R": 10},
        {"kind": "polygon"},
        "[1, 2]",
    ],
)
def test_build_body_invalid(spec):
    with pytest.raises(ConfigError):
        build_body(spec)


def test_config_error_is_input_error():
    assert issubclass(ConfigError, InputError)


def test_build_weights():
    assert isinstance(build_weight({"kind": "constant"}), Constant)
    assert build_weight({"kind": "constant", "c": 2}).c == 2.0
    edges = build_weight({"kind": "edges"})
    assert isinstance(edges, PiecewiseEdge)
    assert edges.describe() == example_weights().describe()
    explicit = build_weight({"kind": "edges", "weights": [[0, 1, 0.5], [1, 0, 0.25]]})
    assert explicit.values == [0.5, 0.25]
    quadrant = build_weight({"kind": "quadrant"})
    assert isinstance(quadrant, QuadrantDisk)
    assert quadrant.values == quadrant_disk().values
    assert build_weight({"kind": "quadrant", "values": [1, 2, 3, 4]}).values == [1.0, 2.0, 3.0, 4.0]
    assert build_weight("{kind: gp, p: 2}").p == 2.0
    assert isinstance(build_weight({"kind": "gp", "p": 0}), GpWeight)
    assert isinstance(build_weight({"kind": "sqrt-kappa"}), SqrtKappa)
    mixed = build_weight({"kind": "mixed", "p": 1, "bodies": [{"kind": "ball"}, {"kind": "ellipsoid", "diag": [1, 2]}]})
    assert isinstance(mixed, MixedWeight)
    assert len(mixed.bodies) == 2


@pytest.mark.parametrize(
    "spec",
    [
        {"kind": "uniform"},
        {"kind": "constant", "c": 0},
        {"kind": "constant", "value": 1},
        {"kind": "quadrant", "values": [1, 2, 3]},
        {"kind": "gp"},
        {"kind": "gp", "p": "inf"},
        {"kind": "mixed", "p": 1, "bodies": [{"kind": "ball"}]},
        {"kind": "edges", "weights": [[0, 1, -1]]},
    ],
)
def test_build_weight_invalid(spec):
    with pytest.raises(ConfigError):
        build_weight(spec)


def test_study_settings():
    settings = study_settings(None)
    assert settings["kind"] == "convergence"
    assert settings["body"] == {"kind": "ball"}
    assert list(settings)[1:] == list(STUDY_DEFAULTS["convergence"])

    sweep = study_settings("sweep", {"s_values": [0.3]})
    assert sweep["s_values"] == [0.3]
    assert len(sweep["points"]) == 12

    trace = study_settings(None, {"kind": "trace", "s": 0.01})
    assert trace["kind"] == "trace"
    assert trace["s"] == 0.01

    # The kind given on the command line wins.
    assert study_settings("sweep", {"kind": "trace"})["kind"] == "sweep"


def test_study_settings_invalid():
    with pytest.raises(ConfigError):
        study_settings("spiral")
    with pytest.raises(ConfigError):
        study_settings("sweep", {"s_list": [0.1]})


def test_run_config_defaults():
    config = RunConfig()
    assert config.seed == 7
    assert config.tolerance == 1e-8
    assert config.concurrency == 0
    assert config.rule_size is None
    assert config.output_format == "tabular:psql"
    assert config.suite_settings() == {"seed": 7}


def test_run_config_output_format():
    assert RunConfig(output="report.csv").output_format == "csv"
    assert RunConfig(output="report.json").output_format == "json"
    assert RunConfig(output="report.csv", format="yaml").output_format == "yaml"
    assert RunConfig(format="tabular:grid").output_format == "tabular:grid"


@pytest.mark.parametrize(
    "settings",
    [
        {"tolerance": -1e-3},
        {"tolerance": "nan"},
        {"rule_size": 3},
        {"rule_size": "many"},
        {"seed": -1},
        {"seed": 1.5},
        {"concurrency": -2},
        {"format": "xml"},
        {"format": "json:pretty"},
        {"p": "lots"},
        {"bodies": {"kind": "ball"}},
        {"suite": {"colour": "blue"}},
        {"suite": [1]},
        {"study": [1]},
        {"command": "illuminate", "study_kind": "spiral"},
    ],
)
def test_run_config_invalid(settings):
    with pytest.raises(ConfigError):
        RunConfig(**settings)


def test_run_config_conversions():
    config = RunConfig(p="-inf", i="0.5", rule_size="64", seed="11", tolerance="1e-6")
    assert config.p == -math.inf
    assert config.i == 0.5
    assert config.rule_size == 64
    assert config.seed == 11
    assert config.tolerance == 1e-6


def test_run_config_suite_settings():
    config = RunConfig(suite={"checks": ["ISO-I"], "dimensions": [2]}, equality_only=True)
    assert config.suite_settings() == {"checks": ["ISO-I"], "dimensions": [2], "equality_only": True}


def test_run_config_from_file(tmp_path):
    path = tmp_path / "asp.yaml"
    path.write_text(
        """
rule-size: 128
seed: 3
bodies:
  - kind: ball
  - {kind: ellipsoid, diag: [1, 2]}
study:
  kind: sweep
  s_values: [0.2]
"""
    )
    settings = RunConfig.from_file(path)
    assert settings["rule_size"] == 128
    assert settings["seed"] == 3
    assert len(settings["bodies"]) == 2
    assert settings["study"]["kind"] == "sweep"


def test_run_config_from_file_invalid(tmp_path):
    unknown = tmp_path / "unknown.yaml"
    unknown.write_text("colour: blue\n")
    with pytest.raises(ConfigError):
        RunConfig.from_file(unknown)
    broken = tmp_path / "broken.yaml"
    broken.write_text("seed: [1\n")
    with pytest.raises(ConfigError):
        RunConfig.from_file(broken)
    scalar = tmp_path / "scalar.yaml"
    scalar.write_text("42\n")
    with pytest.raises(ConfigError):
        RunConfig.from_file(scalar)
    with pytest.raises(ConfigError):
        RunConfig.from_file(tmp_path / "missing.yaml")
    empty = tmp_path / "empty.yaml"
    empty.write_text("")
    assert RunConfig.from_file(empty) == {}


def test_run_config_layers(tmp_path):
    path = tmp_path / "asp.yaml"
    path.write_text("seed: 11\ntolerance: 1.0e-6\nfunctional: volume\nbodies: [{kind: ball}]\n")
    options = normalize_options(
        {
            "--config": str(path),
            "--seed": "13",
            "--tolerance": None,
            "--body": [],
            "compute": True,
            "verify": False,
            "<functional>": None,
        }
    )
    config = RunConfig.from_options(options)
    assert config.command == "compute"
    assert config.seed == 13
    assert config.tolerance == 1e-6
    assert config.functional == "volume"
    assert [body.describe() for body in config.build_bodies()] == [Ball(1.0).describe()]


def test_run_config_cli_bodies():
    options = normalize_options(
        {
            "--body": ["{kind: ball, radius: 2}", "{kind: ball}"],
            "--p": "inf",
            "compute": True,
            "<functional>": "mixed_p_affine",
        }
    )
    config = RunConfig.from_options(options)
    assert config.functional == "mixed_p_affine"
    assert config.p == math.inf
    assert [body.radius for body in config.build_bodies()] == [2.0, 1.0]
