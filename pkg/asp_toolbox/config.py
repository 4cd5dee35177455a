# -*- coding: utf-8 -*-
# (c) 2024 The asp-toolbox authors
# License: GNU Affero General Public License, Version 3
"""
Run configuration and declarative descriptions of bodies, weights and studies.

Settings are layered, last one wins: built-in defaults, the YAML file given
by `--config`, command line flags. Bodies and weights are mappings with a
`kind` tag, for example::

    bodies:
      - kind: ellipsoid
        diag: [2, 3]
      - kind: trig
        a0: 1.0
        a: [0, 0.1]
        scale: 2
"""
import dataclasses
import logging
import math
from collections import OrderedDict
from collections.abc import Mapping
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import yaml

from asp_toolbox.bodies import Ball, BodyModel, Ellipsoid, Polygon2D, RoundedSquare2D, TrigSupport2D, unit_square
from asp_toolbox.functionals import parse_exponent
from asp_toolbox.harness import SUITE_KEYS
from asp_toolbox.illumination import (
    DEFAULT_S_LIST,
    DEFAULT_SAMPLES,
    EXAMPLE_POINTS,
    EXAMPLE_S_VALUES,
    Constant,
    GpWeight,
    MixedWeight,
    PiecewiseEdge,
    QuadrantDisk,
    SqrtKappa,
    WeightField,
    example_weights,
    quadrant_disk,
)
from asp_toolbox.model import AspError, ConfigError
from asp_toolbox.quadrature import DEFAULT_SEED

log = logging.getLogger(__name__)

RULE_MINIMUM = 4

FORMATS = ["csv", "json", "yaml", "textual", "tabular"]

BODY_PARAMETERS = {
    "ball": {"radius", "dimension"},
    "ellipsoid": {"matrix", "diag"},
    "trig": {"a0", "a", "b", "centered"},
    "rounded-square": {"R", "eps"},
    "polygon": {"vertices", "centered"},
    "square": set(),
}

BODY_WRAPPERS = {"scale", "transform"}

WEIGHT_PARAMETERS = {
    "constant": {"c"},
    "edges": {"weights"},
    "quadrant": {"values"},
    "gp": {"p"},
    "sqrt-kappa": set(),
    "mixed": {"p", "bodies"},
}

STUDY_DEFAULTS = OrderedDict(
    convergence=OrderedDict(
        body={"kind": "ball"},
        weight={"kind": "constant", "c": 1.0},
        s_list=list(DEFAULT_S_LIST),
        rays=None,
        samples=DEFAULT_SAMPLES,
    ),
    sweep=OrderedDict(
        body={"kind": "square"},
        weight={"kind": "edges"},
        points=[list(point) for point in EXAMPLE_POINTS],
        grid=None,
        s_values=list(EXAMPLE_S_VALUES),
    ),
    trace=OrderedDict(
        body={"kind": "ball"},
        weight={"kind": "quadrant"},
        s=1 / 64,
        angles=64,
        directions=None,
        samples=DEFAULT_SAMPLES,
    ),
)

DEFAULT_STUDY = "convergence"

FILE_KEYS = {
    "functional",
    "bodies",
    "p",
    "i",
    "rule_size",
    "seed",
    "tolerance",
    "output",
    "format",
    "concurrency",
    "suite",
    "study",
}


def _require(spec: Dict, key: str, what: str):
    if key not in spec:
        raise ConfigError(f"{what} needs parameter `{key}`")
    return spec[key]


def _check_keys(spec: Dict, allowed: set, what: str):
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigError(f"Unknown parameters for {what}: {sorted(unknown)}")


def _as_mapping(spec: Any, what: str) -> Dict:
    if isinstance(spec, str):
        spec = yaml.safe_load(spec)
    if not isinstance(spec, Mapping):
        raise ConfigError(f"{what} description must be a mapping, got {spec!r}")
    return dict(spec)


def _make_body(kind: str, spec: Dict) -> BodyModel:
    if kind == "ball":
        return Ball(float(spec.get("radius", 1.0)), int(spec.get("dimension", 2)))
    if kind == "ellipsoid":
        if ("matrix" in spec) == ("diag" in spec):
            raise ConfigError("Ellipsoid needs exactly one of `matrix` and `diag`")
        if "diag" in spec:
            return Ellipsoid.diag(*[float(axis) for axis in spec["diag"]])
        return Ellipsoid(np.asarray(spec["matrix"], dtype=float))
    if kind == "trig":
        return TrigSupport2D(
            float(spec.get("a0", 1.0)),
            spec.get("a") or (),
            spec.get("b") or (),
            centered=bool(spec.get("centered", True)),
        )
    if kind == "rounded-square":
        what = "Rounded square"
        return RoundedSquare2D(float(_require(spec, "R", what)), float(_require(spec, "eps", what)))
    if kind == "polygon":
        return Polygon2D(_require(spec, "vertices", "Polygon"), centered=bool(spec.get("centered", True)))
    return unit_square()


def build_body(spec: Union[Mapping, str]) -> BodyModel:
    """
    Build a body from its declarative description.

        >>> build_body({"kind": "ellipsoid", "diag": [2, 3]}).describe()["matrix"]
        [[2.0, 0.0], [0.0, 3.0]]
        >>> build_body("{kind: ball, radius: 1.5, scale: 2}").radius
        3.0
    """
    spec = _as_mapping(spec, "Body")
    kind = spec.pop("kind", None)
    if kind not in BODY_PARAMETERS:
        raise ConfigError(f"Unknown body kind {kind!r}, expected one of {list(BODY_PARAMETERS)}")
    scale = spec.pop("scale", None)
    transform = spec.pop("transform", None)
    _check_keys(spec, BODY_PARAMETERS[kind], f"{kind} body")
    try:
        body = _make_body(kind, spec)
        if transform is not None:
            body = body.linear_image(np.asarray(transform, dtype=float))
        if scale is not None:
            body = body.scaled(float(scale))
    except ConfigError:
        raise
    except (AspError, TypeError, ValueError) as ex:
        raise ConfigError(f"Invalid {kind} body {spec}: {ex}") from ex
    return body


def _make_weight(kind: str, spec: Dict) -> WeightField:
    if kind == "constant":
        return Constant(float(spec.get("c", 1.0)))
    if kind == "edges":
        if "weights" not in spec:
            return example_weights()
        densities = []
        for entry in spec["weights"]:
            *normal, value = [float(item) for item in entry]
            densities.append((normal, value))
        return PiecewiseEdge(densities)
    if kind == "quadrant":
        return QuadrantDisk(spec.get("values") or quadrant_disk().values)
    if kind == "gp":
        return GpWeight(_require(spec, "p", "GpWeight"))
    if kind == "sqrt-kappa":
        return SqrtKappa()
    bodies = [build_body(body) for body in _require(spec, "bodies", "MixedWeight")]
    return MixedWeight(bodies, _require(spec, "p", "MixedWeight"))


def build_weight(spec: Union[Mapping, str]) -> WeightField:
    """
    Build a boundary weight from its declarative description.

        >>> build_weight({"kind": "constant", "c": 2})
        Constant(c=2.0)
        >>> build_weight("{kind: gp, p: inf}")
        Traceback (most recent call last):
        ...
        asp_toolbox.model.ConfigError: Invalid gp weight {'p': 'inf'}: GpWeight needs a finite exponent, got inf
    """
    spec = _as_mapping(spec, "Weight")
    kind = spec.pop("kind", None)
    if kind not in WEIGHT_PARAMETERS:
        raise ConfigError(f"Unknown weight kind {kind!r}, expected one of {list(WEIGHT_PARAMETERS)}")
    _check_keys(spec, WEIGHT_PARAMETERS[kind], f"{kind} weight")
    try:
        return _make_weight(kind, spec)
    except ConfigError:
        raise
    except (AspError, TypeError, ValueError) as ex:
        raise ConfigError(f"Invalid {kind} weight {spec}: {ex}") from ex


def study_settings(kind: Optional[str], study: Optional[Mapping] = None) -> OrderedDict:
    """
    Merge a study description over the defaults of its kind.

    The kind given on the command line wins over the `kind` key of the description.
    """
    study = dict(study or {})
    kind = kind or study.get("kind") or DEFAULT_STUDY
    study.pop("kind", None)
    if kind not in STUDY_DEFAULTS:
        raise ConfigError(f"Unknown study kind {kind!r}, expected one of {list(STUDY_DEFAULTS)}")
    _check_keys(study, set(STUDY_DEFAULTS[kind]), f"{kind} study")
    settings = OrderedDict(kind=kind)
    settings.update(STUDY_DEFAULTS[kind])
    settings.update(study)
    return settings


def _integer(value, name: str) -> int:
    try:
        number = float(value)
    except (TypeError, ValueError) as ex:
        raise ConfigError(f"Option {name} needs an integer, got {value!r}") from ex
    if not number.is_integer():
        raise ConfigError(f"Option {name} needs an integer, got {value!r}")
    return int(number)


def _real(value, name: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError) as ex:
        raise ConfigError(f"Option {name} needs a number, got {value!r}") from ex


@dataclasses.dataclass
class RunConfig:
    """
    Settings of one command invocation.
    """

    command: Optional[str] = None
    functional: Optional[str] = None
    bodies: List[Any] = dataclasses.field(default_factory=list)
    p: Optional[Any] = None
    i: Optional[Any] = None
    rule_size: Optional[int] = None
    seed: int = DEFAULT_SEED
    tolerance: float = 1e-8
    output: Optional[str] = None
    format: Optional[str] = None  # noqa: A003
    concurrency: int = 0
    suite: Optional[Dict] = None
    study: Optional[Dict] = None
    study_kind: Optional[str] = None
    equality_only: bool = False
    sql: Optional[str] = None
    demo: Optional[str] = None

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> Dict:
        """
        Read the settings of a YAML configuration file.
        """
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8"))
        except OSError as ex:
            raise ConfigError(f"Unable to read configuration file {path}: {ex}") from ex
        except yaml.YAMLError as ex:
            raise ConfigError(f"Invalid YAML in configuration file {path}: {ex}") from ex
        if data is None:
            return {}
        if not isinstance(data, Mapping):
            raise ConfigError(f"Configuration file {path} must contain a mapping")
        settings = {str(key).replace("-", "_"): value for key, value in data.items()}
        unknown = set(settings) - FILE_KEYS
        if unknown:
            raise ConfigError(f"Unknown keys in configuration file {path}: {sorted(unknown)}")
        return settings

    @classmethod
    def from_options(cls, options: Mapping) -> "RunConfig":
        """
        Layer defaults, the configuration file and the command line options.

        `options` are normalized docopt options, see `util.normalize_options`.
        """
        settings: Dict[str, Any] = {}
        if options.get("config"):
            settings.update(cls.from_file(options["config"]))

        for command in ["compute", "verify", "illuminate", "demo"]:
            if options.get(command):
                settings["command"] = command

        if options.get("functional"):
            settings["functional"] = options["functional"]
        if options.get("body"):
            settings["bodies"] = list(options["body"])
        if options.get("name"):
            settings["demo"] = options["name"]
        if options.get("study"):
            settings["study_kind"] = options["study"]
        if options.get("equality_only"):
            settings["equality_only"] = True
        if options.get("sql"):
            settings["sql"] = options["sql"]
        for key in ["p", "i", "rule_size", "seed", "tolerance", "output", "format", "concurrency"]:
            if options.get(key) is not None:
                settings[key] = options[key]
        return cls(**settings)

    def validate(self):
        if self.rule_size is not None:
            self.rule_size = _integer(self.rule_size, "rule-size")
            if self.rule_size < RULE_MINIMUM:
                raise ConfigError(f"Rule size must be at least {RULE_MINIMUM}, got {self.rule_size}")
        self.seed = _integer(self.seed, "seed")
        if self.seed < 0:
            raise ConfigError(f"Seed must not be negative, got {self.seed}")
        self.tolerance = _real(self.tolerance, "tolerance")
        if not (self.tolerance >= 0 and math.isfinite(self.tolerance)):
            raise ConfigError(f"Tolerance must be a non-negative number, got {self.tolerance!r}")
        self.concurrency = _integer(self.concurrency, "concurrency")
        if self.concurrency < 0:
            raise ConfigError(f"Concurrency must not be negative, got {self.concurrency}")
        if self.format is not None and self.format.split(":")[0] not in FORMATS:
            raise ConfigError(f"Unknown output format {self.format!r}, expected one of {FORMATS}")
        if self.format is not None and ":" in self.format and not self.format.startswith("tabular:"):
            raise ConfigError(f"Only the tabular format takes a table style, got {self.format!r}")
        for name in ["p", "i"]:
            value = getattr(self, name)
            if value is not None:
                try:
                    setattr(self, name, parse_exponent(value))
                except AspError as ex:
                    raise ConfigError(f"Invalid exponent {name}={value!r}: {ex}") from ex
        if not isinstance(self.bodies, list):
            raise ConfigError(f"Bodies must be given as a list, got {self.bodies!r}")
        if self.suite is not None:
            if not isinstance(self.suite, Mapping):
                raise ConfigError(f"Suite description must be a mapping, got {self.suite!r}")
            _check_keys(self.suite, SUITE_KEYS, "suite")
        if self.study is not None and not isinstance(self.study, Mapping):
            raise ConfigError(f"Study description must be a mapping, got {self.study!r}")
        if self.command == "illuminate":
            study_settings(self.study_kind, self.study)

    @property
    def output_format(self) -> str:
        if self.format:
            return self.format
        if self.output and self.output.endswith(".csv"):
            return "csv"
        if self.output and self.output.endswith(".json"):
            return "json"
        return "tabular:psql"

    def build_bodies(self) -> List[BodyModel]:
        return [build_body(spec) for spec in self.bodies]

    def suite_settings(self) -> Dict:
        """
        The suite description handed to the harness. Without a `suite` section,
        the default suite is run with the configured seed.
        """
        suite = dict(self.suite) if self.suite is not None else {"seed": self.seed}
        if self.equality_only:
            suite["equality_only"] = True
        return suite

    def study_settings(self) -> OrderedDict:
        return study_settings(self.study_kind, self.study)
