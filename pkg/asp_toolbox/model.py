# -*- coding: utf-8 -*-
# (c) 2024 The asp-toolbox authors
# License: GNU Affero General Public License, Version 3
import dataclasses
import enum
import hashlib
import json
import logging
import math
from collections import OrderedDict
from typing import Any, List, Optional, Sequence, Tuple, Union

import numpy as np

log = logging.getLogger(__name__)


class AspError(Exception):
    """
    Base class for all errors raised by asp-toolbox.
    """


class InputError(AspError, ValueError):
    pass


class ConfigError(InputError):
    pass


class UnsupportedKindError(AspError, TypeError):
    pass


class UnsupportedDimensionError(UnsupportedKindError):
    pass


class AdmissibilityError(AspError, ValueError):
    pass


class ApproximationError(AspError):
    def __init__(self, message, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class EvaluationError(AspError, ArithmeticError):
    def __init__(self, message, node: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.node = None if node is None else tuple(float(x) for x in node)


class RoutedElsewhereError(InputError):
    pass


class UnboundedBodyError(AspError):
    def __init__(self, message, offending: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.offending = list(offending or [])


class _UnboundedType:
    """
    Marker for a ray which never leaves the illumination surface body.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Unbounded"

    def __float__(self):
        return math.inf

    def __reduce__(self):
        return (_UnboundedType, ())


Unbounded = _UnboundedType()


@dataclasses.dataclass(frozen=True)
class Direction:
    """
    A unit vector, i.e. a point on the sphere S^{n-1}.
    """

    coords: Tuple[float, ...]

    def __post_init__(self):
        coords = tuple(float(x) for x in self.coords)
        object.__setattr__(self, "coords", coords)
        if len(coords) < 2:
            raise InputError(f"Direction needs at least two coordinates, got {len(coords)}")
        norm = math.sqrt(math.fsum(x * x for x in coords))
        if abs(norm - 1.0) > 1e-12:
            raise InputError(f"Direction {coords} is not a unit vector (norm={norm!r})")

    @classmethod
    def of(cls, vector) -> "Direction":
        array = np.asarray(vector, dtype=float).ravel()
        norm = float(np.linalg.norm(array))
        if not math.isfinite(norm) or norm == 0.0:
            raise InputError(f"Can not derive a direction from vector {array.tolist()}")
        return cls(tuple(array / norm))

    @classmethod
    def from_angle(cls, theta: float) -> "Direction":
        return cls.of([math.cos(theta), math.sin(theta)])

    @property
    def dimension(self) -> int:
        return len(self.coords)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.coords)

    @property
    def angle(self) -> float:
        if self.dimension != 2:
            raise InputError("Only planar directions have an angle")
        return math.atan2(self.coords[1], self.coords[0]) % (2 * math.pi)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    def __len__(self):
        return len(self.coords)


@dataclasses.dataclass(frozen=True)
class BoundaryPoint:
    x: Tuple[float, ...]
    normal: Direction
    support_value: float

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        touching = math.fsum(a * b for a, b in zip(self.x, self.normal.coords))
        if abs(touching - self.support_value) > 1e-9 * abs(self.support_value):
            raise AdmissibilityError(
                f"Boundary point {self.x} does not touch the supporting hyperplane "
                f"<x, u> = {self.support_value!r} (got {touching!r})"
            )

    @property
    def point(self) -> np.ndarray:
        return np.array(self.x)


@dataclasses.dataclass(frozen=True)
class FunctionalValue:
    """
    A computed scalar functional together with an a-posteriori error estimate.

    Arithmetic propagates the error to first order, for example::

        >>> a = FunctionalValue(2.0, 0.01)
        >>> b = a * a
        >>> round(b.value, 12), round(b.abs_error, 12)
        (4.0, 0.04)
        >>> round((a ** 0.5).abs_error, 6)
        0.003536
    """

    value: float
    abs_error: float = 0.0
    rule_descriptor: str = ""

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "abs_error", abs(float(self.abs_error)))
        if not math.isfinite(self.value):
            raise EvaluationError(f"Functional value is not finite: {self.value!r}")
        if not math.isfinite(self.abs_error):
            raise EvaluationError(f"Error estimate is not finite: {self.abs_error!r}")

    @property
    def rel_error(self) -> float:
        if self.value == 0.0:
            return math.inf if self.abs_error else 0.0
        return self.abs_error / abs(self.value)

    def _descriptor(self, other):
        if isinstance(other, FunctionalValue) and other.rule_descriptor != self.rule_descriptor:
            return " ".join(filter(None, [self.rule_descriptor, other.rule_descriptor]))
        return self.rule_descriptor

    def __mul__(self, other):
        if isinstance(other, FunctionalValue):
            value = self.value * other.value
            error = abs(other.value) * self.abs_error + abs(self.value) * other.abs_error
            return FunctionalValue(value, error, self._descriptor(other))
        return FunctionalValue(self.value * other, self.abs_error * abs(other), self.rule_descriptor)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, FunctionalValue):
            value = self.value / other.value
            error = (
                self.abs_error / abs(other.value)
                + abs(self.value) * other.abs_error / other.value**2
            )
            return FunctionalValue(value, error, self._descriptor(other))
        return FunctionalValue(self.value / other, self.abs_error / abs(other), self.rule_descriptor)

    def __rtruediv__(self, other):
        return FunctionalValue(other, 0.0, self.rule_descriptor) / self

    def __pow__(self, exponent: float):
        if exponent == 0:
            return FunctionalValue(1.0, 0.0, self.rule_descriptor)
        if self.value <= 0.0:
            raise EvaluationError(f"Can not raise non-positive value {self.value!r} to a power")
        value = self.value**exponent
        error = abs(exponent) * value * self.abs_error / self.value
        return FunctionalValue(value, error, self.rule_descriptor)

    def to_record(self) -> OrderedDict:
        return OrderedDict(
            value=self.value, abs_error=self.abs_error, rule=self.rule_descriptor
        )


@dataclasses.dataclass(frozen=True)
class FpEvaluation:
    """
    The integrand building block f_p(K, u) = h_K(u)^(1-p) f_K(u), held in log-space.
    """

    body: Any
    p: float
    direction: Direction
    log_value: float

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


class Verdict(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    SKIPPED = "skipped-precondition"
    REPORT_ONLY = "report-only"

    def __str__(self):
        return self.value


def make_digest(*payload) -> str:
    """
    Compute a short, stable digest of JSON-serializable inputs.

        >>> len(make_digest({"kind": "ball", "radius": 1.0}, 2.0))
        12
        >>> make_digest({"a": 1, "b": 2}) == make_digest({"b": 2, "a": 1})
        True
    """
    text = json.dumps(payload, sort_keys=True, default=repr)
    return hashlib.sha1(text.encode("utf-8")).hexdigest()[:12]  # noqa: S324


@dataclasses.dataclass
class InequalityReport:
    check_id: str
    inputs_digest: str
    lhs: float
    rhs: float
    margin: float
    tolerance: float
    verdict: Verdict
    equality_flag: bool
    part: str = "main"
    relation: str = "<="
    anchor: str = ""
    note: str = ""

    @classmethod
    def evaluate(
        cls,
        check_id: str,
        inputs_digest: str,
        lhs: float,
        rhs: float,
        relation: str,
        tolerance: float,
        part: str = "main",
        anchor: str = "",
        note: str = "",
        report_only: bool = False,
    ) -> "InequalityReport":
        if relation == "<=":
            margin = rhs - lhs
        elif relation == ">=":
            margin = lhs - rhs
        else:
            raise InputError(f"Unknown relation {relation!r}")
        if report_only:
            verdict = Verdict.REPORT_ONLY
        elif margin < -tolerance:
            verdict = Verdict.FAIL
        else:
            verdict = Verdict.PASS
        return cls(
            check_id=check_id,
            inputs_digest=inputs_digest,
            lhs=float(lhs),
            rhs=float(rhs),
            margin=float(margin),
            tolerance=float(tolerance),
            verdict=verdict,
            equality_flag=bool(abs(margin) <= tolerance),
            part=part,
            relation=relation,
            anchor=anchor,
            note=note,
        )

    @classmethod
    def skipped(
        cls,
        check_id: str,
        inputs_digest: str,
        note: str,
        part: str = "main",
        relation: str = "<=",
        anchor: str = "",
    ) -> "InequalityReport":
        return cls(
            check_id=check_id,
            inputs_digest=inputs_digest,
            lhs=math.nan,
            rhs=math.nan,
            margin=math.nan,
            tolerance=math.nan,
            verdict=Verdict.SKIPPED,
            equality_flag=False,
            part=part,
            relation=relation,
            anchor=anchor,
            note=note,
        )

    @property
    def sort_key(self):
        return self.check_id, self.inputs_digest, self.part

    def to_record(self) -> OrderedDict:
        return OrderedDict(
            check_id=self.check_id,
            inputs_digest=self.inputs_digest,
            part=self.part,
            relation=self.relation,
            lhs=self.lhs,
            rhs=self.rhs,
            margin=self.margin,
            tolerance=self.tolerance,
            verdict=self.verdict.value,
            equality_flag=self.equality_flag,
            anchor=self.anchor,
            note=self.note,
        )


@dataclasses.dataclass(frozen=True)
class IlluminationSample:
    direction: Direction
    t0: float
    t_s: Union[float, _UnboundedType]
    delta: Optional[float] = None
    measure: Optional[float] = None

    def __post_init__(self):
        if self.t_s is not Unbounded:
            if self.t_s < self.t0 * (1 - 1e-12):
                raise AdmissibilityError(f"Boundary scale {self.t_s!r} is below t0={self.t0!r}")
            if self.delta is not None and self.delta < -1e-12 * self.t0:
                raise AdmissibilityError(f"Negative boundary distance {self.delta!r}")

    @property
    def bounded(self) -> bool:
        return self.t_s is not Unbounded

    def to_record(self) -> OrderedDict:
        record = OrderedDict()
        if self.direction.dimension == 2:
            record["angle"] = self.direction.angle
        else:
            record["direction"] = list(self.direction.coords)
        record["t0"] = self.t0
        record["t_s"] = float(self.t_s)
        record["delta"] = self.delta if self.delta is not None else math.nan
        record["measure"] = self.measure if self.measure is not None else math.nan
        record["bounded"] = self.bounded
        return record


@dataclasses.dataclass(frozen=True)
class ConvergenceRecord:
    s: float
    volume_diff: float
    scaled_ratio: float
    c_n: float
    abs_error: float = 0.0
    rhs: Optional[float] = None

    def __post_init__(self):
        if self.s <= 0:
            raise InputError(f"Illumination parameter must be positive, got {self.s!r}")

    @property
    def rel_dev(self) -> float:
        if not self.rhs:
            return math.nan
        return abs(self.scaled_ratio - self.rhs) / abs(self.rhs)

    def to_record(self) -> OrderedDict:
        return OrderedDict(
            s=self.s,
            volume_diff=self.volume_diff,
            scaled_ratio=self.scaled_ratio,
            rhs=self.rhs if self.rhs is not None else math.nan,
            rel_dev=self.rel_dev,
        )


@dataclasses.dataclass
class ConvergenceStudy:
    records: List[ConvergenceRecord]
    limit_estimate: float
    rhs: FunctionalValue
    fitted_order: Optional[float] = None
    extrapolated: bool = True
    flag: str = ""

    @property
    def rel_dev(self) -> float:
        return abs(self.limit_estimate - self.rhs.value) / abs(self.rhs.value)

    def summary(self) -> OrderedDict:
        return OrderedDict(
            limit_estimate=self.limit_estimate,
            rhs=self.rhs.value,
            rel_dev=self.rel_dev,
            fitted_order=self.fitted_order if self.fitted_order is not None else math.nan,
            extrapolated=self.extrapolated,
            flag=self.flag,
        )


@dataclasses.dataclass(frozen=True)
class DegeneracyRow:
    R: float
    eps: float
    p: float
    as_p: float
    abs_error: float
    bound: float
    volume: float
    decreasing: Optional[bool] = None

    @property
    def within_bound(self) -> bool:
        return self.as_p <= self.bound

    def to_record(self) -> OrderedDict:
        return OrderedDict(
            R=self.R,
            eps=self.eps,
            p=self.p,
            as_p=self.as_p,
            abs_error=self.abs_error,
            bound=self.bound,
            within_bound=self.within_bound,
            volume=self.volume,
            decreasing=self.decreasing if self.decreasing is not None else "",
        )


@dataclasses.dataclass(frozen=True)
class ScaleAuditRow:
    check_id: str
    part: str
    lam: float
    lhs_degree: float
    rhs_degree: float
    drift: float

    @property
    def ok(self) -> bool:
        return self.drift <= 1e-8

    def to_record(self) -> OrderedDict:
        return OrderedDict(
            check_id=self.check_id,
            part=self.part,
            lam=self.lam,
            lhs_degree=self.lhs_degree,
            rhs_degree=self.rhs_degree,
            drift=self.drift,
            ok=self.ok,
        )


class Membership(str, enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"

    def __str__(self):
        return self.value


@dataclasses.dataclass(frozen=True)
class MembershipRow:
    x: float
    y: float
    s: float
    measure: float
    membership: Membership

    def to_record(self) -> OrderedDict:
        return OrderedDict(
            x=self.x, y=self.y, s=self.s, measure=self.measure, membership=self.membership.value
        )


@dataclasses.dataclass
class NonconvexityCertificate:
    """
    Evidence that an illumination surface body of the unit disk is not convex.

    Two points of the body are exhibited together with a point on the
    segment between them which lies outside the body.
    """

    s: float
    t_axis: float
    t_diagonal: float
    t_arc_start: float
    tangent_intercept: float
    point_a: Tuple[float, float]
    point_q: Tuple[float, float]
    witness: Tuple[float, float]
    witness_fraction: float
    witness_measure: float
    midpoint: Tuple[float, float]
    midpoint_measure: float
    midpoint_inside: bool

    @property
    def tangent_test(self) -> bool:
        return self.tangent_intercept < self.t_axis

    @property
    def certified(self) -> bool:
        return self.tangent_test and self.witness_measure > self.s

    def to_records(self) -> List[OrderedDict]:
        def row(name, point, measure=math.nan, value=math.nan):
            return OrderedDict(
                item=name, x=point[0], y=point[1], measure=measure, value=value
            )

        return [
            row("axis boundary point", (self.t_axis, 0.0), value=self.t_axis),
            row("diagonal scale", (math.nan, math.nan), value=self.t_diagonal),
            row("arc start scale", (math.nan, math.nan), value=self.t_arc_start),
            row("tangent intercept", (self.tangent_intercept, 0.0), value=self.tangent_intercept),
            row("inside point A", self.point_a),
            row("inside point Q", self.point_q),
            row("outside witness", self.witness, self.witness_measure, self.witness_fraction),
            row("chord midpoint", self.midpoint, self.midpoint_measure, float(self.midpoint_inside)),
            row("certified", (math.nan, math.nan), value=float(self.certified)),
        ]
