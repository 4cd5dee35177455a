import math
import re

import numpy as np
import pytest

from asp_toolbox.model import (
    AdmissibilityError,
    BoundaryPoint,
    ConvergenceRecord,
    Direction,
    EvaluationError,
    FunctionalValue,
    IlluminationSample,
    InequalityReport,
    InputError,
    Unbounded,
    Verdict,
    make_digest,
)


def test_direction_unit_norm():
    direction = Direction((0.6, 0.8))
    assert direction.dimension == 2
    assert np.allclose(np.asarray(direction), [0.6, 0.8])


def test_direction_not_unit():
    with pytest.raises(InputError) as ex:
        Direction((1.0, 1.0))
    assert ex.match("is not a unit vector")


def test_direction_of_and_angle():
    direction = Direction.of([0.0, 3.0])
    assert direction.coords == (0.0, 1.0)
    assert direction.angle == pytest.approx(math.pi / 2)
    assert Direction.from_angle(math.pi).angle == pytest.approx(math.pi)


def test_direction_of_zero_vector():
    with pytest.raises(InputError):
        Direction.of([0.0, 0.0])


def test_boundary_point_touching():
    point = BoundaryPoint(x=(0.0, 3.0), normal=Direction((0.0, 1.0)), support_value=3.0)
    assert point.point.tolist() == [0.0, 3.0]


def test_boundary_point_not_touching():
    with pytest.raises(AdmissibilityError) as ex:
        BoundaryPoint(x=(0.0, 2.0), normal=Direction((0.0, 1.0)), support_value=3.0)
    assert ex.match(re.escape("does not touch the supporting hyperplane"))


def test_functional_value_arithmetic():
    a = FunctionalValue(2.0, 0.01, "circle(m=512)")
    b = FunctionalValue(4.0, 0.02, "circle(m=512)")
    product = a * b
    assert product.value == 8.0
    assert product.abs_error == pytest.approx(4.0 * 0.01 + 2.0 * 0.02)
    quotient = b / a
    assert quotient.value == 2.0
    assert quotient.abs_error == pytest.approx(0.02 / 2.0 + 4.0 * 0.01 / 4.0)
    assert (3 * a).value == 6.0
    assert (a**2).abs_error == pytest.approx(2 * 4.0 * 0.01 / 2.0)
    assert product.rule_descriptor == "circle(m=512)"


def test_functional_value_not_finite():
    with pytest.raises(EvaluationError):
        FunctionalValue(math.inf, 0.0)
    with pytest.raises(EvaluationError):
        FunctionalValue(1.0, math.nan)


def test_functional_value_power_of_nonpositive():
    with pytest.raises(EvaluationError):
        FunctionalValue(-1.0, 0.0) ** 0.5


def test_inequality_report_pass_and_equality():
    report = InequalityReport.evaluate("AF-MIXED", "abc", lhs=1.0, rhs=1.0 + 1e-10, relation="<=", tolerance=1e-8)
    assert report.verdict is Verdict.PASS
    assert report.equality_flag is True
    assert report.margin == pytest.approx(1e-10)


def test_inequality_report_fail():
    report = InequalityReport.evaluate("ISO-I", "abc", lhs=2.0, rhs=1.0, relation="<=", tolerance=1e-8)
    assert report.verdict is Verdict.FAIL
    assert report.margin == -1.0


def test_inequality_report_greater_equal():
    report = InequalityReport.evaluate("ITH-ISO-II", "abc", lhs=2.0, rhs=1.0, relation=">=", tolerance=1e-8)
    assert report.verdict is Verdict.PASS
    assert report.margin == 1.0
    assert report.equality_flag is False


def test_inequality_report_report_only():
    report = InequalityReport.evaluate(
        "ITH-ISO-IV", "abc", lhs=2.0, rhs=1.0, relation="<=", tolerance=1e-8, report_only=True
    )
    assert report.verdict is Verdict.REPORT_ONLY
    assert report.to_record()["verdict"] == "report-only"


def test_inequality_report_skipped():
    report = InequalityReport.skipped("HOLDER-CHAIN", "abc", note="precondition value 0.5 <= 1")
    assert report.verdict is Verdict.SKIPPED
    assert math.isnan(report.margin)
    assert str(report.verdict) == "skipped-precondition"


def test_inequality_report_unknown_relation():
    with pytest.raises(InputError):
        InequalityReport.evaluate("X", "abc", lhs=1.0, rhs=1.0, relation="<", tolerance=1e-8)


def test_make_digest_stable():
    assert make_digest({"kind": "ball", "radius": 1.0}) == make_digest({"radius": 1.0, "kind": "ball"})
    assert make_digest({"kind": "ball", "radius": 1.0}) != make_digest({"kind": "ball", "radius": 2.0})


def test_unbounded_sentinel():
    assert repr(Unbounded) == "Unbounded"
    assert float(Unbounded) == math.inf
    sample = IlluminationSample(direction=Direction((1.0, 0.0)), t0=1.0, t_s=Unbounded)
    assert sample.bounded is False
    assert sample.to_record()["t_s"] == math.inf


def test_illumination_sample_below_t0():
    with pytest.raises(AdmissibilityError):
        IlluminationSample(direction=Direction((1.0, 0.0)), t0=1.0, t_s=0.5)


def test_convergence_record():
    record = ConvergenceRecord(s=0.1, volume_diff=0.01, scaled_ratio=6.0, c_n=8.0, rhs=2 * math.pi)
    assert record.rel_dev == pytest.approx(abs(6.0 - 2 * math.pi) / (2 * math.pi))
    with pytest.raises(InputError):
        ConvergenceRecord(s=0.0, volume_diff=0.0, scaled_ratio=0.0, c_n=8.0)
