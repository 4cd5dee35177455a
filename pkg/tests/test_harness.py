import math
import re

import pytest

from asp_toolbox.bodies import Ball, Ellipsoid, RoundedSquare2D
from asp_toolbox.harness import (
    REGISTRY,
    CheckContext,
    degeneracy_bound,
    degenerate_sequence_study,
    run_check,
    run_suite,
    scale_covariance_audit,
    suite_tasks,
    summarize,
)
from asp_toolbox.model import AdmissibilityError, EvaluationError, InputError, Verdict


def test_registry_complete():
    assert list(REGISTRY) == [
        "AF-MIXED",
        "AF-MINUS-N",
        "ISO-I",
        "ISO-II",
        "ISO-III",
        "ELLIPSOID-DOM",
        "SANTALO-MIXED",
        "HOLDER-CHAIN",
        "HOLDER-DUAL",
        "MONO-DUAL",
        "MONO-ZERO",
        "MINUS-N-INTERP",
        "ITH-HOLDER",
        "ITH-SANTALO",
        "ITH-ISO-I",
        "ITH-ISO-II",
        "ITH-ISO-III",
        "ITH-ISO-IV",
        "ITH-ISO-V",
    ]
    for spec in REGISTRY.values():
        assert spec.anchor
        assert spec.description


def test_iso_i_ball_equality():
    reports = run_check("ISO-I", [Ball(1.0), Ball(2.0)], {"p": 1})
    assert len(reports) == 1
    report = reports[0]
    assert report.verdict is Verdict.PASS
    assert report.equality_flag is True
    assert report.lhs == pytest.approx(2 ** (2 / 3), rel=1e-12)
    assert report.anchor == REGISTRY["ISO-I"].anchor


def test_af_mixed_passes_on_corpus(corpus2):
    ctx = CheckContext()
    for first, second in zip(corpus2, corpus2[1:]):
        for p in [-5, -1, 1, math.inf]:
            for m in [1, 2]:
                reports = run_check("AF-MIXED", [first, second], {"p": p, "m": m}, ctx)
                assert [report.verdict for report in reports] == [Verdict.PASS]


def test_af_mixed_m1_is_identity(corpus2):
    report = run_check("AF-MIXED", corpus2[:2], {"p": 1, "m": 1})[0]
    assert report.equality_flag is True


def test_af_mixed_pole_skipped():
    report = run_check("AF-MIXED", [Ball(1.0), Ball(2.0)], {"p": -2})[0]
    assert report.verdict is Verdict.SKIPPED
    assert "AF-MINUS-N" in report.note
    assert math.isnan(report.lhs)


def test_af_minus_n(corpus2):
    reports = run_check("AF-MINUS-N", corpus2[:2], {"m": 2})
    assert reports[0].verdict is Verdict.PASS
    reports = run_check("AF-MINUS-N", [Ball(1.0), Ball(3.0)], {"m": 2})
    assert reports[0].equality_flag is True


def test_af_mixed_invalid_m():
    with pytest.raises(InputError) as ex:
        run_check("AF-MIXED", [Ball(1.0), Ball(2.0)], {"p": 1, "m": 3})
    assert ex.match(re.escape("AF-MIXED needs 1 <= m <= n, got m=3"))


def test_iso_checks_on_corpus(corpus2):
    ctx = CheckContext()
    for first, second in zip(corpus2, corpus2[1:]):
        for p in [0, 1, 2, 4, math.inf]:
            assert run_check("ISO-I", [first, second], {"p": p}, ctx)[0].verdict is Verdict.PASS
        for p in [0, 1, 2]:
            assert run_check("ISO-II", [first, second], {"p": p}, ctx)[0].verdict is Verdict.PASS
        for p in [2, 4, math.inf]:
            assert run_check("ISO-III", [first, second], {"p": p}, ctx)[0].verdict is Verdict.PASS


def test_iso_preconditions():
    bodies = [Ball(1.0), Ball(2.0)]
    assert run_check("ISO-I", bodies, {"p": -1})[0].verdict is Verdict.SKIPPED
    assert run_check("ISO-II", bodies, {"p": 3})[0].verdict is Verdict.SKIPPED
    assert run_check("ISO-III", bodies, {"p": 1})[0].verdict is Verdict.SKIPPED


def test_iso_ii_restricted_in_space(corpus3):
    report = run_check("ISO-II", corpus3[:3], {"p": 1})[0]
    assert report.verdict is Verdict.SKIPPED
    assert "mixed volume restricted" in report.note
    report = run_check("ISO-II", [corpus3[0]] * 3, {"p": 1})[0]
    assert report.verdict is Verdict.PASS


def test_ellipsoid_domination(corpus2, trig_body):
    bodies = [trig_body, corpus2[0]]
    for p in [0, 1]:
        assert run_check("ELLIPSOID-DOM", bodies, {"p": p, "mode": "circumscribed"})[0].verdict is Verdict.PASS
    for p in [3, math.inf]:
        assert run_check("ELLIPSOID-DOM", bodies, {"p": p, "mode": "inscribed"})[0].verdict is Verdict.PASS


def test_ellipsoid_domination_wrong_inclusion(trig_body):
    report = run_check("ELLIPSOID-DOM", [trig_body, trig_body], {"p": 1, "mode": "inscribed"})[0]
    assert report.verdict is Verdict.SKIPPED
    assert "not contained" in report.note


def test_ellipsoid_domination_self_equality():
    E = Ellipsoid.diag(1.0, 2.0)
    for p in [1, 3]:
        report = run_check("ELLIPSOID-DOM", [E, E], {"p": p, "mode": "self"})[0]
        assert report.verdict is Verdict.PASS
        assert report.equality_flag is True


def test_ellipsoid_domination_invalid_mode(trig_body):
    with pytest.raises(InputError) as ex:
        run_check("ELLIPSOID-DOM", [trig_body, trig_body], {"p": 1, "mode": "self"})
    assert ex.match("needs an ellipsoid as first body")
    with pytest.raises(InputError) as ex:
        run_check("ELLIPSOID-DOM", [trig_body, trig_body], {"p": 1, "mode": "outer"})
    assert ex.match(re.escape("Unknown ellipsoid mode 'outer'"))


def test_santalo_parts(corpus2):
    reports = run_check("SANTALO-MIXED", corpus2[:2], {"p": 1})
    assert [report.part for report in reports] == ["volume", "ball"]
    assert all(report.verdict is Verdict.PASS for report in reports)


def test_santalo_ellipse_equality():
    E = Ellipsoid.diag(1.0, 2.0)
    for p in [0, 1, 2, math.inf]:
        reports = run_check("SANTALO-MIXED", [E, E.scaled(1.5)], {"p": p})
        assert all(report.equality_flag for report in reports)


def test_santalo_without_polar():
    body = RoundedSquare2D(10.0, 0.1)
    report = run_check("SANTALO-MIXED", [body, body], {"p": 1})[0]
    assert report.verdict is Verdict.SKIPPED
    assert "polar body unavailable" in report.note


@pytest.mark.parametrize("p,r,s", [(2, 3, 1), (-1, 0, -1.5), (2, 1, -6)])
def test_holder_chain(corpus2, p, r, s):
    report = run_check("HOLDER-CHAIN", corpus2[:2], {"p": p, "r": r, "s": s})[0]
    assert report.verdict is Verdict.PASS


def test_holder_chain_precondition():
    report = run_check("HOLDER-CHAIN", [Ball(1.0), Ball(2.0)], {"p": 1, "r": 2, "s": 3})[0]
    assert report.verdict is Verdict.SKIPPED
    assert report.note.startswith("precondition (n+p)(r-s)/((n+r)(p-s)) = 0.375")


@pytest.mark.parametrize("p,r", [(2, 1), (4, 0), (-0.5, -1), (-6, -4)])
def test_holder_dual(corpus2, p, r):
    assert run_check("HOLDER-DUAL", corpus2[:2], {"p": p, "r": r})[0].verdict is Verdict.PASS


def test_holder_dual_precondition():
    report = run_check("HOLDER-DUAL", [Ball(1.0), Ball(2.0)], {"p": 1, "r": 2})[0]
    assert report.verdict is Verdict.SKIPPED


@pytest.mark.parametrize("p,r", [(2, 1), (1, -1), (-5, -6)])
def test_mono_dual(corpus2, p, r):
    assert run_check("MONO-DUAL", corpus2[1:3], {"p": p, "r": r})[0].verdict is Verdict.PASS


@pytest.mark.parametrize("p,r", [(1, 2), (-6, -5), (1, -6), (-1.5, -0.5)])
def test_mono_zero(corpus2, p, r):
    assert run_check("MONO-ZERO", corpus2[1:3], {"p": p, "r": r})[0].verdict is Verdict.PASS


def test_mono_preconditions():
    bodies = [Ball(1.0), Ball(2.0)]
    assert run_check("MONO-DUAL", bodies, {"p": 1, "r": 2})[0].verdict is Verdict.SKIPPED
    assert run_check("MONO-ZERO", bodies, {"p": 2, "r": 1})[0].verdict is Verdict.SKIPPED


def test_minus_n_interpolation_relation(corpus2):
    forward = run_check("MINUS-N-INTERP", corpus2[:2], {"p": 1, "s": 2})[0]
    assert forward.relation == "<="
    assert forward.verdict is Verdict.PASS
    backward = run_check("MINUS-N-INTERP", corpus2[:2], {"p": 2, "s": 1})[0]
    assert backward.relation == ">="
    assert backward.verdict is Verdict.PASS
    for p, s in [(-1, 0), (-5, 1)]:
        assert run_check("MINUS-N-INTERP", corpus2[:2], {"p": p, "s": s})[0].verdict is Verdict.PASS


@pytest.mark.parametrize("p", [1, 0, -2])
def test_ith_holder(corpus2, p):
    report = run_check("ITH-HOLDER", corpus2[:2], {"p": p, "i": 1, "j": 0, "k": 2})[0]
    assert report.verdict is Verdict.PASS


def test_ith_holder_dilates_equality():
    E = Ellipsoid.diag(1.0, 1.4)
    report = run_check("ITH-HOLDER", [E, E.scaled(2.0)], {"p": 1, "i": 1, "j": 0, "k": 2})[0]
    assert report.equality_flag is True


def test_ith_holder_precondition():
    report = run_check("ITH-HOLDER", [Ball(1.0), Ball(2.0)], {"p": 1, "i": 3, "j": 0, "k": 2})[0]
    assert report.verdict is Verdict.SKIPPED


def test_ith_holder_needs_pair():
    with pytest.raises(InputError) as ex:
        run_check("ITH-HOLDER", [Ball(1.0)], {"p": 1, "i": 1, "j": 0, "k": 2})
    assert ex.match(re.escape("Check needs 2 bodies, got 1"))


def test_ith_santalo(corpus2):
    for p in [0, 1, 2]:
        for i in [0.5, 1]:
            reports = run_check("ITH-SANTALO", corpus2[:2], {"p": p, "i": i})
            assert [report.part for report in reports] == ["ball", "volume"]
            assert all(report.verdict is Verdict.PASS for report in reports)


def test_ith_iso_on_corpus(corpus2):
    ctx = CheckContext()
    for K in corpus2[:5]:
        for p in [0, 1, 2]:
            for i in [0, 1, 2]:
                reports = run_check("ITH-ISO-I", [K], {"p": p, "i": i}, ctx)
                assert [report.part for report in reports] == ["ratio", "polar"]
                assert all(report.verdict is Verdict.PASS for report in reports)
        for p in [0, 1]:
            for i in [2, 3]:
                reports = run_check("ITH-ISO-II", [K], {"p": p, "i": i}, ctx)
                assert all(report.verdict is Verdict.PASS for report in reports)
        for i in [0, -1, -2]:
            reports = run_check("ITH-ISO-V", [K], {"i": i}, ctx)
            assert all(report.verdict is Verdict.PASS for report in reports)


def test_ith_iso_report_only(trig_body):
    ratio, polar = run_check("ITH-ISO-III", [trig_body], {"p": -1, "i": -1})
    assert ratio.verdict is Verdict.PASS
    assert polar.verdict is Verdict.REPORT_ONLY
    assert "constant c omitted" in polar.note
    reports = run_check("ITH-ISO-IV", [trig_body], {"p": -5, "i": 0})
    assert [report.verdict for report in reports] == [Verdict.REPORT_ONLY, Verdict.REPORT_ONLY]


def test_ith_iso_ball_equality():
    for check_id, params in [
        ("ITH-ISO-I", {"p": 1, "i": 1}),
        ("ITH-ISO-II", {"p": 1, "i": 3}),
        ("ITH-ISO-V", {"i": -1}),
    ]:
        reports = run_check(check_id, [Ball(1.7)], params)
        assert all(report.equality_flag for report in reports), check_id


def test_run_check_unknown():
    with pytest.raises(InputError) as ex:
        run_check("NOPE", [Ball(1.0), Ball(1.0)])
    assert ex.match("Unknown check 'NOPE'")


def test_run_check_invalid_parameters():
    with pytest.raises(InputError) as ex:
        run_check("ISO-I", [Ball(1.0), Ball(1.0)], {"q": 1})
    assert ex.match("Invalid parameters")


def test_run_check_dimension_mismatch():
    with pytest.raises(InputError):
        run_check("ISO-I", [Ball(1.0), Ball(1.0, dimension=3)], {"p": 1})


def test_run_check_wraps_evaluation_errors(monkeypatch):
    def broken(self, bodies, p):
        raise AdmissibilityError("Body is not C²₊")

    monkeypatch.setattr(CheckContext, "as_p", broken)
    with pytest.raises(EvaluationError) as ex:
        run_check("AF-MIXED", [Ball(1.0), Ball(2.0)], {"p": 1})
    assert ex.match("Check AF-MIXED failed to evaluate on inputs")
    assert isinstance(ex.value.__cause__, AdmissibilityError)


def test_negative_tolerance():
    with pytest.raises(InputError):
        CheckContext(tolerance_floor=-1.0)


def test_digest_deterministic(corpus2):
    first = run_check("ISO-I", corpus2[:2], {"p": 1})[0]
    second = run_check("ISO-I", corpus2[:2], {"p": 1})[0]
    other = run_check("ISO-I", corpus2[:2], {"p": 2})[0]
    assert first.inputs_digest == second.inputs_digest
    assert first.inputs_digest != other.inputs_digest
    assert first.lhs == second.lhs


def test_run_suite_empty():
    assert run_suite({}) == []
    assert run_suite({"checks": []}) == []


def test_suite_unknown_entries():
    with pytest.raises(InputError):
        suite_tasks({"checks": ["NOPE"]})
    with pytest.raises(InputError):
        suite_tasks({"colour": "blue"})
    with pytest.raises(InputError):
        suite_tasks({"checks": ["ISO-I"], "corpus": {"polygons": 2}})


def test_run_suite_small():
    config = {
        "checks": ["AF-MIXED", "ISO-I", "HOLDER-CHAIN"],
        "dimensions": [2],
        "corpus": {"trig": 2, "ellipsoids2": 1},
    }
    reports = run_suite(config)
    assert reports
    assert [report.sort_key for report in reports] == sorted(report.sort_key for report in reports)
    assert not [report for report in reports if report.verdict is Verdict.FAIL]
    skipped = [report for report in reports if report.verdict is Verdict.SKIPPED]
    assert skipped
    assert {report.check_id for report in skipped} == {"HOLDER-CHAIN"}
    again = run_suite(config)
    assert [(r.inputs_digest, r.part, r.verdict) for r in again] == [
        (r.inputs_digest, r.part, r.verdict) for r in reports
    ]


def test_run_suite_space():
    reports = run_suite({"checks": ["ISO-I", "SANTALO-MIXED"], "dimensions": [3], "corpus": {"ellipsoids3": 2}})
    assert reports
    assert all(report.verdict is Verdict.PASS for report in reports)


def test_run_suite_equality_only():
    reports = run_suite({"equality_only": True, "dimensions": [2]})
    assert reports
    assert {report.check_id for report in reports} == set(REGISTRY)
    for report in reports:
        assert report.verdict in (Verdict.PASS, Verdict.REPORT_ONLY), report
        assert report.equality_flag, report


def test_summarize():
    reports = run_check("ITH-ISO-III", [Ball(1.5)], {"p": -1, "i": 0})
    reports += run_check("ISO-I", [Ball(1.0), Ball(1.0)], {"p": -1})
    summary = summarize(reports)
    assert summary["total"] == 3
    assert summary["pass"] == 1
    assert summary["report-only"] == 1
    assert summary["skipped-precondition"] == 1
    assert summary["fail"] == 0
    assert summary["equality"] == 2


def test_degenerate_sequence_study():
    rows = degenerate_sequence_study(p=1.0)
    assert [row.R for row in rows] == [10.0, 100.0, 1000.0, 10000.0]
    assert all(row.within_bound for row in rows)
    assert rows[0].decreasing is None
    assert all(row.decreasing for row in rows[1:])
    assert rows[-1].as_p < 0.5
    assert rows[0].bound == pytest.approx(degeneracy_bound(1.0, 10.0, 0.1))


def test_degeneracy_bound_example():
    assert degeneracy_bound(1.0, 1000.0, 1e-3) == pytest.approx(1.6 + 4 * math.pi * 1e-2, rel=1e-12)


def test_degenerate_sequence_study_invalid():
    with pytest.raises(InputError):
        degenerate_sequence_study(p=0)
    with pytest.raises(InputError):
        degenerate_sequence_study(p="inf")


def test_scale_covariance_audit(corpus2):
    rows = scale_covariance_audit("AF-MIXED", corpus2[:2], {"p": 1, "m": 2})
    assert len(rows) == 1
    row = rows[0]
    assert row.ok
    assert row.lhs_degree == pytest.approx(4 / 3, rel=1e-9)
    assert row.rhs_degree == pytest.approx(4 / 3, rel=1e-9)
    for check_id, params in [("ISO-I", {"p": 2}), ("HOLDER-DUAL", {"p": 2, "r": 1}), ("AF-MINUS-N", {"m": 2})]:
        assert all(row.ok for row in scale_covariance_audit(check_id, corpus2[:2], params)), check_id


def test_scale_covariance_audit_skips():
    assert scale_covariance_audit("ISO-I", [Ball(1.0), Ball(2.0)], {"p": -1}) == []
