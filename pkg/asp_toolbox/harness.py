# -*- coding: utf-8 -*-
# (c) 2024 The asp-toolbox authors
# License: GNU Affero General Public License, Version 3
"""
Numeric evaluation of the inequalities between mixed p-affine surface areas,
dual mixed volumes and volumes.

Every check is registered with an identifier, an anchor naming the statement
it evaluates, and a runner computing both sides through `asp_toolbox.functionals`.
A check produces one `InequalityReport` per part of the statement.
"""
import dataclasses
import inspect
import logging
import math
import threading
from collections import OrderedDict
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from asp_toolbox.bodies import Ball, BodyModel, Ellipsoid, RoundedSquare2D, random_ellipsoid, random_trig_body
from asp_toolbox.functionals import (
    POLE_GUARD,
    affine_exponent,
    dual_mixed_volume,
    ith_mixed,
    ith_mixed_minus_n,
    lp_affine,
    mixed_minus_n,
    mixed_p_affine,
    mixed_volume_2d,
    parse_exponent,
    polar_volume,
    volume,
)
from asp_toolbox.model import (
    AdmissibilityError,
    ApproximationError,
    DegeneracyRow,
    EvaluationError,
    FunctionalValue,
    InequalityReport,
    InputError,
    ScaleAuditRow,
    UnsupportedKindError,
    Verdict,
    make_digest,
)
from asp_toolbox.quadrature import ball_volume, rule_arcs, rule_for

log = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class CheckSpec:
    check_id: str
    anchor: str
    description: str
    runner: Callable


REGISTRY: Dict[str, CheckSpec] = OrderedDict()


def register(check_id: str, anchor: str, description: str):
    def decorator(runner):
        REGISTRY[check_id] = CheckSpec(check_id=check_id, anchor=anchor, description=description, runner=runner)
        return runner

    return decorator


class CheckContext:
    """
    Shared state for evaluating checks: rule selection, tolerance floor, a
    cache for functionals and polar bodies, and the map used to fan out work.
    """

    def __init__(
        self,
        rule_size: Optional[int] = None,
        seed: int = 7,
        tolerance_floor: float = 1e-8,
        mapper: Callable = map,
    ):
        if tolerance_floor < 0:
            raise InputError(f"Tolerance must not be negative, got {tolerance_floor!r}")
        self.rule_size = rule_size
        self.seed = seed
        self.tolerance_floor = tolerance_floor
        self.mapper = mapper
        self._cache: Dict[Tuple, Tuple[Any, Any]] = {}
        self._lock = threading.Lock()

    def cached(self, key: Tuple, keep: Any, compute: Callable):
        with self._lock:
            if key in self._cache:
                return self._cache[key][1]
        value = compute()
        with self._lock:
            # Holding a reference to `keep` pins the object ids used in `key`.
            self._cache[key] = (keep, value)
        return value

    def rule(self, bodies: Sequence[BodyModel]):
        key = ("rule", bodies[0].dimension, tuple(sorted({b for body in bodies for b in body.breakpoints()})))
        return self.cached(key, None, lambda: rule_for(bodies, self.rule_size, self.seed))

    def polar(self, body: BodyModel) -> BodyModel:
        return self.cached(("polar", id(body)), body, body.polar_body)

    def ball(self, n: int) -> Ball:
        return self.cached(("ball", n), None, lambda: Ball(1.0, n))

    def as_p(self, bodies: Sequence[BodyModel], p: float) -> FunctionalValue:
        """
        Mixed p-affine surface area, routed to the maximum definition at p = -n.
        """
        bodies = tuple(bodies)
        key = ("as", tuple(id(body) for body in bodies), p)
        n = bodies[0].dimension
        if not math.isinf(p) and abs(n + p) < POLE_GUARD:
            return self.cached(key, bodies, lambda: mixed_minus_n(bodies))
        return self.cached(key, bodies, lambda: mixed_p_affine(bodies, p, self.rule(bodies)))

    def as_pi(self, K: BodyModel, L: BodyModel, p: float, i: float) -> FunctionalValue:
        key = ("as_i", id(K), id(L), p, i)
        n = K.dimension
        if not math.isinf(p) and abs(n + p) < POLE_GUARD:
            return self.cached(key, (K, L), lambda: ith_mixed_minus_n(K, L, i))
        return self.cached(key, (K, L), lambda: ith_mixed(K, L, p, i, self.rule([K, L])))

    def volume(self, K: BodyModel) -> FunctionalValue:
        return self.cached(("volume", id(K)), K, lambda: volume(K, self.rule([K])))

    def polar_volume(self, K: BodyModel) -> FunctionalValue:
        return self.cached(("polar_volume", id(K)), K, lambda: polar_volume(K, self.rule([K])))

    def ball_area(self, n: int) -> FunctionalValue:
        """
        as_p of the Euclidean unit ball, n |B|, independent of p.
        """
        return FunctionalValue(n * ball_volume(n), 0.0, "closed-form")

    def ball_volume(self, n: int) -> FunctionalValue:
        return FunctionalValue(ball_volume(n), 0.0, "closed-form")


@dataclasses.dataclass
class CheckRun:
    spec: CheckSpec
    ctx: CheckContext
    digest: str
    reports: List[InequalityReport] = dataclasses.field(default_factory=list)

    def compare(
        self,
        lhs: FunctionalValue,
        rhs: FunctionalValue,
        relation: str = "<=",
        part: str = "main",
        report_only: bool = False,
        note: str = "",
    ):
        tolerance = max(self.ctx.tolerance_floor, 10 * (lhs.abs_error + rhs.abs_error))
        report = InequalityReport.evaluate(
            self.spec.check_id,
            self.digest,
            lhs.value,
            rhs.value,
            relation,
            tolerance,
            part=part,
            anchor=self.spec.anchor,
            note=note,
            report_only=report_only,
        )
        if report.verdict is Verdict.FAIL:
            log.warning(
                f"Check {self.spec.check_id}/{part} failed: lhs={lhs.value!r} {relation} rhs={rhs.value!r} "
                f"(margin {report.margin!r}, tolerance {tolerance!r}, inputs {self.digest})"
            )
        self.reports.append(report)

    def skip(self, note: str, part: str = "main", relation: str = "<="):
        log.debug(f"Check {self.spec.check_id}/{part} skipped: {note}")
        self.reports.append(
            InequalityReport.skipped(
                self.spec.check_id, self.digest, note=note, part=part, relation=relation, anchor=self.spec.anchor
            )
        )


def _dimension(bodies: Sequence[BodyModel], count: Optional[int] = None) -> int:
    if not bodies:
        raise InputError("Check needs at least one body")
    n = bodies[0].dimension
    if any(body.dimension != n for body in bodies):
        raise InputError("Bodies of a check must share their dimension")
    expected = n if count is None else count
    if len(bodies) != expected:
        raise InputError(f"Check needs {expected} bodies, got {len(bodies)}")
    return n


def _is_pole(p: float, n: int) -> bool:
    return not math.isinf(p) and abs(n + p) < POLE_GUARD


def _product(values: Iterable[FunctionalValue]) -> FunctionalValue:
    result = FunctionalValue(1.0, 0.0, "")
    for value in values:
        result = result * value
    return result


def _same_bodies(bodies: Sequence[BodyModel]) -> bool:
    first = bodies[0]
    return all(body is first or body.describe() == first.describe() for body in bodies)


@register(
    "AF-MIXED",
    "Alexandrov-Fenchel type inequality for mixed p-affine surface areas, equality for dilates",
    "as_p^m(K_1..K_n) <= prod_{i<m} as_p(K_1..K_{n-m}, K_{n-i} repeated m times)",
)
def check_af_mixed(run: CheckRun, bodies, p, m=None):
    n = _dimension(bodies)
    p = parse_exponent(p)
    m = n if m is None else int(m)
    if not 1 <= m <= n:
        raise InputError(f"AF-MIXED needs 1 <= m <= n, got m={m}")
    if _is_pole(p, n):
        run.skip("p = -n is evaluated by AF-MINUS-N")
        return
    _af_compare(run, bodies, p, m)


@register(
    "AF-MINUS-N",
    "Alexandrov-Fenchel type inequality for mixed (-n)-affine surface areas, equality for dilates",
    "as_{-n}^m(K_1..K_n) <= prod_{i<m} as_{-n}(K_1..K_{n-m}, K_{n-i} repeated m times)",
)
def check_af_minus_n(run: CheckRun, bodies, m=None):
    n = _dimension(bodies)
    m = n if m is None else int(m)
    if not 1 <= m <= n:
        raise InputError(f"AF-MINUS-N needs 1 <= m <= n, got m={m}")
    _af_compare(run, bodies, float(-n), m)


def _af_compare(run: CheckRun, bodies, p: float, m: int):
    n = len(bodies)
    head = list(bodies[: n - m])
    lhs = run.ctx.as_p(bodies, p) ** m
    rhs = _product(run.ctx.as_p(head + [bodies[n - 1 - i]] * m, p) for i in range(m))
    run.compare(lhs, rhs, note=f"m={m}")


@register(
    "ISO-I",
    "Affine isoperimetric inequality for mixed p-affine surface areas, p >= 0, equality for dilated ellipsoids",
    "as_p^n(K_1..K_n) / as_p^n(B) <= (prod |K_i| / |B|)^((n-p)/(n+p))",
)
def check_iso_i(run: CheckRun, bodies, p):
    n = _dimension(bodies)
    p = parse_exponent(p)
    if not p >= 0:
        run.skip(f"needs p >= 0, got p={p!r}")
        return
    ctx = run.ctx
    lhs = (ctx.as_p(bodies, p) / ctx.ball_area(n)) ** n
    rhs = _product(ctx.volume(K) / ctx.ball_volume(n) for K in bodies) ** affine_exponent(p, n)
    run.compare(lhs, rhs)


@register(
    "ISO-II",
    "Isoperimetric inequality against the mixed volume, 0 <= p <= n",
    "as_p(K_1..K_n) / as_p(B) <= (V(K_1..K_n) / |B|)^((n-p)/(n+p))",
)
def check_iso_ii(run: CheckRun, bodies, p):
    n = _dimension(bodies)
    p = parse_exponent(p)
    if not 0 <= p <= n:
        run.skip(f"needs 0 <= p <= n, got p={p!r}")
        return
    ctx = run.ctx
    if _same_bodies(bodies):
        mixed = ctx.volume(bodies[0])
        note = "mixed volume of equal bodies"
    elif n == 2:
        mixed = mixed_volume_2d(bodies[0], bodies[1], ctx.rule(bodies))
        note = "planar mixed volume"
    else:
        run.skip("mixed volume restricted to n = 2 or equal bodies")
        return
    lhs = ctx.as_p(bodies, p) / ctx.ball_area(n)
    rhs = (mixed / ctx.ball_volume(n)) ** affine_exponent(p, n)
    run.compare(lhs, rhs, note=note)


@register(
    "ISO-III",
    "Isoperimetric inequality against the dual mixed volume, p >= n",
    "as_p(K_1..K_n) / as_p(B) <= (dual V(K_1..K_n) / |B|)^((n-p)/(n+p))",
)
def check_iso_iii(run: CheckRun, bodies, p):
    n = _dimension(bodies)
    p = parse_exponent(p)
    if not p >= n:
        run.skip(f"needs p >= n, got p={p!r}")
        return
    ctx = run.ctx
    dual = ctx.cached(
        ("dual", tuple(map(id, bodies))), tuple(bodies), lambda: dual_mixed_volume(bodies, ctx.rule(bodies))
    )
    lhs = ctx.as_p(bodies, p) / ctx.ball_area(n)
    rhs = (dual / ctx.ball_volume(n)) ** affine_exponent(p, n)
    run.compare(lhs, rhs)


def _dominating_ellipsoid(run: CheckRun, bodies, mode: str):
    n = bodies[0].dimension
    rule = run.ctx.rule(bodies)
    supports = np.array([K.support(rule.nodes) for K in bodies])
    if mode == "circumscribed":
        return Ball(1.01 * float(supports.max()), n)
    if mode == "inscribed":
        return Ball(0.99 * float(supports.min()), n)
    if mode == "self":
        if not isinstance(bodies[0], (Ball, Ellipsoid)):
            raise InputError("ELLIPSOID-DOM with mode 'self' needs an ellipsoid as first body")
        return bodies[0]
    raise InputError(f"Unknown ellipsoid mode {mode!r}, use circumscribed, inscribed or self")


@register(
    "ELLIPSOID-DOM",
    "Domination by a centered ellipsoid: inside it for 0 <= p < n, containing it for p > n",
    "as_p(K_1..K_n) <= as_p(E)",
)
def check_ellipsoid_dom(run: CheckRun, bodies, p, mode="circumscribed"):
    n = _dimension(bodies)
    p = parse_exponent(p)
    if p < 0:
        run.skip(f"needs p >= 0, got p={p!r}")
        return
    E = _dominating_ellipsoid(run, bodies, mode)
    rule = run.ctx.rule(bodies)
    ellipsoid_support = E.support(rule.nodes)
    slack = 1e-12 * float(ellipsoid_support.max())
    for K in bodies:
        support = K.support(rule.nodes)
        if p < n and np.any(support > ellipsoid_support + slack):
            run.skip(f"bodies are not contained in the {mode} ellipsoid")
            return
        if p > n and np.any(support < ellipsoid_support - slack):
            run.skip(f"{mode} ellipsoid is not contained in the bodies")
            return
    lhs = run.ctx.as_p(bodies, p)
    rhs = run.ctx.as_p([E] * n, p)
    run.compare(lhs, rhs, note=f"ellipsoid={mode}")


def _polars(run: CheckRun, bodies) -> Optional[List[BodyModel]]:
    try:
        return [run.ctx.polar(K) for K in bodies]
    except UnsupportedKindError as ex:
        run.skip(f"polar body unavailable: {ex}")
        return None


@register(
    "SANTALO-MIXED",
    "Blaschke-Santalo type inequality for mixed p-affine surface areas, p >= 0",
    "as_p^n(K..) as_p^n(K°..) <= n^(2n) prod |K_i||K_i°| and as_p(K..) as_p(K°..) <= as_p(B)^2",
)
def check_santalo(run: CheckRun, bodies, p):
    n = _dimension(bodies)
    p = parse_exponent(p)
    if not p >= 0:
        run.skip(f"needs p >= 0, got p={p!r}")
        return
    polars = _polars(run, bodies)
    if polars is None:
        return
    ctx = run.ctx
    product = ctx.as_p(bodies, p) * ctx.as_p(polars, p)
    volumes = _product(ctx.volume(K) * ctx.polar_volume(K) for K in bodies)
    run.compare(product**n, volumes * float(n ** (2 * n)), part="volume")
    run.compare(product, ctx.ball_area(n) ** 2, part="ball")


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


@register(
    "HOLDER-CHAIN",
    "Interpolation between three exponents by Hölder's inequality",
    "as_p <= as_r^((p-s)(n+r)/((r-s)(n+p))) as_s^((r-p)(n+s)/((r-s)(n+p)))",
)
def check_holder_chain(run: CheckRun, bodies, p, r, s):
    n = _dimension(bodies)
    p, r, s = parse_exponent(p), parse_exponent(r), parse_exponent(s)
    if not _finite(p, r, s) or any(_is_pole(x, n) for x in (p, r, s)) or p == s or r == s:
        run.skip(f"needs finite p, r, s different from -n with p != s != r, got {(p, r, s)}")
        return
    condition = (n + p) * (r - s) / ((n + r) * (p - s))
    if not condition > 1:
        run.skip(f"precondition (n+p)(r-s)/((n+r)(p-s)) = {condition!r} is not > 1")
        return
    ctx = run.ctx
    a = (p - s) * (n + r) / ((r - s) * (n + p))
    b = (r - p) * (n + s) / ((r - s) * (n + p))
    run.compare(ctx.as_p(bodies, p), ctx.as_p(bodies, r) ** a * ctx.as_p(bodies, s) ** b, note=f"p={p}, r={r}, s={s}")


@register(
    "HOLDER-DUAL",
    "Interpolation between as_r and the dual mixed volume of the polar bodies",
    "as_p <= as_r^((n+r)/(n+p)) (n dual V(K_1°..K_n°))^((p-r)/(n+p))",
)
def check_holder_dual(run: CheckRun, bodies, p, r):
    n = _dimension(bodies)
    p, r = parse_exponent(p), parse_exponent(r)
    if not _finite(p, r) or _is_pole(p, n) or _is_pole(r, n):
        run.skip(f"needs finite p, r different from -n, got {(p, r)}")
        return
    condition = (n + p) / (n + r)
    if not condition > 1:
        run.skip(f"precondition (n+p)/(n+r) = {condition!r} is not > 1")
        return
    ctx = run.ctx
    dual = ctx.as_p(bodies, math.inf)
    rhs = ctx.as_p(bodies, r) ** ((n + r) / (n + p)) * dual ** ((p - r) / (n + p))
    run.compare(ctx.as_p(bodies, p), rhs, note=f"p={p}, r={r}")


@register(
    "MONO-DUAL",
    "Monotonicity of the quotient against the dual mixed volume of the polar bodies",
    "(as_p / n dual V°)^(n+p) <= (as_r / n dual V°)^(n+r) for -n < r < p or r < p < -n",
)
def check_mono_dual(run: CheckRun, bodies, p, r):
    n = _dimension(bodies)
    p, r = parse_exponent(p), parse_exponent(r)
    if not _finite(p, r) or not (-n < r < p or r < p < -n):
        run.skip(f"needs -n < r < p or r < p < -n, got p={p!r}, r={r!r}")
        return
    ctx = run.ctx
    dual = ctx.as_p(bodies, math.inf)
    lhs = (ctx.as_p(bodies, p) / dual) ** (n + p)
    rhs = (ctx.as_p(bodies, r) / dual) ** (n + r)
    run.compare(lhs, rhs, note=f"p={p}, r={r}")


@register(
    "MONO-ZERO",
    "Monotonicity of the quotient against as_0",
    "(as_p / as_0)^((n+p)/p) <= (as_r / as_0)^((n+r)/r)",
)
def check_mono_zero(run: CheckRun, bodies, p, r):
    n = _dimension(bodies)
    p, r = parse_exponent(p), parse_exponent(r)
    valid = _finite(p, r) and (0 < p < r or p < r < -n or r < -n < 0 < p or -n < p < r < 0)
    if not valid:
        run.skip(f"needs 0 < p < r, p < r < -n, r < -n < 0 < p or -n < p < r < 0, got p={p!r}, r={r!r}")
        return
    ctx = run.ctx
    zero = ctx.as_p(bodies, 0.0)
    lhs = (ctx.as_p(bodies, p) / zero) ** ((n + p) / p)
    rhs = (ctx.as_p(bodies, r) / zero) ** ((n + r) / r)
    run.compare(lhs, rhs, note=f"p={p}, r={r}")


@register(
    "MINUS-N-INTERP",
    "Two-sided interpolation through the mixed (-n)-affine surface area",
    "as_p <= as_{-n}^(2e) as_s if e = n(s-p)/((n+p)(n+s)) >= 0, reversed if e <= 0",
)
def check_minus_n_interp(run: CheckRun, bodies, p, s):
    n = _dimension(bodies)
    p, s = parse_exponent(p), parse_exponent(s)
    if not _finite(p, s) or _is_pole(p, n) or _is_pole(s, n):
        run.skip(f"needs finite p, s different from -n, got p={p!r}, s={s!r}")
        return
    ctx = run.ctx
    e = n * (s - p) / ((n + p) * (n + s))
    relation = "<=" if e >= 0 else ">="
    rhs = ctx.as_p(bodies, float(-n)) ** (2 * e) * ctx.as_p(bodies, s)
    run.compare(ctx.as_p(bodies, p), rhs, relation=relation, note=f"p={p}, s={s}, e={e!r}")


@register(
    "ITH-HOLDER",
    "Hölder inequality for i-th mixed p-affine surface areas in the index, equality for dilates",
    "as_{p,i} <= as_{p,j}^((k-i)/(k-j)) as_{p,k}^((i-j)/(k-j)) for j < i < k or k < i < j",
)
def check_ith_holder(run: CheckRun, bodies, p, i, j, k):
    _dimension(bodies, count=2)
    K, L = bodies
    p = parse_exponent(p)
    i, j, k = float(i), float(j), float(k)
    if not (j < i < k or k < i < j):
        run.skip(f"needs j < i < k or k < i < j, got i={i}, j={j}, k={k}")
        return
    ctx = run.ctx
    rhs = ctx.as_pi(K, L, p, j) ** ((k - i) / (k - j)) * ctx.as_pi(K, L, p, k) ** ((i - j) / (k - j))
    run.compare(ctx.as_pi(K, L, p, i), rhs, note=f"p={p}, i={i}, j={j}, k={k}")


@register(
    "ITH-SANTALO",
    "Blaschke-Santalo type inequality for i-th mixed p-affine surface areas, p >= 0, 0 <= i <= n",
    "as_{p,i}(K,L) as_{p,i}(K°,L°) <= as_p(B)^2",
)
def check_ith_santalo(run: CheckRun, bodies, p, i):
    n = _dimension(bodies, count=2)
    K, L = bodies
    p, i = parse_exponent(p), float(i)
    if not (p >= 0 and 0 <= i <= n):
        run.skip(f"needs p >= 0 and 0 <= i <= n, got p={p!r}, i={i}")
        return
    polars = _polars(run, bodies)
    if polars is None:
        return
    ctx = run.ctx
    product = ctx.as_pi(K, L, p, i) * ctx.as_pi(polars[0], polars[1], p, i)
    run.compare(product, ctx.ball_area(n) ** 2, part="ball", note=f"p={p}, i={i}")
    volumes = (ctx.volume(K) * ctx.polar_volume(K)) ** (n - i) * (ctx.volume(L) * ctx.polar_volume(L)) ** i
    run.compare(product**n, volumes * float(n ** (2 * n)), part="volume", note=f"p={p}, i={i}")


def _ith_iso(
    run: CheckRun, bodies, p: float, i: float, relation: str, ratio_report_only=False, polar_report_only=False
):
    """
    The ratio part compares as_{p,i}(K) / as_{p,i}(B) with a power of |K| / |B|,
    the polar part compares as_{p,i}(K) as_{p,i}(K°) with as_p(B)^2.
    """
    n = _dimension(bodies, count=1)
    K = bodies[0]
    ctx = run.ctx
    B = ctx.ball(n)
    value = ctx.as_pi(K, B, p, i)
    exponent = affine_exponent(p, n) * (n - i) / n
    ratio = value / ctx.ball_area(n)
    volume_ratio = (ctx.volume(K) / ctx.ball_volume(n)) ** exponent
    note = f"p={p}, i={i}"
    run.compare(ratio, volume_ratio, relation=relation, part="ratio", report_only=ratio_report_only, note=note)
    polars = _polars(run, bodies)
    if polars is None:
        return
    polar_value = ctx.as_pi(polars[0], B, p, i)
    if polar_report_only:
        note += ", constant c omitted"
    run.compare(
        value * polar_value,
        ctx.ball_area(n) ** 2,
        relation=relation,
        part="polar",
        report_only=polar_report_only,
        note=note,
    )


@register(
    "ITH-ISO-I",
    "Isoperimetric inequality for i-th mixed p-affine surface areas, p >= 0, 0 <= i <= n, equality for balls",
    "as_{p,i}(K)/as_{p,i}(B) <= (|K|/|B|)^((n-p)(n-i)/((n+p)n)) and as_{p,i}(K) as_{p,i}(K°) <= as_p(B)^2",
)
def check_ith_iso_i(run: CheckRun, bodies, p, i):
    n = _dimension(bodies, count=1)
    p, i = parse_exponent(p), float(i)
    if not (p >= 0 and 0 <= i <= n):
        run.skip(f"needs p >= 0 and 0 <= i <= n, got p={p!r}, i={i}")
        return
    _ith_iso(run, bodies, p, i, "<=")


@register(
    "ITH-ISO-II",
    "Reverse isoperimetric inequality for i-th mixed p-affine surface areas, p >= 0, i >= n, equality for balls",
    "as_{p,i}(K)/as_{p,i}(B) >= (|K|/|B|)^((n-p)(n-i)/((n+p)n)) and as_{p,i}(K) as_{p,i}(K°) >= as_p(B)^2",
)
def check_ith_iso_ii(run: CheckRun, bodies, p, i):
    n = _dimension(bodies, count=1)
    p, i = parse_exponent(p), float(i)
    if not (p >= 0 and i >= n):
        run.skip(f"needs p >= 0 and i >= n, got p={p!r}, i={i}")
        return
    _ith_iso(run, bodies, p, i, ">=")


@register(
    "ITH-ISO-III",
    "Isoperimetric inequality for i-th mixed p-affine surface areas, -n < p < 0, i <= 0",
    "as_{p,i}(K)/as_{p,i}(B) >= (|K|/|B|)^((n-p)(n-i)/((n+p)n)); polar product part involves a universal constant",
)
def check_ith_iso_iii(run: CheckRun, bodies, p, i):
    n = _dimension(bodies, count=1)
    p, i = parse_exponent(p), float(i)
    if not (-n < p < 0 and i <= 0):
        run.skip(f"needs -n < p < 0 and i <= 0, got p={p!r}, i={i}")
        return
    _ith_iso(run, bodies, p, i, ">=", polar_report_only=True)


@register(
    "ITH-ISO-IV",
    "Isoperimetric inequality for i-th mixed p-affine surface areas, p < -n, i <= 0, with a universal constant",
    "both parts involve a universal constant and are reported without verdict",
)
def check_ith_iso_iv(run: CheckRun, bodies, p, i):
    n = _dimension(bodies, count=1)
    p, i = parse_exponent(p), float(i)
    if not (p < -n and i <= 0):
        run.skip(f"needs p < -n and i <= 0, got p={p!r}, i={i}")
        return
    _ith_iso(run, bodies, p, i, ">=", ratio_report_only=True, polar_report_only=True)


@register(
    "ITH-ISO-V",
    "Isoperimetric inequality for i-th mixed (-n)-affine surface areas, i <= 0, equality for balls",
    "as_{-n,i}(K) >= (|K|/|B|)^((n-i)/n) and as_{-n,i}(K) as_{-n,i}(K°) >= 1",
)
def check_ith_iso_v(run: CheckRun, bodies, i):
    n = _dimension(bodies, count=1)
    i = float(i)
    if not i <= 0:
        run.skip(f"needs i <= 0, got i={i}")
        return
    _ith_iso(run, bodies, float(-n), i, ">=")


def check_digest(check_id: str, bodies: Sequence[BodyModel], params: Dict) -> str:
    return make_digest(check_id, [body.describe() for body in bodies], {k: params[k] for k in sorted(params)})


def run_check(
    check_id: str, bodies: Sequence[BodyModel], params: Optional[Dict] = None, ctx: Optional[CheckContext] = None
) -> List[InequalityReport]:
    """
    Evaluate one registered check and return its reports, one per part.
    """
    if check_id not in REGISTRY:
        raise InputError(f"Unknown check {check_id!r}, choose from {', '.join(REGISTRY)}")
    spec = REGISTRY[check_id]
    params = dict(params or {})
    ctx = ctx or CheckContext()
    digest = check_digest(check_id, bodies, params)
    run = CheckRun(spec=spec, ctx=ctx, digest=digest)
    try:
        inspect.signature(spec.runner).bind(run, list(bodies), **params)
    except TypeError as ex:
        raise InputError(f"Invalid parameters {params} for check {check_id}: {ex}") from ex
    try:
        spec.runner(run, list(bodies), **params)
    except (EvaluationError, AdmissibilityError, ApproximationError) as ex:
        raise EvaluationError(f"Check {check_id} failed to evaluate on inputs {digest}: {ex}") from ex
    return run.reports


# Exponent grids of the default suite. Entries violating a precondition are
# part of the grid on purpose, they document a skipped instance.
def _suite_grid(n: int) -> List[Tuple[str, str, Dict]]:
    """
    Return (check_id, tuple kind, params) triples. Tuple kinds: "n" (n bodies),
    "pair" (two bodies), "single" (one body), "equal" (n copies of an ellipsoid).
    """
    grid: List[Tuple[str, str, Dict]] = []
    for p in [-5, -1, 1, math.inf]:
        for m in range(1, n + 1):
            grid.append(("AF-MIXED", "n", dict(p=p, m=m)))
    for m in range(1, n + 1):
        grid.append(("AF-MINUS-N", "n", dict(m=m)))
    grid += [("ISO-I", "n", dict(p=p)) for p in [0, 1, 2, 4, math.inf]]
    grid += [("ISO-II", "n", dict(p=p)) for p in [0, 1, n]]
    grid += [("ISO-III", "n", dict(p=p)) for p in [n, 2 * n, math.inf]]
    grid += [("ELLIPSOID-DOM", "n", dict(p=p, mode="circumscribed")) for p in [0, 1]]
    grid += [("ELLIPSOID-DOM", "n", dict(p=p, mode="inscribed")) for p in [n + 1, math.inf]]
    grid += [("ELLIPSOID-DOM", "equal", dict(p=p, mode="self")) for p in [1, n + 1]]
    grid += [("SANTALO-MIXED", "n", dict(p=p)) for p in [0, 1, 2, math.inf]]
    for p, r, s in [(2, 3, 1), (-1, 0, -1.5), (2, 1, -6), (1, 2, 3)]:
        grid.append(("HOLDER-CHAIN", "n", dict(p=p, r=r, s=s)))
    for p, r in [(2, 1), (4, 0), (-0.5, -1), (-6, -4), (1, 2)]:
        grid.append(("HOLDER-DUAL", "n", dict(p=p, r=r)))
    for p, r in [(2, 1), (1, -1), (-5, -6), (1, 2)]:
        grid.append(("MONO-DUAL", "n", dict(p=p, r=r)))
    for p, r in [(1, 2), (-6, -5), (1, -6), (-1.5, -0.5), (2, 1)]:
        grid.append(("MONO-ZERO", "n", dict(p=p, r=r)))
    for p, s in [(1, 2), (2, 1), (-1, 0), (-5, 1)]:
        grid.append(("MINUS-N-INTERP", "n", dict(p=p, s=s)))
    for p in [1, 0, -n]:
        grid.append(("ITH-HOLDER", "pair", dict(p=p, i=1, j=0, k=2)))
        grid.append(("ITH-HOLDER", "pair", dict(p=p, i=0.5, j=-1, k=n + 1)))
    grid.append(("ITH-HOLDER", "pair", dict(p=1, i=3, j=0, k=2)))
    grid += [("ITH-SANTALO", "pair", dict(p=p, i=i)) for p in [0, 1, 2] for i in [0.5, 1]]
    grid += [("ITH-ISO-I", "single", dict(p=p, i=i)) for p in [0, 1, 2] for i in [0, 1, n]]
    grid += [("ITH-ISO-II", "single", dict(p=p, i=i)) for p in [0, 1] for i in [n, n + 1]]
    grid += [("ITH-ISO-III", "single", dict(p=-1, i=i)) for i in [0, -1]]
    grid += [("ITH-ISO-IV", "single", dict(p=-5, i=i)) for i in [0, -1]]
    grid += [("ITH-ISO-V", "single", dict(i=i)) for i in [0, -1, -2]]
    return grid


def _equality_instance(check_id: str, n: int, params: Dict) -> bool:
    """
    Whether a grid entry is a valid instance attaining equality on dilated
    ellipsoids, used to build the equality-only suite.
    """
    p = parse_exponent(params.get("p", 0))
    if check_id == "HOLDER-CHAIN":
        r, s = params["r"], params["s"]
        return (n + p) * (r - s) / ((n + r) * (p - s)) > 1
    if check_id == "HOLDER-DUAL":
        return (n + p) / (n + params["r"]) > 1
    if check_id == "MONO-DUAL":
        r = params["r"]
        return -n < r < p or r < p < -n
    if check_id == "MONO-ZERO":
        r = params["r"]
        return 0 < p < r or p < r < -n or r < -n < 0 < p or -n < p < r < 0
    if check_id == "ITH-HOLDER":
        i, j, k = params["i"], params["j"], params["k"]
        return j < i < k or k < i < j
    if check_id == "ELLIPSOID-DOM":
        return params.get("mode") == "self"
    if check_id == "ISO-II":
        return n == 2
    return True


DEFAULT_CORPUS = {"trig": 3, "ellipsoids2": 2, "ellipsoids3": 2}

DEFAULT_SUITE = {"seed": 7, "checks": None, "equality_only": False, "corpus": DEFAULT_CORPUS, "dimensions": [2, 3]}

SUITE_KEYS = set(DEFAULT_SUITE)


def build_corpus(seed: int, corpus: Dict[str, int], dimensions: Sequence[int]) -> Dict[int, List[BodyModel]]:
    unknown = set(corpus) - set(DEFAULT_CORPUS)
    if unknown:
        raise InputError(f"Unknown corpus entries: {sorted(unknown)}")
    rng = np.random.default_rng(seed)
    bodies: Dict[int, List[BodyModel]] = {}
    if 2 in dimensions:
        bodies[2] = [random_trig_body(rng) for _ in range(int(corpus.get("trig", 0)))]
        bodies[2] += [random_ellipsoid(rng, 2) for _ in range(int(corpus.get("ellipsoids2", 0)))]
    if 3 in dimensions:
        bodies[3] = [random_ellipsoid(rng, 3) for _ in range(int(corpus.get("ellipsoids3", 0)))]
    return bodies


def _tuples(corpus: List[BodyModel], n: int, kind: str) -> List[List[BodyModel]]:
    if not corpus:
        return []
    if kind == "single":
        return [[body] for body in corpus]
    if kind == "equal":
        ellipsoids = [body for body in corpus if isinstance(body, Ellipsoid)]
        return [[ellipsoids[0]] * n] if ellipsoids else []
    width = n if kind == "n" else 2
    size = len(corpus)
    tuples = [[corpus[(start + offset) % size] for offset in range(width)] for start in range(size)]
    # Dilated tuple: equality case of the dilation-invariant checks.
    first = corpus[0]
    tuples.append([first.scaled(1.0 + 0.5 * offset) for offset in range(width)])
    return tuples


def _equality_tuples(n: int, kind: str) -> List[List[BodyModel]]:
    ellipsoid = Ellipsoid.diag(*[1.0 + 0.3 * k for k in range(n)])
    width = {"n": n, "pair": 2, "single": 1, "equal": n}[kind]
    if kind == "single":
        return [[Ball(1.7, n)]]
    if kind == "equal":
        return [[ellipsoid] * n]
    return [
        [ellipsoid.scaled(1.0 + 0.5 * offset) for offset in range(width)],
        [Ball(1.0 + 0.5 * offset, n) for offset in range(width)],
    ]


def suite_tasks(config: Dict) -> List[Tuple[str, List[BodyModel], Dict]]:
    """
    Expand a suite description into (check_id, bodies, params) tasks.
    """
    unknown = set(config) - SUITE_KEYS
    if unknown:
        raise InputError(f"Unknown suite keys: {sorted(unknown)}")
    if not config:
        return []
    settings = dict(DEFAULT_SUITE)
    settings.update(config)
    checks = settings["checks"]
    if checks is not None:
        missing = [check for check in checks if check not in REGISTRY]
        if missing:
            raise InputError(f"Unknown checks: {missing}")
    dimensions = [int(n) for n in settings["dimensions"]]
    corpus = build_corpus(int(settings["seed"]), dict(settings["corpus"] or {}), dimensions)

    tasks = []
    for n in dimensions:
        for check_id, kind, params in _suite_grid(n):
            if checks is not None and check_id not in checks:
                continue
            if settings["equality_only"]:
                if not _equality_instance(check_id, n, params):
                    continue
                candidates = _equality_tuples(n, kind)
            else:
                candidates = _tuples(corpus.get(n, []), n, kind)
            for bodies in candidates:
                tasks.append((check_id, bodies, params))
    return tasks


def run_suite(config: Dict, ctx: Optional[CheckContext] = None) -> List[InequalityReport]:
    """
    Run all tasks of a suite description. The result is sorted by check id,
    inputs digest and part, independent of the evaluation order.
    """
    ctx = ctx or CheckContext(seed=int(config.get("seed", 7)) if config else 7)
    tasks = suite_tasks(config)
    log.info(f"Running inequality suite with {len(tasks)} instances")
    results = ctx.mapper(lambda task: run_check(task[0], task[1], task[2], ctx), tasks)
    reports = [report for batch in results for report in batch]
    return sorted(reports, key=lambda report: report.sort_key)


def summarize(reports: Sequence[InequalityReport]) -> OrderedDict:
    summary = OrderedDict(total=len(reports))
    for verdict in Verdict:
        summary[verdict.value] = sum(1 for report in reports if report.verdict is verdict)
    summary["equality"] = sum(1 for report in reports if report.equality_flag)
    return summary


DEFAULT_SCHEDULE = [(10.0, 1e-1), (1e2, 1e-2), (1e3, 1e-3), (1e4, 1e-4)]


def degeneracy_bound(p: float, R: float, eps: float) -> float:
    return 16 / R ** (p / (2 + p)) + 4 * math.pi * eps ** (2 / (2 + p))


def degenerate_sequence_study(
    p: float = 1.0, pairs: Sequence[Tuple[float, float]] = DEFAULT_SCHEDULE, order: int = 64
) -> List[DegeneracyRow]:
    """
    Evaluate as_p of the rounded squares K(R, ε) along a schedule of (R, ε)
    pairs, next to the upper bound 16/R^(p/(2+p)) + 4π ε^(2/(2+p)).
    """
    p = parse_exponent(p)
    if not (p > 0 and math.isfinite(p)):
        raise InputError(f"Degeneracy study needs finite p > 0, got {p!r}")
    rows: List[DegeneracyRow] = []
    previous = None
    for R, eps in pairs:
        body = RoundedSquare2D(R, eps)
        rule = rule_arcs(body.breakpoints(), order)
        value = lp_affine(body, p, rule)
        area = volume(body, rule, method="support")
        decreasing = None if previous is None else value.value < previous
        rows.append(
            DegeneracyRow(
                R=float(R),
                eps=float(eps),
                p=p,
                as_p=value.value,
                abs_error=value.abs_error,
                bound=degeneracy_bound(p, R, eps),
                volume=area.value,
                decreasing=decreasing,
            )
        )
        previous = value.value
    return rows


def scale_covariance_audit(
    check_id: str, bodies: Sequence[BodyModel], params: Optional[Dict] = None, ctx: Optional[CheckContext] = None,
    factor: float = 2.0,
) -> List[ScaleAuditRow]:
    """
    Compare a check on `bodies` and on the dilated bodies `factor * bodies`.

    Both sides of a homogeneous inequality pick up the same power of the
    factor, so the ratio lhs / rhs must not drift.
    """
    ctx = ctx or CheckContext()
    original = run_check(check_id, bodies, params, ctx)
    dilated = run_check(check_id, [body.scaled(factor) for body in bodies], params, ctx)
    rows = []
    for before, after in zip(original, dilated):
        if before.verdict is Verdict.SKIPPED or after.verdict is Verdict.SKIPPED:
            continue
        lhs_degree = math.log(after.lhs / before.lhs) / math.log(factor)
        rhs_degree = math.log(after.rhs / before.rhs) / math.log(factor)
        drift = abs((after.lhs / after.rhs) / (before.lhs / before.rhs) - 1)
        rows.append(
            ScaleAuditRow(
                check_id=check_id,
                part=before.part,
                lam=factor,
                lhs_degree=lhs_degree,
                rhs_degree=rhs_degree,
                drift=drift,
            )
        )
    return rows
