# -*- coding: utf-8 -*-
# (c) 2024 The asp-toolbox authors
# License: GNU Affero General Public License, Version 3
import dataclasses
import logging
import math
from collections import OrderedDict
from concurrent.futures.thread import ThreadPoolExecutor
from functools import partial
from typing import Callable, Iterable, List, Optional

import colored
import numpy as np
from tqdm import tqdm
from tqdm.contrib.logging import tqdm_logging_redirect

from asp_toolbox import functionals
from asp_toolbox.bodies import BodyModel, unit_square
from asp_toolbox.config import RunConfig, build_body, build_weight
from asp_toolbox.harness import CheckContext, degenerate_sequence_study, run_suite, summarize
from asp_toolbox.illumination import (
    EXAMPLE_POINTS,
    EXAMPLE_S_VALUES,
    Constant,
    GpWeight,
    WeightField,
    boundary_trace,
    convergence_study,
    default_ray_rule,
    example_weights,
    membership_table,
    nonconvexity_certificate,
)
from asp_toolbox.model import ConfigError, Membership, UnboundedBodyError, Verdict
from asp_toolbox.quadrature import rule_arcs, rule_circle, rule_for, rule_sphere3
from asp_toolbox.util import filter_with_sql

log = logging.getLogger(__name__)


# Functional name: (number of bodies, or None for n bodies, needs p, needs i, needs a rule).
FUNCTIONALS = OrderedDict(
    lp_affine=(1, True, False, True),
    mixed_p_affine=(None, True, False, True),
    mixed_minus_n=(None, False, False, False),
    ith_mixed=(2, True, True, True),
    ith_mixed_minus_n=(2, False, True, False),
    dual_mixed_volume=(None, False, False, True),
    dual_mixed_volume_i=(2, False, True, True),
    mixed_volume_2d=(2, False, False, True),
    volume=(1, False, False, True),
    polar_volume=(1, False, False, True),
    surface_area=(1, False, False, True),
)

DEMOS = ["example-3-1", "nonconvex-disk", "degenerate-kre", "theorem-4-limit"]

# Exponents of the GpWeight studies in the limit demo, and the body they run on.
LIMIT_EXPONENTS = [0.0, 1.0, 2.0]
LIMIT_BODY = {"kind": "trig", "a0": 1.0, "a": [0.0, 0.1], "b": [0.0, 0.0, 0.03]}


@dataclasses.dataclass
class Outcome:
    """
    Records produced by a command, the record kind, and whether the run
    exhibited a failed check or an unbounded instance.
    """

    kind: str
    records: List[OrderedDict]
    failed: bool = False
    summary: OrderedDict = dataclasses.field(default_factory=OrderedDict)


def ray_rule(K: BodyModel, weight: WeightField, rays: Optional[int]):
    """
    Ray directions for volume differences, `rays` directions in total, or the default.
    """
    if rays is None:
        return None
    rays = int(rays)
    if K.dimension == 3:
        return rule_sphere3(rays)
    breaks = default_ray_rule(K, weight).breaks
    if breaks:
        return rule_arcs(breaks, max(4, rays // len(breaks)))
    return rule_circle(rays)


class AspToolbox:
    def __init__(self, config: RunConfig):
        self.config = config

        self.concurrency = 0
        self.debug = log.getEffectiveLevel() == logging.DEBUG
        self.progressbar = not self.debug

    def enable_concurrency(self, concurrency: int):
        if concurrency == 1:
            concurrency = 0
        self.concurrency = concurrency

    def map(self, func: Callable, items: Iterable, label: Optional[str] = None) -> List:  # noqa: A003
        """
        Apply `func` to all items, in parallel when concurrency is enabled.
        The results keep the order of the items.

        With a `label`, a progress bar is displayed, except in debug mode.
        """
        items = list(items)
        if self.concurrency is None or self.concurrency <= 1:
            iterator = map(func, items)
            return self._progress(iterator, len(items), label)
        log.debug(f"Running {len(items)} tasks with {self.concurrency} workers")
        with ThreadPoolExecutor(max_workers=self.concurrency) as executor:
            return self._progress(executor.map(func, items), len(items), label)

    def _progress(self, iterator, total: int, label: Optional[str]) -> List:
        if label is None or not self.progressbar:
            return list(iterator)
        with tqdm_logging_redirect():
            return list(tqdm(iterator, total=total, desc=label))

    @staticmethod
    def get_red_message(message):
        return colored.stylize(message, colored.fg("red") + colored.attr("bold"))

    def context(self) -> CheckContext:
        return CheckContext(
            rule_size=self.config.rule_size,
            seed=self.config.seed,
            tolerance_floor=self.config.tolerance,
            mapper=partial(self.map, label="checks"),
        )

    def compute(self) -> Outcome:
        """
        Evaluate one functional on the configured bodies.
        """
        name = self.config.functional
        if name not in FUNCTIONALS:
            raise ConfigError(f"Unknown functional {name!r}, expected one of {list(FUNCTIONALS)}")
        count, needs_p, needs_i, needs_rule = FUNCTIONALS[name]
        bodies = self.config.build_bodies()
        if not bodies:
            raise ConfigError(f"Functional {name} needs at least one body")
        n = bodies[0].dimension
        expected = n if count is None else count
        if len(bodies) != expected:
            raise ConfigError(f"Functional {name} needs {expected} bodies, got {len(bodies)}")
        p, i = self.config.p, self.config.i
        if needs_p and p is None:
            raise ConfigError(f"Functional {name} needs an exponent p")
        if needs_i and i is None:
            raise ConfigError(f"Functional {name} needs an index i")

        arguments: list = [bodies] if count is None else list(bodies)
        if needs_p:
            arguments.append(p)
        if needs_i:
            arguments.append(i)
        if needs_rule:
            arguments.append(rule_for(bodies, self.config.rule_size, self.config.seed))

        function = getattr(functionals, name)
        log.info(f"Computing {name} of {len(bodies)} bodies in dimension {n}")
        value = function(*arguments)

        record = OrderedDict(functional=name, dimension=n)
        record["p"] = p if needs_p else math.nan
        record["i"] = i if needs_i else math.nan
        record.update(value.to_record())
        record["bodies"] = "; ".join(repr(body) for body in bodies)
        return Outcome(kind="functional", records=[record])

    def verify(self) -> Outcome:
        """
        Run the inequality suite.
        """
        reports = run_suite(self.config.suite_settings(), self.context())
        summary = summarize(reports)
        failed = any(report.verdict is Verdict.FAIL for report in reports)
        if failed:
            log.error(self.get_red_message(f"Inequality suite has {summary[Verdict.FAIL.value]} failed checks"))
        else:
            log.info(f"Inequality suite passed: {dict(summary)}")
        records = [report.to_record() for report in reports]
        if self.config.sql:
            log.info(f"Filtering reports with SQL expression: {self.config.sql}")
            records = filter_with_sql(data=records, view_name="reports", expression=self.config.sql)
        return Outcome(kind="inequality", records=records, failed=failed, summary=summary)

    def illuminate(self) -> Outcome:
        """
        Run an illumination study: `convergence`, `sweep` or `trace`.
        """
        settings = self.config.study_settings()
        body = build_body(settings["body"])
        weight = build_weight(settings["weight"])
        kind = settings["kind"]
        log.info(f"Running {kind} study of {weight!r} on {body!r}")
        if kind == "sweep":
            return self.sweep(body, weight, settings)
        if kind == "trace":
            return self.trace(body, weight, settings)
        return self.convergence(body, weight, settings)

    def convergence(self, body: BodyModel, weight: WeightField, settings) -> Outcome:
        try:
            study = convergence_study(
                body,
                weight,
                settings["s_list"],
                rule=ray_rule(body, weight, settings["rays"]),
                samples=int(settings["samples"]),
                seed=self.config.seed,
                mapper=self.map,
            )
        except UnboundedBodyError as ex:
            log.error(self.get_red_message(str(ex)))
            records = [
                OrderedDict(s=s, volume_diff=math.inf, scaled_ratio=math.inf, rhs=math.nan, rel_dev=math.nan)
                for s in ex.offending
            ]
            return Outcome(kind="convergence", records=records, failed=True)

        records = [record.to_record() for record in study.records]
        # The extrapolated limit is reported as the row with s = 0.
        records.append(
            OrderedDict(
                s=0.0,
                volume_diff=math.nan,
                scaled_ratio=study.limit_estimate,
                rhs=study.rhs.value,
                rel_dev=study.rel_dev,
            )
        )
        if study.flag:
            log.warning(f"Convergence study: {study.flag}")
        return Outcome(kind="convergence", records=records, summary=study.summary())

    def sweep(self, body: BodyModel, weight: WeightField, settings) -> Outcome:
        points = settings["points"]
        if settings["grid"]:
            points = grid_points(settings["grid"])
        rows = membership_table(body, weight, points, settings["s_values"])
        summary = OrderedDict()
        for s in settings["s_values"]:
            summary[f"inside at s={s}"] = sum(1 for row in rows if row.s == s and row.membership is Membership.INSIDE)
        return Outcome(kind="membership", records=[row.to_record() for row in rows], summary=summary)

    def trace(self, body: BodyModel, weight: WeightField, settings) -> Outcome:
        if settings["directions"] is not None:
            directions = np.asarray(settings["directions"], dtype=float)
        elif body.dimension == 2:
            angles = settings["angles"]
            if isinstance(angles, int):
                angles = 2 * math.pi * np.arange(angles) / angles
            directions = np.asarray(angles, dtype=float)
        else:
            raise ConfigError("Trace studies of bodies in R³ need a list of `directions`")
        samples = boundary_trace(
            body,
            weight,
            settings["s"],
            directions,
            samples=int(settings["samples"]),
            seed=self.config.seed,
            mapper=self.map,
        )
        unbounded = sum(1 for sample in samples if not sample.bounded)
        if unbounded:
            log.warning(f"Trace has {unbounded} unbounded rays")
        summary = OrderedDict(rays=len(samples), unbounded=unbounded)
        return Outcome(kind="trace", records=[sample.to_record() for sample in samples], summary=summary)

    def demo(self) -> Outcome:
        name = self.config.demo
        if name not in DEMOS:
            raise ConfigError(f"Unknown demo {name!r}, expected one of {DEMOS}")
        log.info(f"Running demo {name}")
        if name == "example-3-1":
            rows = membership_table(unit_square(), example_weights(), EXAMPLE_POINTS, EXAMPLE_S_VALUES)
            return Outcome(kind="membership", records=[row.to_record() for row in rows])
        if name == "nonconvex-disk":
            certificate = nonconvexity_certificate()
            summary = OrderedDict(certified=certificate.certified, tangent_test=certificate.tangent_test)
            return Outcome(
                kind="certificate",
                records=certificate.to_records(),
                failed=not certificate.certified,
                summary=summary,
            )
        if name == "degenerate-kre":
            rows = degenerate_sequence_study(p=1.0)
            failed = not all(row.within_bound for row in rows)
            failed = failed or any(row.decreasing is False for row in rows)
            return Outcome(kind="degeneracy", records=[row.to_record() for row in rows], failed=failed)
        return self.limit_demo()

    def limit_demo(self) -> Outcome:
        """
        Limits of scaled volume differences next to the functionals they converge to:
        the disk with constant weight, and GpWeight(p) on a smooth body against as_p.
        """
        studies = [(build_body({"kind": "ball"}), Constant(1.0), None)]
        body = build_body(LIMIT_BODY)
        for p in LIMIT_EXPONENTS:
            studies.append((body, GpWeight(p), p))
        records = []
        for K, weight, p in studies:
            study = convergence_study(K, weight, mapper=self.map)
            record = OrderedDict(body=repr(K), weight=repr(weight))
            record.update(study.summary())
            if p is None:
                record["lp_affine"] = math.nan
            else:
                value = functionals.lp_affine(K, p, rule_for([K], self.config.rule_size))
                record["lp_affine"] = value.value
            record["smallest_s"] = study.records[-1].s
            record["smallest_s_rel_dev"] = study.records[-1].rel_dev
            records.append(record)
        failed = any(record["smallest_s_rel_dev"] > 0.02 for record in records)
        return Outcome(kind="limit", records=records, failed=failed)


def grid_points(grid) -> List[tuple]:
    """
    Points of a rectangular grid, given as {x: [min, max, count], y: [min, max, count]}.

        >>> grid_points({"x": [0, 1, 2], "y": [0, 0, 1]})
        [(0.0, 0.0), (1.0, 0.0)]
    """
    try:
        xs = np.linspace(float(grid["x"][0]), float(grid["x"][1]), int(grid["x"][2]))
        ys = np.linspace(float(grid["y"][0]), float(grid["y"][1]), int(grid["y"][2]))
    except (KeyError, IndexError, TypeError, ValueError) as ex:
        raise ConfigError(f"Invalid grid {grid!r}, expected {{x: [min, max, count], y: [min, max, count]}}") from ex
    return [(float(x), float(y)) for y in ys for x in xs]

