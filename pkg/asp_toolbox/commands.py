# -*- coding: utf-8 -*-
# (c) 2024 The asp-toolbox authors
# License: GNU Affero General Public License, Version 3
import logging
import sys

from docopt import DocoptExit, docopt

from asp_toolbox import __appname__, __version__
from asp_toolbox.config import RunConfig
from asp_toolbox.core import AspToolbox, Outcome
from asp_toolbox.model import AspError, InputError, UnboundedBodyError, UnsupportedKindError
from asp_toolbox.report.data import output_results
from asp_toolbox.report.tabular import TabularReport, get_table_format
from asp_toolbox.report.textual import TextualReport
from asp_toolbox.util import normalize_options, setup_logging

log = logging.getLogger(__name__)

EXIT_FAILED = 1
EXIT_INPUT_ERROR = 2


def run():
    """
    Usage:
      asp-toolbox [options] compute <functional> [--body=<body>]... [--p=<p>] [--i=<i>]
      asp-toolbox [options] verify [--equality-only] [--sql=<sql>]
      asp-toolbox [options] illuminate [--study=<kind>]
      asp-toolbox [options] demo <name>
      asp-toolbox --version
      asp-toolbox (-h | --help)

    Options:
      --config=<path>                   YAML file with settings, bodies, suite and study descriptions
      --seed=<seed>                     Seed for random corpora, Monte Carlo rules and samples. Default: 7.
      --rule-size=<size>                Quadrature rule size: nodes on the circle, level on S², samples beyond.
      --tolerance=<tolerance>           Absolute tolerance floor of inequality verdicts. Default: 1e-8.
      --output=<path>                   Write the report to a file instead of stdout.
      --format=<format>                 Output format. One of csv, json, yaml, textual, tabular[:<tablefmt>].
      --concurrency=<concurrency>       Run multiple tasks in parallel. Default: 0.
      --body=<body>                     Body description as inline YAML mapping. Can be repeated.
      --p=<p>                           Exponent p, a number or one of inf, -inf.
      --i=<i>                           Index i of the i-th mixed functionals.
      --equality-only                   Only run instances attaining equality.
      --sql=<sql>                       Filter the reports by SQL, the table is called `reports`.
      --study=<kind>                    Illumination study. One of convergence, sweep, trace.
      --verbose                         Enable verbose mode
      --version                         Show version information
      --debug                           Enable debug messages
      -h --help                         Show this screen

    Exit codes:

      0 on success, 1 when a check fails or an illumination surface body is
      unbounded, 2 on invalid input, including inputs the numerics cannot
      evaluate, like a polar body that cannot be refit.

    Functionals:

      # L_p affine surface area of the unit disk, 2π for every p.
      asp-toolbox compute lp_affine --body="{kind: ball}" --p=3

      # Mixed (-n)-affine surface area of two unit disks.
      asp-toolbox compute mixed_minus_n --body="{kind: ball}" --body="{kind: ball}"

      # Volume of an ellipse, as JSON.
      asp-toolbox compute volume --body="{kind: ellipsoid, diag: [2, 3]}" --format=json

      # i-th mixed p-affine surface area of a trigonometric body and a dilated ellipse.
      asp-toolbox compute ith_mixed --body="{kind: trig, a: [0, 0.1]}" --body="{kind: ellipsoid, diag: [1, 2], scale: 1.5}" --p=1 --i=0.5

      Available functionals: lp_affine, mixed_p_affine, mixed_minus_n, ith_mixed,
      ith_mixed_minus_n, dual_mixed_volume, dual_mixed_volume_i, mixed_volume_2d,
      volume, polar_volume, surface_area.

    Inequalities:

      # Run the default suite on a seeded corpus, and write a CSV report.
      asp-toolbox verify --output=reports.csv

      # Run the instances attaining equality only.
      asp-toolbox verify --equality-only --format=tabular:grid

      # Display the checks with the smallest margins.
      asp-toolbox verify --format=yaml --sql="
        SELECT check_id, part, margin
        FROM reports
        WHERE verdict = 'pass'
        ORDER BY margin
        LIMIT 5
      "

      # Run a suite described in a configuration file, using four workers.
      asp-toolbox --config=suite.yaml --concurrency=4 verify

    Illumination:

      # Scaled volume differences of the disk with constant weight, and their limit.
      asp-toolbox illuminate --output=convergence.csv

      # Membership of the points around the square with edge weights.
      asp-toolbox illuminate --study=sweep

      # Boundary of the illumination surface body of the disk with quadrant weights.
      asp-toolbox illuminate --study=trace --format=csv

      # A study described under `study:` in a configuration file.
      asp-toolbox --config=study.yaml illuminate

    Demos:

      # Membership table of the square with edge weights.
      asp-toolbox demo example-3-1

      # Certificate for a non-convex illumination surface body of the disk.
      asp-toolbox demo nonconvex-disk

      # Affine surface areas of rounded squares degenerating to a segment.
      asp-toolbox demo degenerate-kre

      # Limits of scaled volume differences next to the functionals they approach.
      asp-toolbox demo theorem-4-limit

    """  # noqa: E501

    # Parse command line arguments
    try:
        options = normalize_options(docopt(run.__doc__, version=f"{__appname__} {__version__}"))
    except DocoptExit as ex:
        # Usage errors share the exit code of invalid input.
        print(ex, file=sys.stderr)
        ex.code = EXIT_INPUT_ERROR
        raise

    # Setup logging
    debug = options.get("debug")
    log_level = logging.INFO
    if debug:
        log_level = logging.DEBUG
    setup_logging(log_level)

    try:
        config = RunConfig.from_options(options)
        engine = AspToolbox(config)
        engine.enable_concurrency(config.concurrency)

        if options.compute:
            outcome = engine.compute()
        elif options.verify:
            outcome = engine.verify()
        elif options.illuminate:
            outcome = engine.illuminate()
        else:
            outcome = engine.demo()

    except (InputError, UnsupportedKindError) as ex:
        log.error(AspToolbox.get_red_message(str(ex)))
        sys.exit(EXIT_INPUT_ERROR)
    except UnboundedBodyError as ex:
        log.error(AspToolbox.get_red_message(str(ex)))
        sys.exit(EXIT_FAILED)
    except AspError as ex:
        # Inputs the numerics cannot handle: failed refits, non-finite integrands.
        log.error(AspToolbox.get_red_message(f"{ex.__class__.__name__}: {ex}"))
        sys.exit(EXIT_INPUT_ERROR)

    emit(outcome, config, verbose=options.verbose)

    if outcome.failed:
        sys.exit(EXIT_FAILED)


def emit(outcome: Outcome, config: RunConfig, verbose: bool = False):
    """
    Render an outcome in the configured output format.
    """
    output_format = config.output_format
    if output_format.startswith("tab"):
        text = TabularReport(outcome.kind, tblfmt=get_table_format(output_format)).render(outcome.records)
    elif output_format.startswith("text"):
        text = TextualReport(outcome.kind, verbose=verbose).render(outcome.records, outcome.summary)
    else:
        output_results(output_format, outcome.records, kind=outcome.kind, output=config.output)
        return

    if config.output:
        with open(config.output, "w", encoding="utf-8") as stream:
            stream.write(text + "\n")
        log.info(f"Wrote {outcome.kind} report to {config.output}")
    else:
        print(text)
