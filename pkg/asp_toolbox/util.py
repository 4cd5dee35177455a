# -*- coding: utf-8 -*-
# (c) 2024 The asp-toolbox authors
# License: GNU Affero General Public License, Version 3
import enum
import io
import json
import logging
import sys
import typing as t
from collections import OrderedDict

import numpy as np
import yaml
from munch import munchify

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

trecord = t.List[t.Dict[str, t.Any]]


def setup_logging(level=logging.INFO):
    log_format = "%(asctime)-15s [%(name)-36s] %(levelname)-8s: %(message)s"
    logging.basicConfig(format=log_format, stream=sys.stderr, level=level)


def normalize_options(options):
    """
    Strip docopt decorations from option names, and provide an underscore variant.

        >>> options = normalize_options({"--rule-size": "64", "<functional>": "volume"})
        >>> options.rule_size, options["rule-size"], options.functional
        ('64', '64', 'volume')
    """
    normalized = {}
    for key, value in options.items():
        # Add primary variant.
        key = key.strip("--<>")  # noqa: B005
        normalized[key] = value

        # Add secondary variant.
        key = key.replace("-", "_")
        normalized[key] = value

    return munchify(normalized)


def yaml_dump(data, stream=None, Dumper=yaml.SafeDumper, **kwds):
    """
    Dump to YAML, keeping the order of `OrderedDict` items.
    """

    kwds["default_flow_style"] = False

    class OrderedDumper(Dumper):
        pass

    def _dict_representer(dumper, data):
        return dumper.represent_mapping(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, data.items())

    OrderedDumper.add_representer(OrderedDict, _dict_representer)
    return yaml.dump(data, stream, OrderedDumper, **kwds)


def format_dict(data) -> str:
    output = io.StringIO()
    for key, value in data.items():
        entry = f" {key:>16} {value}\n"
        output.write(entry)
    output.seek(0)
    return output.read().rstrip()


def plain(value):
    """
    Convert numpy scalars and arrays, enums and tuples into plain Python values.

        >>> plain(np.float64(0.5)), plain(np.arange(2)), plain((1, 2))
        (0.5, [0, 1], [1, 2])
    """
    if isinstance(value, dict):
        return OrderedDict((key, plain(item)) for key, item in value.items())
    if isinstance(value, (list, tuple)):
        return [plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, enum.Enum):
        return value.value
    return value


def records_to_json(records: trecord) -> str:
    """
    Serialize records to JSON. Floats go through `repr`, which is the shortest
    string reading back to the same double.

        >>> print(records_to_json([{"s": 0.1, "inside": True}]))
        [
            {
                "s": 0.1,
                "inside": true
            }
        ]
    """
    return json.dumps(plain(records), indent=4, sort_keys=False)


def records_to_csv(records: trecord, kind: str) -> str:
    """
    Serialize records to CSV, headed by a schema comment line.

        >>> print(records_to_csv([{"s": 0.1, "volume_diff": 1.0}], "convergence"), end="")
        # asp-toolbox convergence schema v1
        s,volume_diff
        0.10000000000000001,1
    """
    import pandas as pd

    header = f"# asp-toolbox {kind} schema v{SCHEMA_VERSION}\n"
    records = plain(records)
    if not records:
        return header
    frame = pd.DataFrame.from_records(records, columns=list(records[0].keys()))
    return header + frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")


def filter_with_sql(data: trecord, view_name: str, expression: str) -> trecord:
    """
    Filter data in "records" shape by SQL expression, using pandas and DuckDB.

    - https://duckdb.org/
    - https://pandas.pydata.org/

    Example::

        SELECT check_id, COUNT(*) AS failures
        FROM reports
        WHERE verdict = 'fail'
        GROUP BY check_id

    :param data: Data in "record" shape, aka. list of dictionaries
    :param expression: SQL expression
    :param view_name: View name the data is registered at, when querying per SQL.
    :return:
    """
    import duckdb
    import pandas as pd

    frame = pd.DataFrame.from_records(plain(data))
    connection = duckdb.connect()
    try:
        connection.register(view_name, frame)
        results = connection.sql(expression)
        return results.to_df().to_dict(orient="records")
    finally:
        connection.close()
