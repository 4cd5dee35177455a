# -*- coding: utf-8 -*-
# (c) 2024 The asp-toolbox authors
# License: GNU Affero General Public License, Version 3
import logging
from pathlib import Path
from typing import List, Optional

from asp_toolbox.util import plain, records_to_csv, records_to_json, yaml_dump

log = logging.getLogger(__name__)


def serialize_results(output_format: str, results: List, kind: str = "report") -> str:
    if output_format == "json":
        output = records_to_json(results)

    elif output_format == "yaml":
        output = yaml_dump(plain(results))

    elif output_format == "csv":
        output = records_to_csv(results, kind)

    else:
        raise ValueError(f'Unknown output format "{output_format}"')

    return output


def output_results(output_format: str, results: List, kind: str = "report", output: Optional[str] = None):
    """
    Serialize records, and print them or write them to the file `output`.
    """
    text = serialize_results(output_format, results, kind)
    if output is None:
        print(text.rstrip("\n"))
        return
    path = Path(output)
    if not text.endswith("\n"):
        text += "\n"
    path.write_text(text, encoding="utf-8")
    log.info(f"Wrote {len(results)} {kind} records to {path}")
