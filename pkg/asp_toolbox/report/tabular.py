# -*- coding: utf-8 -*-
# (c) 2024 The asp-toolbox authors
# License: GNU Affero General Public License, Version 3
from typing import List

from tabulate import tabulate

from asp_toolbox.util import plain


def get_table_format(output_format):
    """
    Derive the tabulate table format from an output format like "tabular:grid".

        >>> get_table_format("tabular:grid"), get_table_format("tabular"), get_table_format("json")
        ('grid', 'psql', None)
    """
    tablefmt = None
    if output_format is not None and output_format.startswith("tabular"):
        try:
            tablefmt = output_format.split(":")[1]
        except IndexError:
            tablefmt = "psql"

    return tablefmt


class TabularReport:
    """
    Render records as a table, one column per record key.
    """

    def __init__(self, kind: str, tblfmt: str = "psql"):
        self.kind = kind
        self.format = tblfmt

    def render(self, records: List) -> str:
        if not records:
            return f"No {self.kind} records."
        return tabulate(plain(records), headers="keys", tablefmt=self.format, floatfmt=".12g")
